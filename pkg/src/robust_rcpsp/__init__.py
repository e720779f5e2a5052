"""Robust resource-constrained project scheduling: anchored baselines and adjustable sequencing."""

__version__ = "0.1.0"
