"""Command line, benchmark harness and reporting."""
from .main import build_parser, main

__all__ = ["build_parser", "main"]
