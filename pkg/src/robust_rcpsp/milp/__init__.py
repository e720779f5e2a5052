"""Linear models, file formats and external solver dispatch."""
from .backends import (BackendConfig, SolverError, SolverResult, cbc_backend, default_backend, highs_backend,
                       invoke_solver, load_backend_config)
from .build import (WarmStartError, apply_warm_start, big_m_default, build_adj_model, build_anch_model,
                    build_fixed_sequence_model, build_flow_model, pair_set)
from .extract import ExtractedSolution, ExtractionError, extract_solution
from .formats import FormatError, emit_lp, emit_mps, parse_lp, parse_mps
from .model import BINARY, CONTINUOUS, Constraint, MipModel, Variable, check_assignment

__all__ = [
    "BINARY", "CONTINUOUS", "BackendConfig", "Constraint", "ExtractedSolution", "ExtractionError",
    "FormatError", "MipModel", "SolverError", "SolverResult", "Variable", "WarmStartError",
    "apply_warm_start", "big_m_default", "build_adj_model", "build_anch_model", "build_fixed_sequence_model",
    "build_flow_model", "cbc_backend", "check_assignment", "default_backend", "emit_lp", "emit_mps",
    "extract_solution", "highs_backend", "invoke_solver", "load_backend_config", "pair_set", "parse_lp",
    "parse_mps",
]
