"""Objective functions and certificate verifiers for the mathematical benchmarks."""

from .autocorr import autocorr_c1_upper, autocorr_c2_lower, autocorr_c3_upper, min_overlap_objective
from .binpack import binpack_score, simulate_binpack
from .certificates import MalformedCertificate, UnknownProblem, verify_file, verify_text
from .geometry import (
    heilbronn_objective,
    ratio_objective,
    verify_circle_packing,
    verify_hexagon_packing,
    verify_kissing,
)
from .sumset import sumset_bound
from .tensor import matmul_tensor, round_to_half, score_tensor_search, verify_decomposition
from .uncertainty import uncertainty_bound

__all__ = [
    "MalformedCertificate", "UnknownProblem", "autocorr_c1_upper", "autocorr_c2_lower",
    "autocorr_c3_upper", "binpack_score", "heilbronn_objective", "matmul_tensor",
    "min_overlap_objective", "ratio_objective", "round_to_half", "score_tensor_search",
    "simulate_binpack", "sumset_bound", "uncertainty_bound", "verify_circle_packing",
    "verify_decomposition", "verify_file", "verify_hexagon_packing", "verify_kissing",
    "verify_text",
]
