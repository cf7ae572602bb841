"""Non-disturbing which-slit detection of incompatible properties.

Finite-dimensional models on ``K (x) C^2``, checks for ESW-type detectors,
and a seeded double-slit simulator.
"""

from .linalg import ResidualReport, commutator, is_projection, tensor_ket, tensor_operator
from .model import TwoSlitModel, build_four_mode_model, build_lplus, build_simple_model, parse_model
from .verifier import (
    check_correlation_chain,
    check_direct_correlation,
    check_esw_detector,
    check_incompatibility,
    synthesize_detectors,
)

__version__ = "0.1.0"
