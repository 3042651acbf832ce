"""Separability testing with symmetric extensions.

The package is layered bottom-up: :mod:`symext.linalg` (tensor-product
linear algebra), :mod:`symext.states` (test states), :mod:`symext.sdp`
(interior-point solver), :mod:`symext.hierarchy` (extension programs) and
:mod:`symext.solver` (decision procedures and oracles).
"""

from ._ext import BACKEND
from .hierarchy import (
    ExtensionOptions,
    ExtendibilityReport,
    build_extension_sdp,
    check_k_extendible,
    ckmr_bound,
    disentangler,
    extract_witness,
    optimize_over_extendible,
    required_k,
)
from .linalg import DensityMatrix, DimSpec, HermitianOp, partial_trace, partial_transpose, tensor
from .solver import (
    Decision,
    Verdict,
    bss,
    bss_bruteforce,
    cmi_inequality_check,
    meanfield_ground_energy,
    nearest_ppt_distance,
    ppt_check,
    wsep,
)

__version__ = "0.1.0"
MATRIX_FORMAT_VERSION = 1
RESULT_FORMAT_VERSION = 1

__all__ = [
    "BACKEND",
    "Decision",
    "DensityMatrix",
    "DimSpec",
    "ExtendibilityReport",
    "ExtensionOptions",
    "HermitianOp",
    "Verdict",
    "bss",
    "bss_bruteforce",
    "build_extension_sdp",
    "check_k_extendible",
    "ckmr_bound",
    "cmi_inequality_check",
    "disentangler",
    "extract_witness",
    "meanfield_ground_energy",
    "nearest_ppt_distance",
    "optimize_over_extendible",
    "partial_trace",
    "partial_transpose",
    "ppt_check",
    "required_k",
    "tensor",
    "wsep",
]
