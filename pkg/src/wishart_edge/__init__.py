"""Smallest-eigenvalue statistics of real and complex correlated Wishart ensembles.

Exact finite-size gap probabilities and smallest-eigenvalue densities
(determinant and Pfaffian kernels), their hard-edge universal limits
(Bessel kernels on the scale u = 4 p eta t), and independent Monte Carlo
oracles to validate both.
"""

from .exact import (
    EnsembleParams,
    KernelSpec,
    gap_exact,
    gap_exact_curve,
    kernel_entry,
    pmin_exact,
    pmin_exact_curve,
)
from .linalg import cholesky, log_det, pfaffian, smallest_eigenvalue
from .microscopic import (
    LocalScale,
    MicroParams,
    local_scale,
    micro_gap,
    micro_gap_curve,
    micro_pmin,
    micro_pmin_curve,
)
from .montecarlo import (
    DualityCheck,
    McConfig,
    McEstimate,
    McRun,
    duality_check,
    gap_dual_mc,
    ks_distance,
    ks_two_sample,
    sample_smallest,
)
from .special_functions import LogSignedValue, bessel_i, heaviside, log_bessel_i, log_factorial
from .spectrum import CorrelationSpectrum, build_spectrum

__version__ = "0.1.0"

__all__ = [
    "CorrelationSpectrum",
    "DualityCheck",
    "EnsembleParams",
    "KernelSpec",
    "LocalScale",
    "LogSignedValue",
    "McConfig",
    "McEstimate",
    "McRun",
    "MicroParams",
    "bessel_i",
    "build_spectrum",
    "cholesky",
    "duality_check",
    "gap_dual_mc",
    "gap_exact",
    "gap_exact_curve",
    "heaviside",
    "kernel_entry",
    "ks_distance",
    "ks_two_sample",
    "local_scale",
    "log_bessel_i",
    "log_det",
    "log_factorial",
    "micro_gap",
    "micro_gap_curve",
    "micro_pmin",
    "micro_pmin_curve",
    "pfaffian",
    "pmin_exact",
    "pmin_exact_curve",
    "sample_smallest",
    "smallest_eigenvalue",
    "__version__",
]
