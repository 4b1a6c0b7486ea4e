"""Direct and inverse spectral problems for Dirac systems with L2 potentials."""

from .characterization import CheckReport, check_spectral_conditions, parseval_defect, semiaxis_check
from .direct import (
    BetaGamma,
    Potential,
    WeylDirectionP,
    beta_gamma,
    canonical_fundamental,
    fundamental_solution,
    spectral_transform,
    weyl_function,
)
from .errors import (
    CharacterizationFailure,
    DiracSpecError,
    NotHerglotz,
    NotPositiveDefinite,
    ParseError,
    SingularBlock,
    SingularDenominator,
)
from .herglotz import Atom, SpectralMeasure, herglotz_eval, stieltjes_invert
from .inverse import RecoveryRoute, inverse_pipeline, solve_inverse
from .numerics import UniformGrid
from .pw_sampling import delta_capacity, pw_sampling_report, pwl_sampling_certificate
from .structured import build_snode, factorize_snode, transfer_matrix

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "BetaGamma",
    "CharacterizationFailure",
    "CheckReport",
    "DiracSpecError",
    "NotHerglotz",
    "NotPositiveDefinite",
    "ParseError",
    "Potential",
    "RecoveryRoute",
    "SingularBlock",
    "SingularDenominator",
    "SpectralMeasure",
    "UniformGrid",
    "WeylDirectionP",
    "beta_gamma",
    "build_snode",
    "canonical_fundamental",
    "check_spectral_conditions",
    "delta_capacity",
    "factorize_snode",
    "fundamental_solution",
    "herglotz_eval",
    "inverse_pipeline",
    "parseval_defect",
    "pw_sampling_report",
    "pwl_sampling_certificate",
    "semiaxis_check",
    "solve_inverse",
    "spectral_transform",
    "stieltjes_invert",
    "transfer_matrix",
    "weyl_function",
]
