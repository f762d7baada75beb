"""Direct and inverse scattering for a half-line Sturm-Liouville problem with
a piecewise-constant density and a spectral-parameter boundary condition."""
from .errors import DiscScatError, NumericalError, ValidationError
from .kernel import TransitionTable, f0s_transform, f_eval, fs_eval
from .marchenko import (KernelTable, ReconstructionReport, inverse_scattering, reconstruct_potential,
                        roundtrip, solve_kernel_family, solve_main_equation_at_x)
from .model import (BoundaryCoefficients, DensityProfile, NumericsConfig, PotentialSpec,
                    ScatteringData, validate_boundary)
from .scattering import forward_run, forward_scattering, s_zero

__version__ = "0.1.0"

__all__ = [
    "BoundaryCoefficients", "DensityProfile", "DiscScatError", "KernelTable", "NumericalError",
    "NumericsConfig", "PotentialSpec", "ReconstructionReport", "ScatteringData", "TransitionTable",
    "ValidationError", "f0s_transform", "f_eval", "forward_run", "forward_scattering", "fs_eval",
    "inverse_scattering", "reconstruct_potential", "roundtrip", "s_zero", "solve_kernel_family",
    "solve_main_equation_at_x", "validate_boundary",
]
