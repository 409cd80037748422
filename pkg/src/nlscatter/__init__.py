"""Time- and frequency-gated nonlinear light scattering from superposition states."""

from .model import (
    DensityMatrix,
    LevelScheme,
    PreparedState,
    PulseSpec,
    band_filter,
    generate_synthetic_manifold,
    load_level_scheme,
    raman_prepare,
    rho_from_kappa,
    save_level_scheme,
)
from .units import UNITS, UnitSystem

__all__ = [
    "DensityMatrix",
    "LevelScheme",
    "PreparedState",
    "PulseSpec",
    "UNITS",
    "UnitSystem",
    "band_filter",
    "generate_synthetic_manifold",
    "load_level_scheme",
    "raman_prepare",
    "rho_from_kappa",
    "save_level_scheme",
]
