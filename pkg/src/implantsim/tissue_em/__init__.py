"""Layered-tissue dielectric models and 1D plane-wave propagation."""

from .dielectric import (
    VACUUM, DebyeFit, DielectricModel, complex_permittivity, conductivity, fit_debye,
    intrinsic_impedance, load_tissue_presets, propagation_constant, save_tissue_presets, tissue,
)
from .fdtd import CwSource, Fdtd1dConfig, GaussianPulse, fdtd1d_run
from .layers import (
    LayerStack, PropagationResult, TissueLayer, homogeneous_stack, muscle_stack, skin_fat_muscle_stack,
)
from .tmm import (
    field_at, loss_at_depth, power_flux, reflection_transmission, transfer_matrix_field,
)

__all__ = [
    "VACUUM", "DebyeFit", "DielectricModel", "complex_permittivity", "conductivity", "fit_debye",
    "intrinsic_impedance", "load_tissue_presets", "propagation_constant", "save_tissue_presets",
    "tissue", "CwSource", "Fdtd1dConfig", "GaussianPulse", "fdtd1d_run", "LayerStack",
    "PropagationResult", "TissueLayer", "homogeneous_stack", "muscle_stack", "skin_fat_muscle_stack",
    "field_at", "loss_at_depth", "power_flux", "reflection_transmission", "transfer_matrix_field",
]
