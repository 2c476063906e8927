"""viscofrac: phase-field dynamic fracture in nonlinear viscoelastic solids.

A structured-grid simulator for Kelvin-Voigt type viscoelastic solids with
p-growth or strain-limiting constitutive response and a phase-field crack
approximation, solved by a staggered implicit scheme with per-step energy
verification.
"""

from .constitutive import (
    ConstitutiveError,
    ConstitutiveLaw,
    DegradationSpec,
    FourthOrderTensor,
    LawKind,
    Section,
    StrainBoundError,
    SymTensor,
    conjugate_potential,
    degradation,
    inverse_response,
    potential,
    response,
    response_jacobian,
)
from .driver import Finding, SimConfig, SimOutput, config_from_toml, run, validate
from .energy import EnergyLedger, EnergyReport
from .fields import Grid, boundary_load, hk_inner, internal_force, sym_gradient
from .momentum import MomentumStepInput, NewtonConfig, momentum_residual, momentum_step
from .phasefield import KKTReport, PhaseStepInput, kkt_residual, phasefield_step

__version__ = "0.1.0"

__all__ = [
    "ConstitutiveError", "ConstitutiveLaw", "DegradationSpec", "FourthOrderTensor",
    "LawKind", "Section", "StrainBoundError", "SymTensor",
    "conjugate_potential", "degradation", "inverse_response", "potential",
    "response", "response_jacobian",
    "Finding", "SimConfig", "SimOutput", "config_from_toml", "run", "validate",
    "EnergyLedger", "EnergyReport",
    "Grid", "boundary_load", "hk_inner", "internal_force", "sym_gradient",
    "MomentumStepInput", "NewtonConfig", "momentum_residual", "momentum_step",
    "KKTReport", "PhaseStepInput", "kkt_residual", "phasefield_step",
    "__version__",
]
