"""Numerical laboratory for the spatially homogeneous Landau equation.

Maxwellian molecules (gamma = 0) and hard potentials (0 < gamma <= 1) on a
periodic velocity box, with diagnostics for conservation, ellipticity of the
convolved diffusion matrix, derivative-norm growth and Gevrey regularity.
"""

from .grid import VelocityGrid
from .kernel import CoefficientFields, KernelParams, assemble_coefficients
from .multiindex import MultiIndex
from .solver import LandauSolver, SolverConfig, SolverState

__all__ = [
    "CoefficientFields",
    "KernelParams",
    "LandauSolver",
    "MultiIndex",
    "SolverConfig",
    "SolverState",
    "VelocityGrid",
    "assemble_coefficients",
]

__version__ = "0.1.0"
