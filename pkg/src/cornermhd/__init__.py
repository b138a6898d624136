"""Numerical toolkit for 2D compressible ideal MHD on corner domains.

Subpackages: geometry (domains, grids, frames, curvature matrices),
calculus (discrete operators and anisotropic norms), elliptic (Poisson /
Helmholtz / div-curl on the square), linear (linearized MHD solver),
nonlinear (equation of state, Picard iteration), singularity (sector
counterexample lab), cli (config-driven experiment runner).
"""

from .eos import EosModel, affine, eos_eval, ideal_gas
from .errors import (
    ConfigError,
    DivergenceError,
    DomainError,
    EosDomainError,
    NumericalError,
    PreconditionError,
    SingularGeometryError,
    SolverFailure,
    ToolkitError,
)
from .fields import NormReport, ScalarField, VectorField
from .geometry import (
    DomainSpec,
    Grid,
    PhiPair,
    TangentialFrame,
    boundary_normal,
    h_matrices,
    make_grid,
    tangential_frame,
)

__all__ = [
    "ConfigError",
    "DivergenceError",
    "DomainError",
    "DomainSpec",
    "EosDomainError",
    "EosModel",
    "Grid",
    "NormReport",
    "NumericalError",
    "PhiPair",
    "PreconditionError",
    "ScalarField",
    "SingularGeometryError",
    "SolverFailure",
    "TangentialFrame",
    "ToolkitError",
    "VectorField",
    "affine",
    "boundary_normal",
    "eos_eval",
    "h_matrices",
    "ideal_gas",
    "make_grid",
    "tangential_frame",
]

__version__ = "0.1.0"
