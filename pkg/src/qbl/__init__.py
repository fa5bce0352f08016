"""Numerical toolkit for dynamical metastability in one-dimensional
bulk-translationally-invariant quadratic bosonic Lindbladians."""

from .model import (
    BkcRealHop,
    CoupledHN,
    CouplingStencil,
    GhcTrb,
    KOC,
    build_stencil,
    derive_hn_params,
    ghc_critical_gamma,
    model_from_config,
)
from .operators import OBC, PBC, assemble, bloch, symbol

__version__ = "0.1.0"

__all__ = [
    "BkcRealHop",
    "CoupledHN",
    "CouplingStencil",
    "GhcTrb",
    "KOC",
    "OBC",
    "PBC",
    "assemble",
    "bloch",
    "build_stencil",
    "derive_hn_params",
    "ghc_critical_gamma",
    "model_from_config",
    "symbol",
]
