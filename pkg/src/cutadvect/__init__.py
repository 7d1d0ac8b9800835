"""Unfitted DG advection of a conserved quantity on an evolving curve.

One time step of surface-driven advection: the moving curve is the zero
set of a level-set function, the swept region between the old and new
curve is reconstructed as cut cells of a fixed Cartesian background mesh,
and an upwind-stabilized DG system transports the old interface data to
the new interface while conserving total mass exactly.
"""

from .grid import CartesianGrid, Face
from .levelset import (Affine1D, DiscreteLevelSet, LevelSetField,
                       ShrinkingCircle, TranslatingCircle, VelocityMode,
                       discrete_velocity_weight, interpolate,
                       make_weight_provider)
from .cutgeom import (CutCell, CutFace, DomainReconstruction, EmptyDomainError,
                      InterfaceSegment, build_domain, classify_cell,
                      polygon_quadrature, reconstruct_cell, segment_quadrature)
from .scheme import (AssembledSystem, DGSpace, SchemeParams, assemble,
                     assemble_blocks, error_norms, interface_mass,
                     old_data_mass, solve_step, upwind_side)
from .oned import OneDConfig, solve_aligned, solve_extended
from .cli import RunConfig, parse_config, run_convergence, run_single

__all__ = [
    "Affine1D", "AssembledSystem", "CartesianGrid", "CutCell", "CutFace",
    "DGSpace", "DiscreteLevelSet", "DomainReconstruction", "EmptyDomainError",
    "Face", "InterfaceSegment", "LevelSetField", "OneDConfig", "RunConfig",
    "SchemeParams", "ShrinkingCircle", "TranslatingCircle", "VelocityMode",
    "assemble", "assemble_blocks", "build_domain", "classify_cell",
    "discrete_velocity_weight", "error_norms", "interface_mass", "interpolate",
    "make_weight_provider", "old_data_mass", "parse_config",
    "polygon_quadrature", "reconstruct_cell", "run_convergence", "run_single",
    "segment_quadrature", "solve_aligned", "solve_extended", "solve_step",
    "upwind_side",
]
