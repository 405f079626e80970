"""Monolithic Eulerian FEM for 2D fluid-structure interaction with contact.

Library layout:

- ``patchmesh``  : fixed patch grids, interface-resolving subdivision
- ``spaces``     : equal-order vertex spaces, quadrature, projections
- ``tracking``   : interface advection and gap bookkeeping
- ``forms``      : Stokes / elasticity / Nitsche coupling / stabilisation
- ``contact``    : max-bracket contact operator, flux variants, assembly
- ``solver``     : dG(0) time loop with semismooth Newton
- ``functionals``: reported quantities of interest, CSV output
- ``scenarios``  : benchmark configurations
- ``cli``        : ``python -m fsicontact run|sweep ...``
"""

from .patchmesh import (
    FLUID, SOLID, ARTIFICIAL, DEAD,
    PatchMesh, InterfaceGraph, SubdividedMesh,
    build_patch_mesh, subdivide, flat_interface,
    MeshConfigError, TopologyError,
)
from .spaces import DofHandler, Quadrature, State, interpolate, project_velocity
from .tracking import advance_interface, gap_function, minimal_distance
from .forms import MaterialParams, NitscheParams
from .contact import ContactConfig, p_gamma
from .solver import SolverConfig, newton_solve, run
from .scenarios import Scenario, builtin_scenario

__all__ = [
    "FLUID", "SOLID", "ARTIFICIAL", "DEAD",
    "PatchMesh", "InterfaceGraph", "SubdividedMesh",
    "build_patch_mesh", "subdivide", "flat_interface",
    "MeshConfigError", "TopologyError",
    "DofHandler", "Quadrature", "State", "interpolate", "project_velocity",
    "advance_interface", "gap_function", "minimal_distance",
    "MaterialParams", "NitscheParams",
    "ContactConfig", "p_gamma",
    "SolverConfig", "newton_solve", "run",
    "Scenario", "builtin_scenario",
]
