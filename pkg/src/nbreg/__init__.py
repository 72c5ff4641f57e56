"""Regularized few-body dynamics: Levi-Civita charts, periodic collision
orbits and their linear stability."""

from .errors import *  # noqa: F401,F403
from .integrate import Event, IntegratorConfig, Termination, Trajectory, integrate, integrate_variational
from .nbody import MassVector, NBodyField, PhaseState, integrals, simulate, singularity_diagnostics
from .orbits import (PeriodicOrbit, continue_family, cols4bp_orbit, family, pps4bp_collinear_orbit,
                     pps4bp_sbc_orbit, rescale_orbit, schubart_orbit)
from .problems import RegularizedState, make_problem
from .regularize import col2bp_field, col2bp_solve, levi_civita, levi_civita_inverse
from .stability import Classification, find_boundary, orbit_stability, stability_report, sweep

__version__ = "0.1.0"
