"""
Contact Swirl Solver - steady subsonic axisymmetric flow with swirl and a free
contact boundary in a cylinder.

Core Components:
- ContactSolver: nested fixed-point driver (elliptic, free boundary, transport)
- Diagnostics: conservation, interface and far-field checks of a solution
- Runner: solves, sigma sweeps and diagnostics-only reruns with file output
- Profiles: entrance data families (bump, random, table)
"""

__version__ = "0.1.0"

from .core.config import RunConfig, parse_config
from .core.runner import Runner, run_and_write
from .core.solver import (
    ContactSolver,
    SolutionState,
    SolveReport,
    SolverConfig,
    solve_full,
)
from .errors import ContactSwirlError
from .profiles import PROFILE_FAMILIES, create_profile

__all__ = [
    "ContactSolver",
    "ContactSwirlError",
    "PROFILE_FAMILIES",
    "RunConfig",
    "Runner",
    "SolutionState",
    "SolveReport",
    "SolverConfig",
    "create_profile",
    "parse_config",
    "run_and_write",
    "solve_full",
    "__version__",
]
