"""Four-body periodic orbits from minimization over parametrized boundary configurations."""

__version__ = "0.1.0"

from .boundary import BoundaryParams, RotationAngle, circular_action, test_path_action
from .dynamics import EQUAL_MASSES, MassSystem, PhaseState, integrate_flow
from .errors import SPBCError

__all__ = [
    "BoundaryParams", "RotationAngle", "circular_action", "test_path_action",
    "EQUAL_MASSES", "MassSystem", "PhaseState", "integrate_flow", "SPBCError",
]
