"""Exception hierarchy shared by all solver modules."""


class SPBCError(Exception):
    """Base class for every error raised by the package."""


class CollisionError(SPBCError):
    """Two bodies coincide (or come closer than the guard radius)."""


class StepFailure(SPBCError):
    """The adaptive integrator could not advance (step size underflow)."""


class DegenerateAngle(SPBCError, ValueError):
    """Rotation angle at which the boundary templates degenerate (pi/4, pi/2, 3pi/4)."""


class CollisionOnSegment(CollisionError):
    """The straight test path passes through a collision."""


class NoSignChange(SPBCError):
    """Bisection bracket without a sign change."""


class OutOfDomain(SPBCError, ValueError):
    """Evaluation time outside [0, T]."""


class NearCollision(CollisionError):
    """Pairwise distance at a quadrature node fell below the guard."""


class CollisionPath(CollisionError):
    """Every inner restart ran into the near-collision guard."""


class Stalled(SPBCError):
    """Outer minimization exhausted its evaluation budget."""


class JacobianSingular(SPBCError):
    """Gauss-Newton Jacobian is numerically rank deficient."""


class NotConverged(SPBCError):
    """Iteration budget exhausted before the residual tolerance was met."""


class PolarSingularity(SPBCError):
    """A Jacobi vector vanished, so polar coordinates are undefined."""


class NotPeriodic(SPBCError):
    """Orbit does not close within tolerance over the requested period."""


class NonSymplectic(SPBCError):
    """Monodromy matrix fails the symplecticity check."""
