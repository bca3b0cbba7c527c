"""Planar Newtonian 4-body mechanics.

Configurations are ``(4, 2)`` arrays (rows are bodies); most functions also
broadcast over leading axes, so a stack of configurations ``(..., 4, 2)`` is
evaluated in one call.  The gravitational constant is 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import CollisionError, StepFailure

N_BODIES = 4
COLLISION_RADIUS = 1e-9

_I, _J = np.triu_indices(N_BODIES, k=1)


@dataclass(frozen=True)
class MassSystem:
    """Body masses with the partial sums used by Jacobi coordinates.

    ``mu[i]`` is ``m_1 + ... + m_{i+1}`` and ``reduced[i]`` is the reduced
    mass ``M_{i+2} = m_{i+2} mu_{i+1} / mu_{i+2}`` for bodies 2, 3, 4.
    """

    masses: tuple = (1.0, 1.0, 1.0, 1.0)

    def __post_init__(self):
        m = tuple(float(x) for x in self.masses)
        if len(m) != N_BODIES:
            raise ValueError(f"expected {N_BODIES} masses, got {len(m)}")
        if not all(np.isfinite(x) and x > 0 for x in m):
            raise ValueError(f"masses must be finite and positive: {m}")
        object.__setattr__(self, "masses", m)

    @property
    def m(self) -> np.ndarray:
        return np.asarray(self.masses)

    @property
    def mu(self) -> np.ndarray:
        return np.cumsum(self.m)

    @property
    def total(self) -> float:
        return float(self.mu[-1])

    @property
    def reduced(self) -> np.ndarray:
        mu = self.mu
        return self.m[1:] * mu[:-1] / mu[1:]


EQUAL_MASSES = MassSystem()


def _ms(ms: Optional[MassSystem]) -> MassSystem:
    return EQUAL_MASSES if ms is None else ms


@dataclass
class PhaseState:
    """Positions and velocities of the four bodies."""

    q: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.q = np.array(self.q, dtype=float).reshape(N_BODIES, 2)
        self.v = np.array(self.v, dtype=float).reshape(N_BODIES, 2)
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.v))):
            raise ValueError("phase state has non-finite entries")

    def momenta(self, ms: Optional[MassSystem] = None) -> np.ndarray:
        return _ms(ms).m[:, None] * self.v

    def flat(self) -> np.ndarray:
        return np.concatenate([self.q.ravel(), self.v.ravel()])

    @classmethod
    def from_flat(cls, y) -> "PhaseState":
        y = np.asarray(y, dtype=float)
        return cls(y[:8].reshape(4, 2), y[8:16].reshape(4, 2))

    def is_centered(self, ms: Optional[MassSystem] = None, tol: float = 1e-12) -> bool:
        m = _ms(ms).m[:, None]
        scale = 1.0 + np.abs(self.q).max() + np.abs(self.v).max()
        com = np.abs((m * self.q).sum(0)).max()
        mom = np.abs((m * self.v).sum(0)).max()
        return com <= tol * scale and mom <= tol * scale

    def centered(self, ms: Optional[MassSystem] = None) -> "PhaseState":
        """Shift to the center-of-mass frame."""
        ms = _ms(ms)
        m = ms.m[:, None]
        return PhaseState(
            self.q - (m * self.q).sum(0) / ms.total,
            self.v - (m * self.v).sum(0) / ms.total,
        )


def pair_vectors(config: np.ndarray):
    """Return ``(d, r)`` with ``d[..., k] = q_j - q_i`` for the six pairs ``i < j``."""
    q = np.asarray(config, dtype=float)
    d = q[..., _J, :] - q[..., _I, :]
    r = np.sqrt(np.einsum("...k,...k->...", d, d))
    return d, r


def min_pair_distance(config: np.ndarray) -> np.ndarray:
    return pair_vectors(config)[1].min(axis=-1)


def potential(config: np.ndarray, ms: Optional[MassSystem] = None) -> np.ndarray:
    """Newtonian potential ``U = sum_{i<j} m_i m_j / |q_i - q_j|`` (positive)."""
    m = _ms(ms).m
    _, r = pair_vectors(config)
    if np.any(r == 0.0):
        raise CollisionError("zero pairwise separation in potential")
    u = ((m[_I] * m[_J]) / r).sum(axis=-1)
    return u if u.ndim else float(u)


def accelerations(config: np.ndarray, ms: Optional[MassSystem] = None) -> np.ndarray:
    """Accelerations ``q''_i = sum_{j != i} m_j (q_j - q_i) / |q_j - q_i|^3``."""
    m = _ms(ms).m
    d, r = pair_vectors(config)
    if np.any(r == 0.0):
        raise CollisionError("zero pairwise separation in accelerations")
    f = d / (r**3)[..., None]
    acc = np.zeros(np.shape(config), dtype=float)
    for k, (i, j) in enumerate(zip(_I, _J)):
        acc[..., i, :] += m[j] * f[..., k, :]
        acc[..., j, :] -= m[i] * f[..., k, :]
    return acc


def acceleration_jacobian(config: np.ndarray, ms: Optional[MassSystem] = None) -> np.ndarray:
    """Jacobian ``d(acc)/d(q)`` of the flattened 8-vector, shape ``(8, 8)``."""
    m = _ms(ms).m
    d, r = pair_vectors(config)
    if np.any(r == 0.0):
        raise CollisionError("zero pairwise separation in acceleration_jacobian")
    jac = np.zeros((N_BODIES, 2, N_BODIES, 2))
    eye = np.eye(2)
    for k, (i, j) in enumerate(zip(_I, _J)):
        blk = eye / r[k] ** 3 - 3.0 * np.outer(d[k], d[k]) / r[k] ** 5
        jac[i, :, j, :] += m[j] * blk
        jac[i, :, i, :] -= m[j] * blk
        jac[j, :, i, :] += m[i] * blk
        jac[j, :, j, :] -= m[i] * blk
    return jac.reshape(8, 8)


def kinetic_energy(state: PhaseState, ms: Optional[MassSystem] = None) -> float:
    m = _ms(ms).m
    return float(0.5 * (m[:, None] * state.v**2).sum())


def total_energy(state: PhaseState, ms: Optional[MassSystem] = None) -> float:
    """Hamiltonian ``sum |p_i|^2 / (2 m_i) - U``."""
    return kinetic_energy(state, ms) - potential(state.q, ms)


def angular_momentum(state: PhaseState, ms: Optional[MassSystem] = None) -> float:
    m = _ms(ms).m
    q, v = state.q, state.v
    return float((m * (q[:, 0] * v[:, 1] - q[:, 1] * v[:, 0])).sum())


def _rhs(ms: MassSystem):
    def f(t, y):
        q = y[:8].reshape(4, 2)
        return np.concatenate([y[8:], accelerations(q, ms).ravel()])

    return f


def _rhs_variational(ms: MassSystem):
    def f(t, y):
        q = y[:8].reshape(4, 2)
        phi = y[16:].reshape(16, 16)
        jac = np.zeros((16, 16))
        jac[:8, 8:] = np.eye(8)
        jac[8:, :8] = acceleration_jacobian(q, ms)
        return np.concatenate([y[8:16], accelerations(q, ms).ravel(), (jac @ phi).ravel()])

    return f


@dataclass
class Trajectory:
    """Integrated samples with the integrator's dense interpolant.

    ``t`` is strictly monotone (increasing for forward integration);
    ``q``/``v`` have shape ``(n, 4, 2)``.
    """

    t: np.ndarray
    q: np.ndarray
    v: np.ndarray
    interpolant: Optional[object] = field(default=None, repr=False)
    order: int = 7

    def __len__(self) -> int:
        return len(self.t)

    def state(self, k: int) -> PhaseState:
        return PhaseState(self.q[k], self.v[k])

    def __call__(self, t):
        """Dense output at time(s) ``t``; returns ``(q, v)`` arrays."""
        if self.interpolant is None:
            raise ValueError("trajectory was built without dense output")
        y = np.asarray(self.interpolant(np.asarray(t, dtype=float)))
        y = np.moveaxis(y, 0, -1)
        return y[..., :8].reshape(y.shape[:-1] + (4, 2)), y[..., 8:16].reshape(y.shape[:-1] + (4, 2))

    @property
    def final(self) -> PhaseState:
        return self.state(-1)


def _collision_event(t, y):
    return min_pair_distance(y[:8].reshape(4, 2)) - COLLISION_RADIUS


_collision_event.terminal = True
_collision_event.direction = -1


def integrate_flow(
    state0: PhaseState,
    ms: Optional[MassSystem] = None,
    t_span: Sequence[float] = (0.0, 1.0),
    abs_tol: float = 1e-12,
    rel_tol: float = 1e-12,
    t_eval=None,
    dense: bool = True,
) -> Trajectory:
    """Integrate Newton's equations with an adaptive embedded Runge-Kutta pair.

    Uses the Dormand-Prince 8(5,3) pair with its order-7 dense interpolant.
    Backward integration is allowed (``t_span[1] < t_span[0]``).

    Raises
    ------
    CollisionError
        If two bodies come within ``COLLISION_RADIUS``.
    StepFailure
        If the step size underflows.
    """
    ms = _ms(ms)
    for tol in (abs_tol, rel_tol):
        if not 0.0 < tol <= 1e-2:
            raise ValueError(f"tolerances must lie in (0, 1e-2], got {tol}")
    if min_pair_distance(state0.q) < COLLISION_RADIUS:
        raise CollisionError("initial state is at a collision")
    sol = solve_ivp(
        _rhs(ms),
        tuple(float(x) for x in t_span),
        state0.flat(),
        method="DOP853",
        rtol=rel_tol,
        atol=abs_tol,
        t_eval=t_eval,
        dense_output=dense,
        events=_collision_event,
    )
    if sol.status == 1:
        raise CollisionError(f"collision at t = {sol.t_events[0][0]:.6g}")
    if sol.status != 0:
        raise StepFailure(sol.message)
    y = sol.y.T
    n = len(sol.t)
    return Trajectory(
        t=sol.t,
        q=y[:, :8].reshape(n, 4, 2),
        v=y[:, 8:].reshape(n, 4, 2),
        interpolant=sol.sol,
    )


def integrate_with_stm(
    state0: PhaseState,
    ms: Optional[MassSystem] = None,
    t_final: float = 1.0,
    tol: float = 1e-12,
):
    """Flow to ``t_final`` together with the 16x16 state transition matrix.

    Returns ``(final_state, stm)``; the state vector ordering is
    ``(q.ravel(), v.ravel())``.
    """
    ms = _ms(ms)
    y0 = np.concatenate([state0.flat(), np.eye(16).ravel()])
    sol = solve_ivp(
        _rhs_variational(ms),
        (0.0, float(t_final)),
        y0,
        method="DOP853",
        rtol=tol,
        atol=tol,
    )
    if sol.status != 0:
        raise StepFailure(sol.message)
    y = sol.y[:, -1]
    return PhaseState.from_flat(y[:16]), y[16:].reshape(16, 16)
