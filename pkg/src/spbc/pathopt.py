"""Fixed-endpoint paths on [0, T] and minimization of their action.

A path is the straight segment between its endpoints, plus a fixed cubic
correction matching prescribed endpoint accelerations, plus a sine series::

    q(t) = Qs + s (Qe - Qs) + T^2 (A0 g0(s) + A1 g1(s)) + sum_k c_k sin(k pi s),  s = t/T

The cubics ``g0, g1`` vanish at both ends and have ``g0'' = 1 - s`` and
``g1'' = s``.  With ``A0, A1`` set to the Newtonian accelerations of the
endpoint configurations the remainder has zero curvature at the ends, and
its sine coefficients decay fast enough for the endpoint velocities to be
accurate at modest ``K``.  With ``A0 = A1 = 0`` this is the plain
line-plus-sine basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional

import numpy as np

from .boundary import BoundaryParams, rotation_matrix
from .dynamics import MassSystem, _ms, accelerations, min_pair_distance, pair_vectors
from .errors import CollisionError, CollisionPath, NearCollision, OutOfDomain
from .optimize import bfgs

NODE_GUARD = 1e-6
SEPARATION_FLOOR = 1e-3


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre nodes and weights mapped to ``[0, T]``."""

    nodes: np.ndarray
    weights: np.ndarray
    T: float

    @property
    def M(self) -> int:
        return len(self.nodes)


@lru_cache(maxsize=32)
def gauss_legendre(M: int = 512, T: float = 1.0) -> QuadratureRule:
    if M < 1:
        raise ValueError(f"need at least one node, got {M}")
    x, w = np.polynomial.legendre.leggauss(M)
    nodes = 0.5 * T * (x + 1.0)
    weights = 0.5 * T * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes, weights, float(T))


def _g(s):
    g0 = (-(s**3) + 3 * s**2 - 2 * s) / 6.0
    g1 = (s**3 - s) / 6.0
    return g0, g1


def _dg(s):
    return (-3 * s**2 + 6 * s - 2) / 6.0, (3 * s**2 - 1) / 6.0


@dataclass(frozen=True)
class DiscretePath:
    """Immutable path with pinned endpoints; ``coeffs`` has shape ``(4, 2, K)``."""

    qstart: np.ndarray
    qend: np.ndarray
    T: float
    coeffs: np.ndarray
    end_accel: Optional[np.ndarray] = None
    bp: Optional[BoundaryParams] = field(default=None, compare=False)
    info: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        for name in ("qstart", "qend"):
            arr = np.array(getattr(self, name), dtype=float).reshape(4, 2)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 3 or c.shape[:2] != (4, 2) or c.shape[2] < 1:
            raise ValueError(f"coeffs must have shape (4, 2, K), got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if self.end_accel is not None:
            ea = np.array(self.end_accel, dtype=float).reshape(2, 4, 2)
            ea.setflags(write=False)
            object.__setattr__(self, "end_accel", ea)
        object.__setattr__(self, "T", float(self.T))

    @classmethod
    def from_boundary(cls, bp: BoundaryParams, K: int = 32, coeffs=None, end_accel=None):
        c = np.zeros((4, 2, K)) if coeffs is None else coeffs
        return cls(bp.qstart, bp.qend, bp.T, c, end_accel, bp)

    @property
    def K(self) -> int:
        return self.coeffs.shape[2]

    def with_coeffs(self, coeffs) -> "DiscretePath":
        return replace(self, coeffs=coeffs, info={})

    def rotated(self, phi: float) -> "DiscretePath":
        """Rotate endpoints, corrections and coefficients by ``R(phi)``."""
        R = rotation_matrix(phi)
        ea = None if self.end_accel is None else self.end_accel @ R
        c = np.einsum("idk,de->iek", self.coeffs, R)
        return DiscretePath(self.qstart @ R, self.qend @ R, self.T, c, ea, None)

    def __call__(self, t):
        return eval_path(self, t)


def _frame(path: DiscretePath, t: np.ndarray):
    """Positions and velocities of the fixed part (line + cubic) at times ``t``."""
    s = (t / path.T)[..., None, None]
    dq = path.qend - path.qstart
    # convex form keeps both endpoints bit-exact
    q = (1.0 - s) * path.qstart + s * path.qend
    v = np.broadcast_to(dq / path.T, q.shape).copy()
    if path.end_accel is not None:
        A0, A1 = path.end_accel
        g0, g1 = _g(s)
        d0, d1 = _dg(s)
        q = q + path.T**2 * (A0 * g0 + A1 * g1)
        v = v + path.T * (A0 * d0 + A1 * d1)
    return q, v


def eval_path(path: DiscretePath, t):
    """Positions ``(..., 4, 2)`` and velocities at time(s) ``t`` in ``[0, T]``."""
    t = np.asarray(t, dtype=float)
    slack = 1e-12 * path.T
    if np.any(t < -slack) or np.any(t > path.T + slack) or not np.all(np.isfinite(t)):
        raise OutOfDomain(f"times must lie in [0, {path.T}]")
    t = np.clip(t, 0.0, path.T)
    q, v = _frame(path, t)
    kpi = np.pi * np.arange(1, path.K + 1) / path.T
    arg = t[..., None] * kpi
    sn, cs = np.sin(arg), np.cos(arg)
    if t.ndim == 0:
        # sin(K pi) is ~1e-16, not zero; keep the endpoints exact
        if t == 0.0 or t == path.T:
            sn = np.zeros_like(sn)
    else:
        sn[(t == 0.0) | (t == path.T)] = 0.0
    q = q + np.einsum("idk,...k->...id", path.coeffs, sn)
    v = v + np.einsum("idk,...k->...id", path.coeffs, cs * kpi)
    return q, v


@lru_cache(maxsize=16)
def _basis(K: int, M: int, T: float):
    quad = gauss_legendre(M, T)
    kpi = np.pi * np.arange(1, K + 1) / T
    arg = np.outer(quad.nodes, kpi)
    S = np.sin(arg)
    C = np.cos(arg) * kpi
    S.setflags(write=False)
    C.setflags(write=False)
    return S, C


def _nodes_state(path: DiscretePath, quad: QuadratureRule):
    if abs(quad.T - path.T) > 1e-14 * path.T:
        raise ValueError("quadrature interval does not match the path")
    S, C = _basis(path.K, quad.M, quad.T)
    q0, v0 = _frame(path, quad.nodes)
    q = q0 + np.einsum("idk,mk->mid", path.coeffs, S)
    v = v0 + np.einsum("idk,mk->mid", path.coeffs, C)
    return q, v, S, C


def _guard(q, guard):
    if guard is not None:
        r = min_pair_distance(q).min()
        if r <= guard:
            raise NearCollision(f"pair distance {r:.3g} at a quadrature node")


def _value(q, v, w, m):
    _, r = pair_vectors(q)
    mm = m[np.triu_indices(4, 1)[0]] * m[np.triu_indices(4, 1)[1]]
    kin = 0.5 * np.einsum("m,i,mid->", w, m, v * v)
    pot = w @ (mm / r).sum(axis=1)
    return float(kin + pot)


def action_value(
    path: DiscretePath,
    ms: Optional[MassSystem] = None,
    quad: Optional[QuadratureRule] = None,
    guard: Optional[float] = NODE_GUARD,
) -> float:
    """Quadrature value of the kinetic-plus-potential action of ``path``."""
    m = _ms(ms).m
    quad = quad if quad is not None else gauss_legendre(512, path.T)
    q, v, _, _ = _nodes_state(path, quad)
    _guard(q, guard)
    return _value(q, v, quad.weights, m)


def value_and_gradient(path, ms=None, quad=None, guard=NODE_GUARD):
    m = _ms(ms).m
    quad = quad if quad is not None else gauss_legendre(512, path.T)
    q, v, S, C = _nodes_state(path, quad)
    _guard(q, guard)
    f = _value(q, v, quad.weights, m)
    # dU/dq_i = m_i * acc_i
    wm = quad.weights[:, None, None] * m[None, :, None]
    g = np.einsum("mid,mk->idk", wm * v, C) + np.einsum(
        "mid,mk->idk", wm * accelerations(q, ms), S
    )
    return f, g


def action_gradient(path, ms=None, quad=None, guard=NODE_GUARD) -> np.ndarray:
    """Exact derivative of :func:`action_value` with respect to ``path.coeffs``."""
    return value_and_gradient(path, ms, quad, guard)[1]


def min_separation(path: DiscretePath, samples: int = 1001) -> float:
    """Smallest pair distance over ``samples`` equally spaced times."""
    if samples < 2:
        raise ValueError("need at least two samples")
    q, _ = eval_path(path, np.linspace(0.0, path.T, samples))
    return float(min_pair_distance(q).min())


@dataclass
class InnerOptions:
    K: int = 32
    M: int = 512
    gtol: float = 1e-8
    max_iter: int = 3000
    restarts: int = 3
    jitter: float = 1e-2
    seed: int = 0
    endpoint_correction: bool = True


def _fit_coeffs(c, K):
    if c is None:
        return np.zeros((4, 2, K))
    c = np.asarray(c, dtype=float)
    out = np.zeros((4, 2, K))
    n = min(K, c.shape[2])
    out[..., :n] = c[..., :n]
    return out


def inner_minimize(
    bp: BoundaryParams,
    ms: Optional[MassSystem] = None,
    opts: Optional[InnerOptions] = None,
    warm=None,
):
    """Minimize the action over paths joining ``bp.qstart`` to ``bp.qend``.

    ``warm`` is an optional coefficient array to start from.  Returns
    ``(path, value)``; convergence details are in ``path.info``.

    Raises
    ------
    CollisionPath
        If every restart ends closer than ``SEPARATION_FLOOR`` to a collision.
    """
    ms = _ms(ms)
    opts = opts or InnerOptions()
    quad = gauss_legendre(opts.M, bp.T)
    m = ms.m
    K = opts.K
    try:
        ea = np.stack([accelerations(bp.qstart, ms), accelerations(bp.qend, ms)])
    except CollisionError as exc:
        raise CollisionPath(f"endpoint configuration collides: {exc}") from exc
    if not np.all(np.isfinite(ea)):
        raise CollisionPath("endpoint configuration collides")
    base = DiscretePath.from_boundary(bp, K, end_accel=ea if opts.endpoint_correction else None)

    # y = c * k pi sqrt(m / 2T) makes the kinetic Hessian the identity
    kpi = np.pi * np.arange(1, K + 1) / bp.T
    scale = np.sqrt(m * bp.T / 2.0)[:, None, None] * kpi[None, None, :]
    sqm = np.sqrt(m)[:, None, None]
    sqm2 = float(m.sum())

    def project(y):
        y = y.reshape(4, 2, K)
        return (y - sqm * (sqm * y).sum(0) / sqm2).ravel()

    def fg(y):
        c = y.reshape(4, 2, K) / scale
        try:
            f, g = value_and_gradient(base.with_coeffs(c), ms, quad)
        except CollisionError:
            return np.inf, np.full(y.size, np.nan)
        return f, (g / scale).ravel()

    def gnorm(gy):
        return np.abs(gy.reshape(4, 2, K) * scale).max()

    rng = np.random.default_rng(opts.seed)
    starts = [_fit_coeffs(warm, K)]
    if warm is not None:
        starts.append(np.zeros((4, 2, K)))
    best = None
    attempts = []
    for attempt in range(opts.restarts + 1):
        if attempt < len(starts):
            c0 = starts[attempt]
        else:
            ref = best.coeffs if best is not None else starts[0]
            c0 = ref + opts.jitter * rng.standard_normal(ref.shape)
        y0 = project((c0 * scale).ravel())
        f0, _ = fg(y0)
        if not np.isfinite(f0):
            attempts.append("start in collision guard")
            continue
        res = bfgs(fg, y0, gtol=opts.gtol, max_iter=opts.max_iter, project=project,
                   gnorm=gnorm, first_step=1.0)
        path = base.with_coeffs(res.x.reshape(4, 2, K) / scale)
        sep = float(min_pair_distance(_nodes_state(path, quad)[0]).min())
        attempts.append(res.message)
        if sep <= SEPARATION_FLOOR or not np.isfinite(res.fun):
            continue
        if best is None or res.fun < best_value - 1e-12 or (res.converged and not best_conv):
            best, best_value, best_conv = path, res.fun, res.converged
            best_info = dict(converged=res.converged, nit=res.nit, nfev=res.nfev,
                             grad_norm=float(gnorm(res.grad)), message=res.message,
                             min_node_separation=sep)
        if best_conv:
            break
    if best is None:
        raise CollisionPath(f"all inner restarts hit the collision guard ({attempts})")
    best_info["restarts"] = len(attempts) - 1
    best_info["max_iter_flag"] = not best_info["converged"]
    best.info.update(best_info)
    return best, float(best_value)
