"""Assemble the full orbit from its first piece, verify it, and polish by shooting.

With ``RT = R(2 theta)``, ``B = diag(-1, 1)`` and ``S`` swapping bodies
(1 2)(3 4), the piece ``q*`` on ``[0, T]`` extends as::

    q(t) = S(q*(2T - t)) B RT                 on (T, 2T]
    q(t) = sigma^k(q(t - 2kT)) R(2k theta)    sigma^k: body i <- body i+k (mod 4)

Both rules are exact symmetries of the equations of motion, so the
construction is valid for every integer ``k``, negative ones included.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .boundary import (
    AngleLike,
    B,
    RotationAngle,
    as_angle,
    build_qstart,
    fit_qend_params,
    rotation_matrix,
    trapezoid,
)
from .dynamics import (
    MassSystem,
    PhaseState,
    Trajectory,
    _ms,
    integrate_flow,
    integrate_with_stm,
)
from .errors import JacobianSingular, NotConverged, NotPeriodic, SPBCError
from .pathopt import DiscretePath, eval_path

SWAP = np.array([1, 0, 3, 2])
SIGMA = np.array([1, 2, 3, 0])


@dataclass(frozen=True)
class Classification:
    kind: str
    curves: Optional[int]
    sides_per_curve: Optional[int]
    period_multiple: Optional[int]
    chase_order: Optional[str]

    @property
    def periodic(self) -> bool:
        return self.period_multiple is not None

    def to_dict(self) -> dict:
        return dict(kind=self.kind, curves=self.curves, sides_per_curve=self.sides_per_curve,
                    period_multiple=self.period_multiple, chase_order=self.chase_order)

    @classmethod
    def from_dict(cls, d: dict) -> "Classification":
        return cls(d["kind"], d.get("curves"), d.get("sides_per_curve"),
                   d.get("period_multiple"), d.get("chase_order"))


QUASI = "quasi-periodic"
NONCHOREO = "non-choreographic"
FORWARD = "simple-choreographic-forward"
DOUBLE = "double-choreographic"
REVERSE = "simple-choreographic-reverse"


def classify_angle(theta: AngleLike) -> Classification:
    """Orbit type and minimal period (in units of T) from ``theta = (P/Q) pi``."""
    theta = as_angle(theta)
    if not theta.is_rational:
        return Classification(QUASI, None, None, None, None)
    Q = theta.fraction.denominator
    r = Q % 4
    if r == 0:
        return Classification(NONCHOREO, 4, Q // 4, 2 * Q, None)
    if r == 1:
        return Classification(FORWARD, 1, Q, 8 * Q, "1->2->3->4")
    if r == 2:
        return Classification(DOUBLE, 2, Q // 2, 4 * Q, "(1,3),(2,4)")
    return Classification(REVERSE, 1, Q, 8 * Q, "1->4->3->2")


def _rot_stack(angles):
    c, s = np.cos(angles), np.sin(angles)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


class _Piece:
    """Uniform ``t -> (q, v)`` access to a solution segment on ``[0, T]``."""

    def __init__(self, piece, T: Optional[float] = None, ms: Optional[MassSystem] = None):
        self.source = piece
        if isinstance(piece, DiscretePath):
            self.T = piece.T
            self._f = lambda t: eval_path(piece, t)
        elif isinstance(piece, Trajectory):
            if abs(piece.t[0]) > 1e-14:
                raise ValueError("trajectory piece must start at t = 0")
            self.T = float(piece.t[-1]) if T is None else float(T)
            self._f = piece
        elif isinstance(piece, PhaseState):
            if T is None:
                raise ValueError("T is required when the piece is an initial state")
            tr = integrate_flow(piece, ms, (0.0, T))
            self.T = float(T)
            self.source = tr
            self._f = tr
        else:
            raise TypeError(f"unsupported piece type {type(piece).__name__}")

    def __call__(self, t):
        return self._f(np.clip(t, 0.0, self.T))


def _mirror(q, v, R2):
    qm = (q[..., SWAP, :] @ B) @ R2
    vm = -(v[..., SWAP, :] @ B) @ R2
    return qm, vm


def _permute(x, k):
    idx = (np.arange(4) + np.asarray(k)[..., None]) % 4
    return np.take_along_axis(x, idx[..., None], axis=-2)


@dataclass
class Orbit:
    """Full orbit built from a piece on ``[0, T]`` (or integrated directly).

    ``source`` is ``"assembled"`` when ``state_at`` evaluates the symmetry
    construction and ``"integrated"`` when it interpolates a direct
    integration of the equations of motion.
    """

    theta: RotationAngle
    T: float
    cycles: int
    classification: Classification
    base_piece: object
    samples: Trajectory
    source: str = "assembled"
    frame: float = 0.0
    closure_tol: float = 1e-9
    junction_report: dict = field(default_factory=dict)
    _piece: Optional[_Piece] = field(default=None, repr=False)
    _backward: Optional[Trajectory] = field(default=None, repr=False)

    @property
    def span(self) -> float:
        return 2 * self.cycles * self.T if self.cycles else self.T

    @property
    def period(self) -> Optional[float]:
        pm = self.classification.period_multiple
        return None if pm is None else pm * self.T

    def _angle(self, k):
        k = np.asarray(k)
        frac = self.theta.fraction
        if frac is not None:
            # exact reduction of 2 k P pi / Q modulo 2 pi
            turns = (2 * k * frac.numerator) % (2 * frac.denominator)
            return np.pi * turns / frac.denominator
        return 2 * k * self.theta.value

    def assembled(self, t):
        """Evaluate the reflection/permutation/rotation construction at ``t``."""
        t = np.asarray(t, dtype=float)
        T = self.T
        k = np.floor(t / (2 * T)).astype(int)
        tau = t - 2 * k * T
        first = tau <= T
        q, v = self._piece(np.where(first, tau, 2 * T - tau))
        qm, vm = _mirror(q, v, rotation_matrix(2 * self.theta.value))
        q = np.where(first[..., None, None], q, qm)
        v = np.where(first[..., None, None], v, vm)
        R = _rot_stack(self._angle(k) + self.frame)
        return _permute(q, k) @ R, _permute(v, k) @ R

    def state_at(self, t):
        """Positions and velocities at time(s) ``t`` (negative times allowed).

        Integrated orbits wrap periodically; quasi-periodic integrated orbits
        are only defined on the integrated span and ``[-2T, 0]``.
        """
        if self.source == "assembled":
            return self.assembled(t)
        t = np.asarray(t, dtype=float)
        if self.period is not None:
            return self.samples(np.mod(t, self.period))
        lo = -2 * self.T if self._backward is not None else 0.0
        if np.any(t < lo - 1e-12) or np.any(t > self.span + 1e-12):
            raise ValueError(f"times outside the integrated span [{lo}, {self.span}]")
        qf, vf = self.samples(np.clip(t, 0.0, self.span))
        if self._backward is None or np.all(t >= 0):
            return qf, vf
        qb, vb = self._backward(np.clip(t, lo, 0.0))
        neg = (t < 0)[..., None, None]
        return np.where(neg, qb, qf), np.where(neg, vb, vf)

    def rotated(self, phi: float) -> "Orbit":
        """Same orbit viewed in a frame rotated by ``R(phi)`` (assembled only)."""
        out = Orbit(self.theta, self.T, self.cycles, self.classification, self.base_piece,
                    self.samples, self.source, self.frame + phi, self.closure_tol,
                    _piece=self._piece)
        out.samples = _sample_trajectory(out.assembled, out.span, self.T)
        out.junction_report = junction_report(out)
        return out

    def closure_error(self) -> Optional[float]:
        if self.period is None or self.span < self.period - 1e-12:
            return None
        q0, v0 = self.state_at(0.0)
        q1, v1 = self.state_at(self.period)
        return float(max(np.abs(q1 - q0).max(), np.abs(v1 - v0).max()))


def _sample_trajectory(f: Callable, span: float, T: float, per_T: int = 50) -> Trajectory:
    n = max(int(round(span / T)) * per_T, per_T) + 1
    t = np.linspace(0.0, span, n)
    q, v = f(t)

    def interp(tt):
        qq, vv = f(tt)
        y = np.concatenate([qq.reshape(qq.shape[:-2] + (8,)), vv.reshape(vv.shape[:-2] + (8,))], -1)
        return np.moveaxis(y, -1, 0)

    return Trajectory(t, q, v, interp)


def default_cycles(theta: AngleLike) -> int:
    pm = classify_angle(theta).period_multiple
    return pm // 2 if pm is not None else 4


def extend_orbit(piece, theta: AngleLike, cycles: Optional[int] = None,
                 T: Optional[float] = None, ms: Optional[MassSystem] = None,
                 samples_per_T: int = 50) -> Orbit:
    """Build the orbit on ``[0, 2 cycles T]`` from a piece on ``[0, T]``.

    ``piece`` is a :class:`DiscretePath`, a :class:`Trajectory` starting at
    0, or a :class:`PhaseState` (integrated over ``[0, T]`` first).
    ``cycles`` defaults to the minimal period for rational angles and to 4
    otherwise; ``cycles = 0`` returns the piece itself.
    """
    theta = as_angle(theta)
    pc = _Piece(piece, T, ms)
    cls = classify_angle(theta)
    if cycles is None:
        cycles = default_cycles(theta)
    if cycles < 0:
        raise ValueError("cycles must be non-negative")
    orbit = Orbit(theta, pc.T, int(cycles), cls, pc.source, None, _piece=pc)
    orbit.samples = _sample_trajectory(orbit.assembled, orbit.span, pc.T, samples_per_T)
    orbit.junction_report = junction_report(orbit)
    return orbit


def integrate_orbit(state0: PhaseState, theta: AngleLike, T: float = 1.0,
                    ms: Optional[MassSystem] = None, cycles: Optional[int] = None,
                    tol: float = 1e-12) -> Orbit:
    """Orbit obtained by integrating ``state0`` directly, without the construction."""
    theta = as_angle(theta)
    cls = classify_angle(theta)
    if cycles is None:
        cycles = default_cycles(theta)
    span = 2 * cycles * T
    tr = integrate_flow(state0, ms, (0.0, span), tol, tol)
    back = None
    if not cls.periodic:
        back = integrate_flow(state0, ms, (0.0, -2 * T), tol, tol)
    orbit = Orbit(theta, float(T), int(cycles), cls, tr, tr, "integrated",
                  closure_tol=1e-6, _piece=_Piece(tr, T), _backward=back)
    orbit.junction_report = junction_report(orbit)
    return orbit


def junction_residuals(orbit: Orbit):
    """``(pos_res, vel_res, A)`` at the junctions ``t = T`` and ``t = 2T``.

    Residuals are the largest per-body Euclidean mismatch between the left
    and right limits of the construction.  ``A`` is the velocity mismatch at
    ``t = T`` in the piece's own frame, ordered ``(A11, A12, A21, ..., A42)``.
    """
    T = orbit.T
    R2 = rotation_matrix(2 * orbit.theta.value)
    Rf = rotation_matrix(orbit.frame)
    q0, v0 = orbit._piece(0.0)
    qT, vT = orbit._piece(T)
    # t = T: piece end vs mirrored start of (T, 2T]
    qmT, vmT = _mirror(qT, vT, R2)
    # t = 2T: mirrored end vs the next permuted, rotated piece
    qm0, vm0 = _mirror(q0, v0, R2)
    qn, vn = _permute(q0, 1) @ R2, _permute(v0, 1) @ R2

    def res(a, b):
        return float(np.linalg.norm((a - b) @ Rf, axis=-1).max())

    pos = max(res(qT, qmT), res(qm0, qn))
    vel = max(res(vT, vmT), res(vm0, vn))
    return pos, vel, (vT - vmT).ravel()


def junction_report(orbit: Orbit) -> dict:
    pos, vel, A = junction_residuals(orbit)
    return dict(pos_res=pos, vel_res=vel, transversality=A.tolist(),
                transversality_max=float(np.abs(A).max()))


@dataclass
class CheckReport:
    passed: bool
    max_error: float
    details: dict = field(default_factory=dict)


def choreography_relations(kind: str):
    """Pairs ``(i, j)`` with ``q_i(t + 2QT) = q_j(t)`` (0-based) for each kind."""
    if kind == FORWARD:
        return [(i, (i + 1) % 4) for i in range(4)]
    if kind == REVERSE:
        return [(i, (i - 1) % 4) for i in range(4)]
    if kind == DOUBLE:
        return [(0, 2), (2, 0), (1, 3), (3, 1)]
    if kind == NONCHOREO:
        return [(i, i) for i in range(4)]
    raise ValueError(f"no chase relations for kind {kind!r}")


def verify_choreography(orbit: Orbit, tol: float = 1e-3, n_samples: int = 200,
                        positions: Optional[Callable] = None) -> CheckReport:
    """Check the kind-specific chase identities ``q_i(t + 2QT) = q_j(t)``.

    ``positions`` overrides how positions are read (default ``orbit.state_at``);
    tests use it to inject corrupted samples.
    """
    cls = orbit.classification
    if not cls.periodic:
        raise NotPeriodic("choreography checks need a rational angle")
    Q = orbit.theta.fraction.denominator
    shift = 2 * Q * orbit.T
    read = positions or (lambda t: orbit.state_at(t)[0])
    t = np.linspace(0.0, orbit.period, n_samples, endpoint=False)
    a = read(t + shift) if orbit.source == "assembled" or orbit.span >= orbit.period + shift \
        else read(np.mod(t + shift, orbit.period))
    b = read(t)
    errs = {f"q{i + 1}(t+{2 * Q}T)=q{j + 1}(t)": float(np.abs(a[:, i] - b[:, j]).max())
            for i, j in choreography_relations(cls.kind)}
    m = max(errs.values())
    return CheckReport(m < tol, m, errs)


def fit_qstart(config: np.ndarray):
    """Best fit ``build_qstart(a1, a2, a3) R(phi)``; returns ``(a, phi, residual)``."""
    return _fit_template(config, lambda p: build_qstart(*p))


def fit_trapezoid(config: np.ndarray):
    """Best fit ``trapezoid(a4, a5, a6) R(phi)``; returns ``(a, phi, residual)``."""
    return _fit_template(config, lambda p: trapezoid(*p))


def _fit_template(config, template):
    # templates are linear in their three parameters
    basis = np.stack([template(e).ravel() for e in np.eye(3)], axis=1)

    def solve(phi):
        y = (config @ rotation_matrix(-phi)).ravel()
        p, *_ = np.linalg.lstsq(basis, y, rcond=None)
        return p, float(np.abs(basis @ p - y).max())

    # config = sum p_i E_i (c I + s J) is linear in (p c, p s); a rank-one split gives phi
    J = np.array([[0.0, -1.0], [1.0, 0.0]])
    lin = np.concatenate([basis, np.stack([(template(e) @ J).ravel() for e in np.eye(3)], 1)], 1)
    uw, *_ = np.linalg.lstsq(lin, config.ravel(), rcond=None)
    _, _, vt = np.linalg.svd(uw.reshape(2, 3).T)
    phi0 = float(np.arctan2(vt[0, 1], vt[0, 0]))
    cands = [phi0, phi0 + np.pi]
    g = min(cands, key=lambda p: solve(p)[1])
    res = minimize_scalar(lambda p: np.sum((basis @ solve(p)[0] - (config @ rotation_matrix(-p)).ravel())**2),
                          bounds=(g - 0.01, g + 0.01), method="bounded", options=dict(xatol=1e-13))
    phi = min((g, float(res.x)), key=lambda p: solve(p)[1])
    phi = float(np.angle(np.exp(1j * phi)))
    p, err = solve(phi)
    return p, phi, err


def verify_symmetry(orbit: Orbit, tol: float = 1e-3, n_samples: int = 200,
                    shapes: Optional[int] = None) -> CheckReport:
    """Mirror identities about ``t = 0`` and junction shapes.

    Checks ``q1(-t) = q3(t)B``, ``q2(-t) = q2(t)B``, ``q4(-t) = q4(t)B`` on
    ``(0, 2T]``, then that ``q(2kT)`` fits the isosceles start template and
    ``q((2k+1)T)`` the trapezoid, both up to rotation and the relabeling
    ``sigma^k``, for ``k < shapes`` (default: every junction in the span).
    """
    T = orbit.T
    t = np.linspace(0.0, 2 * T, n_samples + 1)[1:]
    qp, _ = orbit.state_at(t)
    qn, _ = orbit.state_at(-t)
    Rf = rotation_matrix(orbit.frame)
    # undo a viewing rotation before reflecting
    qp, qn = qp @ Rf.T, qn @ Rf.T
    errs = {
        "q1(-t)=q3(t)B": float(np.abs(qn[:, 0] - qp[:, 2] @ B).max()),
        "q2(-t)=q2(t)B": float(np.abs(qn[:, 1] - qp[:, 1] @ B).max()),
        "q4(-t)=q4(t)B": float(np.abs(qn[:, 3] - qp[:, 3] @ B).max()),
    }
    n_k = shapes if shapes is not None else max(orbit.cycles, 1)
    start_err = end_err = 0.0
    for k in range(n_k):
        q0, _ = orbit.state_at(2 * k * T)
        q1, _ = orbit.state_at((2 * k + 1) * T)
        start_err = max(start_err, fit_qstart(_permute(q0, -k))[2])
        if (2 * k + 1) * T <= orbit.span + 1e-12 or orbit.source == "assembled":
            end_err = max(end_err, fit_trapezoid(_permute(q1, -k))[2])
    errs["isosceles start shapes"] = start_err
    errs["trapezoid shapes"] = end_err
    m = max(errs.values())
    return CheckReport(m < tol, m, errs)


# --- shooting --------------------------------------------------------------

def state_from_u(u) -> PhaseState:
    """Symmetric initial state from ``u = (a1, a2, a3, v1x, v1y, v2x)``."""
    a1, a2, a3, v1x, v1y, v2x = (float(x) for x in u)
    q = build_qstart(a1, a2, a3)
    v = np.array([[v1x, v1y], [v2x, 0.0], [v1x, -v1y], [-2 * v1x - v2x, 0.0]])
    return PhaseState(q, v)


def u_from_state(state: PhaseState) -> np.ndarray:
    """Project a (nearly) symmetric state onto the shooting unknowns."""
    q, v = state.q, state.v
    a1 = 0.5 * (q[0, 0] - q[2, 0])
    a2 = 0.5 * (q[0, 1] + q[2, 1])
    a3 = -q[1, 1]
    v1x = 0.5 * (v[0, 0] + v[2, 0])
    v1y = 0.5 * (v[0, 1] - v[2, 1])
    return np.array([a1, a2, a3, v1x, v1y, v[1, 0]])


def _u_jacobian() -> np.ndarray:
    """``d(state.flat())/du``; the map is linear."""
    base = state_from_u(np.zeros(6)).flat()
    return np.stack([state_from_u(e).flat() - base for e in np.eye(6)], axis=1)


def _residual_map(theta: float) -> np.ndarray:
    """13x16 matrix ``L`` with residuals ``L @ state(T).flat()``."""
    Rm = rotation_matrix(-theta)
    L = np.zeros((13, 16))
    # p = q(T) R(-theta);  p_i = sum_d q_i,d Rm[d, :]
    P = np.zeros((4, 2, 16))
    for i in range(4):
        for e in range(2):
            for d in range(2):
                P[i, e, 2 * i + d] = Rm[d, e]
    L[0] = P[0, 0] + P[1, 0]
    L[1] = P[0, 1] - P[1, 1]
    L[2] = P[2, 0] + P[3, 0]
    L[3] = P[2, 1] - P[3, 1]
    L[4] = P[0, 1] + P[2, 1]
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    row = 5
    for i, j in ((0, 1), (1, 0), (2, 3), (3, 2)):
        vi, vj = 8 + 2 * i, 8 + 2 * j
        L[row, vi] = 1.0
        L[row, vj] = -c
        L[row, vj + 1] = s
        L[row + 1, vi + 1] = 1.0
        L[row + 1, vj] = s
        L[row + 1, vj + 1] = c
        row += 2
    return L


def shooting_residual(u, theta: AngleLike, T: float = 1.0, ms: Optional[MassSystem] = None,
                      tol: float = 1e-13) -> np.ndarray:
    """The 13 shape and velocity-matching residuals of ``u`` at ``t = T``."""
    th = as_angle(theta).value
    tr = integrate_flow(state_from_u(u), ms, (0.0, T), tol, tol, dense=False)
    return _residual_map(th) @ tr.final.flat()


@dataclass
class ShootingResult:
    state: PhaseState
    a: np.ndarray
    residual: float
    u: np.ndarray
    iterations: int

    def __iter__(self):
        return iter((self.state, self.a, self.residual))


def shooting_refine(a=None, theta: AngleLike = Fraction(2, 5), T: float = 1.0,
                    ms: Optional[MassSystem] = None, tol: float = 1e-10,
                    initial: Optional[PhaseState] = None, max_iter: int = 30,
                    int_tol: float = 1e-13) -> ShootingResult:
    """Gauss-Newton polish of the symmetric initial state.

    The seed is ``initial`` if given, otherwise the inner minimizer for the
    fiber of ``a``.  Unpacks as ``(state, a, residual)``.

    Raises
    ------
    JacobianSingular
        If the 13x6 Jacobian loses rank.
    NotConverged
        If the residual 2-norm stays above ``tol`` after ``max_iter`` steps.
    """
    from .boundary import BoundaryParams
    from .pathopt import inner_minimize

    theta = as_angle(theta)
    ms = _ms(ms)
    if initial is None:
        if a is None:
            raise ValueError("need a boundary vector or an initial state")
        path, _ = inner_minimize(BoundaryParams(a, T, theta), ms)
        q0, v0 = eval_path(path, 0.0)
        initial = PhaseState(q0, v0)
    u = u_from_state(initial)
    L = _residual_map(theta.value)
    D = _u_jacobian()

    def evaluate(u):
        end, stm = integrate_with_stm(state_from_u(u), ms, T, int_tol)
        return L @ end.flat(), L @ stm @ D, end

    F, J, end = evaluate(u)
    norm = float(np.linalg.norm(F))
    for it in range(max_iter):
        if norm < tol:
            break
        sv = np.linalg.svd(J, compute_uv=False)
        if sv[-1] <= 1e-12 * sv[0]:
            raise JacobianSingular(f"singular values {sv}")
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        lam = 1.0
        while True:
            try:
                F1, J1, end1 = evaluate(u + lam * step)
                n1 = float(np.linalg.norm(F1))
            except SPBCError:
                n1 = np.inf
            if n1 < norm or lam < 1e-4:
                break
            lam *= 0.5
        if not n1 < norm:
            # no decrease: residual is at the integration floor
            break
        u, F, J, end, norm = u + lam * step, F1, J1, end1, n1
    else:
        it = max_iter
    if norm >= tol:
        raise NotConverged(f"shooting residual {norm:.3e} after {it} iterations")
    a4, a5, a6 = fit_qend_params(end.q, theta)
    return ShootingResult(state_from_u(u), np.array([*u[:3], a4, a5, a6]), norm, u, it)


# --- periods ---------------------------------------------------------------

def minimal_period_check(orbit: Orbit, tol: float = 1e-6, n_samples: int = 200) -> dict:
    """Shift errors ``sup_t |q(t + 2kT) - q(t)|`` for ``k`` up to the period.

    ``minimal`` is True when only the full period closes within ``tol``.
    """
    if not orbit.classification.periodic:
        raise NotPeriodic("minimal period is undefined for irrational angles")
    kmax = orbit.classification.period_multiple // 2
    t = np.linspace(0.0, 2 * orbit.T, n_samples)
    q0, _ = orbit.state_at(t)
    shifts = {}
    for k in range(1, kmax + 1):
        qk, _ = orbit.state_at(t + 2 * k * orbit.T)
        shifts[k] = float(np.abs(qk - q0).max())
    closing = [k for k, e in shifts.items() if e < tol]
    return dict(shift_errors=shifts, closing=closing,
                minimal=closing == [kmax])


def closure_search(orbit: Orbit, max_multiple: int = 200, tol: float = 1e-6) -> list:
    """Multiples ``2k`` (``2kT <= max_multiple T``) where the state returns within ``tol``."""
    q0, v0 = orbit.state_at(0.0)
    ks = np.arange(1, max_multiple // 2 + 1)
    q, v = orbit.state_at(2 * ks * orbit.T)
    err = np.maximum(np.abs(q - q0).max(axis=(-1, -2)), np.abs(v - v0).max(axis=(-1, -2)))
    return [int(2 * k) for k, e in zip(ks, err) if e < tol]


def integrated_closure(state0: PhaseState, period: float, ms: Optional[MassSystem] = None,
                       tol: float = 1e-12) -> float:
    """``max |state(period) - state(0)|`` for a direct integration."""
    tr = integrate_flow(state0, ms, (0.0, period), tol, tol, dense=False)
    return float(np.abs(tr.final.flat() - state0.flat()).max())


def assembly_vs_integration(orbit: Orbit, state0: Optional[PhaseState] = None,
                            ms: Optional[MassSystem] = None, n_samples: int = 400,
                            tol: float = 1e-12) -> float:
    """Sup position error between the assembled orbit and direct integration."""
    if state0 is None:
        q0, v0 = orbit.state_at(0.0)
        state0 = PhaseState(q0, v0)
    span = orbit.period or orbit.span
    t = np.linspace(0.0, span, n_samples)
    tr = integrate_flow(state0, ms, (0.0, span), tol, tol)
    qa, _ = orbit.state_at(t)
    qi, _ = tr(t)
    return float(np.abs(qa - qi).max())


__all__ = [
    "Classification", "Orbit", "CheckReport", "ShootingResult", "classify_angle",
    "extend_orbit", "integrate_orbit", "junction_residuals", "verify_choreography",
    "verify_symmetry", "shooting_refine", "shooting_residual", "state_from_u", "u_from_state",
    "minimal_period_check", "closure_search", "integrated_closure", "assembly_vs_integration",
    "fit_qstart", "fit_trapezoid", "choreography_relations", "default_cycles",
]
