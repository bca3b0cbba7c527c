"""Linear stability in the rotation-reduced 10-dimensional Hamiltonian system.

Chain of canonical changes: Cartesian -> Jacobi (drops center of mass and
total momentum) -> polar on each Jacobi pair -> difference angles
``x3 = th3 - th2``, ``x4 = th4 - th3`` with conjugates ``X3 = Th3 + Th4``,
``X4 = Th4``.  The total angular momentum ``c`` is a parameter of the
reduced Hamiltonian.  The reduced state is ``z = (r2, r3, r4, x3, x4, R2,
R3, R4, X3, X4)`` and the flow is ``z' = J grad H``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .dynamics import MassSystem, PhaseState, _ms, accelerations, potential
from .errors import CollisionError, NonSymplectic, NotPeriodic, PolarSingularity, StepFailure

POLAR_MIN = 1e-10
DIM = 10
J10 = np.block([[np.zeros((5, 5)), np.eye(5)], [-np.eye(5), np.zeros((5, 5))]])

LINEARLY_STABLE = "linearly-stable"
SPECTRALLY_STABLE = "spectrally-stable"
UNSTABLE = "unstable"
INDETERMINATE = "indeterminate"


def jacobi_matrices(ms: Optional[MassSystem] = None):
    """``(A, P)`` with ``[g4, u2, u3, u4] = A q`` and ``[G4, v2, v3, v4] = P p``."""
    m = _ms(ms).m
    mu = np.cumsum(m)
    A = np.zeros((4, 4))
    P = np.zeros((4, 4))
    A[0] = m / mu[3]
    P[0] = 1.0
    for i in range(1, 4):
        # u_{i+1} = q_{i+1} - (center of mass of bodies 1..i)
        A[i, :i] = -m[:i] / mu[i - 1]
        A[i, i] = 1.0
        # v_{i+1} = mu_i p_{i+1} / mu_{i+1} - m_{i+1} (p_1 + ... + p_i) / mu_{i+1}
        P[i, :i] = -m[i] / mu[i]
        P[i, i] = mu[i - 1] / mu[i]
    return A, P


@dataclass
class JacobiState:
    g4: np.ndarray
    G4: np.ndarray
    u: np.ndarray  # rows u2, u3, u4
    v: np.ndarray  # rows v2, v3, v4

    @property
    def u2(self):
        return self.u[0]

    @property
    def u3(self):
        return self.u[1]

    @property
    def u4(self):
        return self.u[2]

    @property
    def v2(self):
        return self.v[0]

    @property
    def v3(self):
        return self.v[1]

    @property
    def v4(self):
        return self.v[2]


def to_jacobi(state: PhaseState, ms: Optional[MassSystem] = None) -> JacobiState:
    A, P = jacobi_matrices(ms)
    x = A @ state.q
    y = P @ state.momenta(ms)
    return JacobiState(x[0], y[0], x[1:], y[1:])


def from_jacobi(js: JacobiState, ms: Optional[MassSystem] = None) -> PhaseState:
    A, P = jacobi_matrices(ms)
    q = np.linalg.solve(A, np.vstack([js.g4, js.u]))
    p = np.linalg.solve(P, np.vstack([js.G4, js.v]))
    return PhaseState(q, p / _ms(ms).m[:, None])


@dataclass
class PolarState:
    r: np.ndarray
    theta: np.ndarray
    R: np.ndarray
    Theta: np.ndarray


def to_polar(js: JacobiState) -> PolarState:
    u, v = js.u, js.v
    r = np.linalg.norm(u, axis=1)
    if np.any(r < POLAR_MIN):
        raise PolarSingularity(f"Jacobi vector of length {r.min():.3g}")
    th = np.arctan2(u[:, 1], u[:, 0])
    R = (u * v).sum(1) / r
    Th = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
    return PolarState(r, th, R, Th)


def from_polar(ps: PolarState):
    """``(u, v)`` arrays of shape ``(3, 2)``."""
    c, s = np.cos(ps.theta), np.sin(ps.theta)
    u = np.stack([ps.r * c, ps.r * s], 1)
    w = ps.Theta / ps.r
    v = np.stack([ps.R * c - w * s, ps.R * s + w * c], 1)
    return u, v


@dataclass
class ReducedState:
    """Reduced coordinates plus what is needed to undo the reduction."""

    z: np.ndarray
    c: float
    x2: float = 0.0
    g4: np.ndarray = field(default_factory=lambda: np.zeros(2))
    G4: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float).reshape(DIM)
        if np.any(self.z[:3] <= 0):
            raise PolarSingularity("radii must be positive")


def to_reduced(state: PhaseState, ms: Optional[MassSystem] = None) -> ReducedState:
    js = to_jacobi(state, ms)
    ps = to_polar(js)
    th, Th = ps.theta, ps.Theta
    z = np.array([*ps.r, th[1] - th[0], th[2] - th[1], *ps.R, Th[1] + Th[2], Th[2]])
    return ReducedState(z, float(Th.sum()), float(th[0]), js.g4, js.G4)


def from_reduced(rs: ReducedState, ms: Optional[MassSystem] = None) -> PhaseState:
    r, x3, x4, R, X3, X4 = rs.z[:3], rs.z[3], rs.z[4], rs.z[5:8], rs.z[8], rs.z[9]
    th = rs.x2 + np.array([0.0, x3, x3 + x4])
    Th = np.array([rs.c - X3, X3 - X4, X4])
    u, v = from_polar(PolarState(r, th, R, Th))
    return from_jacobi(JacobiState(rs.g4, rs.G4, u, v), ms)


def _positions(z, ms, gauge=0.0):
    """Cartesian configurations (..., 4, 2) for reduced points, with ``th2 = gauge``."""
    A, _ = jacobi_matrices(ms)
    Ainv = np.linalg.inv(A)
    r2, r3, r4, x3, x4 = (z[..., i] for i in range(5))
    a3, a4 = gauge + x3, gauge + x3 + x4
    zero = np.zeros_like(r2)
    u = np.stack([
        np.stack([zero, zero], -1),
        np.stack([r2 * np.cos(gauge + zero), r2 * np.sin(gauge + zero)], -1),
        np.stack([r3 * np.cos(a3), r3 * np.sin(a3)], -1),
        np.stack([r4 * np.cos(a4), r4 * np.sin(a4)], -1),
    ], -2)
    return np.einsum("kj,...jd->...kd", Ainv, u), Ainv


def _check(z):
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != DIM:
        raise ValueError(f"reduced points have {DIM} components, got {z.shape}")
    if np.any(z[..., :3] < POLAR_MIN):
        raise PolarSingularity("radius at or below the polar chart limit")
    return z


def _zvec(z):
    return z.z if isinstance(z, ReducedState) else z


def h4_value(z, c: float, ms: Optional[MassSystem] = None, gauge: float = 0.0):
    """Reduced Hamiltonian at ``z`` (broadcasts over leading axes)."""
    ms = _ms(ms)
    z = _check(_zvec(z))
    M = ms.reduced
    r, R, X3, X4 = z[..., :3], z[..., 5:8], z[..., 8], z[..., 9]
    kin = (R**2 / (2 * M)).sum(-1)
    kin = kin + (c - X3) ** 2 / (2 * M[0] * r[..., 0] ** 2)
    kin = kin + (X3 - X4) ** 2 / (2 * M[1] * r[..., 1] ** 2)
    kin = kin + X4**2 / (2 * M[2] * r[..., 2] ** 2)
    q, _ = _positions(z, ms, gauge)
    out = kin - potential(q, ms)
    return out if np.ndim(out) else float(out)


def h4_gradient(z, c: float, ms: Optional[MassSystem] = None) -> np.ndarray:
    """Analytic gradient of :func:`h4_value` (broadcasts over leading axes)."""
    ms = _ms(ms)
    z = _check(_zvec(z))
    M = ms.reduced
    r2, r3, r4 = z[..., 0], z[..., 1], z[..., 2]
    R, X3, X4 = z[..., 5:8], z[..., 8], z[..., 9]
    g = np.zeros(z.shape)
    a, b, d = c - X3, X3 - X4, X4
    g[..., 0] = -(a**2) / (M[0] * r2**3)
    g[..., 1] = -(b**2) / (M[1] * r3**3)
    g[..., 2] = -(d**2) / (M[2] * r4**3)
    g[..., 5:8] = R / M
    g[..., 8] = -a / (M[0] * r2**2) + b / (M[1] * r3**2)
    g[..., 9] = -b / (M[1] * r3**2) + d / (M[2] * r4**2)

    # dU/dq_k = m_k acc_k, pulled back through q = Ainv @ [0, u2, u3, u4]
    q, Ainv = _positions(z, ms)
    F = ms.m[:, None] * accelerations(q, ms)
    dU_du = np.einsum("kj,...kd->...jd", Ainv, F)[..., 1:, :]
    x3, x34 = z[..., 3], z[..., 3] + z[..., 4]
    e3 = np.stack([np.cos(x3), np.sin(x3)], -1)
    e4 = np.stack([np.cos(x34), np.sin(x34)], -1)
    n3 = np.stack([-np.sin(x3), np.cos(x3)], -1)
    n4 = np.stack([-np.sin(x34), np.cos(x34)], -1)
    dUr2 = dU_du[..., 0, 0]
    dUr3 = (dU_du[..., 1, :] * e3).sum(-1)
    dUr4 = (dU_du[..., 2, :] * e4).sum(-1)
    dUx4 = r4 * (dU_du[..., 2, :] * n4).sum(-1)
    dUx3 = r3 * (dU_du[..., 1, :] * n3).sum(-1) + dUx4
    g[..., 0] -= dUr2
    g[..., 1] -= dUr3
    g[..., 2] -= dUr4
    g[..., 3] -= dUx3
    g[..., 4] -= dUx4
    return g


def reduced_vector_field(z, c, ms=None):
    return h4_gradient(z, c, ms) @ J10.T


def h4_hessian(z, c, ms=None, step: float = 1e-6) -> np.ndarray:
    """Symmetrized central differences of the analytic gradient."""
    z = np.asarray(_zvec(z), dtype=float)
    h = step * (1.0 + np.abs(z))
    E = np.diag(h)
    g = h4_gradient(np.concatenate([z + E, z - E]), c, ms)
    H = (g[:DIM] - g[DIM:]) / (2 * h[:, None])
    return 0.5 * (H + H.T)


def _second_differences(z, c, ms, h):
    f0 = h4_value(z, c, ms)
    D = np.empty((DIM, DIM))
    for i in range(DIM):
        ei = np.zeros(DIM)
        ei[i] = h[i]
        D[i, i] = (h4_value(z + ei, c, ms) - 2 * f0 + h4_value(z - ei, c, ms)) / h[i] ** 2
        for j in range(i + 1, DIM):
            ej = np.zeros(DIM)
            ej[j] = h[j]
            D[i, j] = D[j, i] = (
                h4_value(z + ei + ej, c, ms) - h4_value(z + ei - ej, c, ms)
                - h4_value(z - ei + ej, c, ms) + h4_value(z - ei - ej, c, ms)
            ) / (4 * h[i] * h[j])
    return D


def validate_hessian(z, c, ms=None, step: float = 1e-4, rtol: float = 1e-5) -> float:
    """Worst relative column error of :func:`h4_hessian` against second
    differences of :func:`h4_value`; raises ``ValueError`` above ``rtol``.

    The direct differences are Richardson-extrapolated over steps ``h`` and
    ``h/2`` so the oracle's own truncation error stays below ``rtol``.
    """
    z = np.asarray(_zvec(z), dtype=float)
    H = h4_hessian(z, c, ms)
    h = step * (1.0 + np.abs(z))
    D = (4 * _second_differences(z, c, ms, h / 2) - _second_differences(z, c, ms, h)) / 3
    scale = np.abs(H).max(axis=0) + 1e-8
    err = float((np.abs(H - D).max(axis=0) / scale).max())
    if err > rtol:
        raise ValueError(f"Hessian column mismatch {err:.2e} exceeds {rtol:.0e}")
    return err


def reduced_flow(z0, c, ms=None, t_span=(0.0, 1.0), tol=1e-12, t_eval=None, dense=False):
    ms = _ms(ms)
    z0 = np.asarray(_zvec(z0), dtype=float)

    def f(t, z):
        return reduced_vector_field(z, c, ms)

    sol = solve_ivp(f, t_span, z0, method="DOP853", rtol=tol, atol=tol, t_eval=t_eval,
                    dense_output=dense)
    if sol.status != 0:
        raise StepFailure(sol.message)
    return sol


def reduced_distance(z1, z0) -> float:
    """Sup distance with the two angles compared modulo 2 pi."""
    d = np.asarray(z1) - np.asarray(z0)
    d[3:5] = (d[3:5] + np.pi) % (2 * np.pi) - np.pi
    return float(np.abs(d).max())


@dataclass
class MonodromyReport:
    X: np.ndarray
    symplectic_residual: float
    W_eigenvalues: Optional[np.ndarray] = None
    verdict: Optional[str] = None
    trivial: Optional[np.ndarray] = None
    nontrivial: Optional[np.ndarray] = None
    pairs: Optional[np.ndarray] = None
    pair_spread: Optional[float] = None
    closure: Optional[float] = None
    period: Optional[float] = None
    zdot0: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        w = self.W_eigenvalues
        return dict(
            eigenvalues=None if w is None else [[float(x.real), float(x.imag)] for x in w],
            pairs=None if self.pairs is None else [float(x) for x in self.pairs],
            verdict=self.verdict,
            symplectic_residual=self.symplectic_residual,
            closure=self.closure,
            period=self.period,
        )


def symplectic_residual(X: np.ndarray) -> float:
    n = X.shape[0] // 2
    J = np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])
    return float(np.abs(X.T @ J @ X - J).max())


def monodromy_matrix(z0, c: float, ms: Optional[MassSystem] = None, period: float = 40.0,
                     tol: float = 1e-12, closure_tol: float = 1e-6,
                     subperiod: Optional[float] = None, validate: bool = True) -> MonodromyReport:
    """Fundamental matrix of the linearized reduced flow after one period.

    With ``subperiod`` (a divisor of ``period`` after which the reduced
    orbit already closes) the matrix is integrated over the subperiod and
    raised to the integer power ``period / subperiod``.

    Raises
    ------
    NotPeriodic
        If the reduced orbit does not close within ``closure_tol``.
    """
    ms = _ms(ms)
    z0 = np.asarray(_zvec(z0), dtype=float)
    span = period
    power = 1
    if subperiod is not None:
        power = int(round(period / subperiod))
        if power < 1 or abs(power * subperiod - period) > 1e-9 * period:
            raise ValueError("subperiod must divide the period")
        span = subperiod
    if validate:
        validate_hessian(z0, c, ms)

    def f(t, y):
        z = y[:DIM]
        X = y[DIM:].reshape(DIM, DIM)
        H = h4_hessian(z, c, ms)
        return np.concatenate([reduced_vector_field(z, c, ms), (J10 @ H @ X).ravel()])

    y0 = np.concatenate([z0, np.eye(DIM).ravel()])
    try:
        sol = solve_ivp(f, (0.0, span), y0, method="DOP853", rtol=tol, atol=tol)
    except CollisionError as exc:
        raise NotPeriodic(f"collision on the reduced orbit: {exc}") from exc
    if sol.status != 0:
        raise StepFailure(sol.message)
    zT = sol.y[:DIM, -1]
    closure = reduced_distance(zT, z0)
    if closure > closure_tol:
        raise NotPeriodic(f"reduced orbit closure {closure:.3e} exceeds {closure_tol:.1e}")
    X = sol.y[DIM:, -1].reshape(DIM, DIM)
    if power > 1:
        X = np.linalg.matrix_power(X, power)
    zdot0 = reduced_vector_field(z0, c, ms)
    return MonodromyReport(X, symplectic_residual(X), closure=closure, period=period,
                           zdot0=zdot0)


def _span_fraction(V, basis):
    """Fraction of each column of ``V`` lying in ``span(basis)``."""
    Qb, _ = np.linalg.qr(basis)
    proj = Qb @ (Qb.conj().T @ V)
    return np.linalg.norm(proj, axis=0) / np.linalg.norm(V, axis=0)


def stability_verdict(X, tol: float = 1e-3, zdot0: Optional[np.ndarray] = None,
                      sympl_tol: float = 1e-4) -> MonodromyReport:
    """Classify a symplectic monodromy matrix through ``W = (X + X^-1) / 2``.

    ``X`` may also be a :class:`MonodromyReport`, in which case its orbit
    tangent is used to pick out the trivial pair.

    Raises
    ------
    NonSymplectic
        If ``X^T J X - J`` exceeds ``sympl_tol``.
    """
    base = X if isinstance(X, MonodromyReport) else None
    if base is not None:
        X = base.X
        if zdot0 is None:
            zdot0 = base.zdot0
    X = np.asarray(X, dtype=float)
    res = symplectic_residual(X)
    if res > sympl_tol:
        raise NonSymplectic(f"symplectic residual {res:.2e} exceeds {sympl_tol:.0e}")
    W = 0.5 * (X + np.linalg.inv(X))
    w, V = np.linalg.eig(W)
    near = [i for i in range(len(w)) if abs(w[i] - 1.0) < tol]
    if len(near) > 2 and zdot0 is not None:
        n = len(X) // 2
        J = np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])
        frac = _span_fraction(V[:, near], np.stack([zdot0, J @ zdot0], 1))
        near = [near[i] for i in np.argsort(-frac)[:2]]
    elif len(near) > 2:
        near = sorted(near, key=lambda i: abs(w[i] - 1.0))[:2]
    if len(near) < 2:
        # no trivial pair found: take the two closest to 1 and let the verdict flag it
        near = list(np.argsort(np.abs(w - 1.0))[:2])
    rest = np.array([w[i] for i in range(len(w)) if i not in near])
    rest = rest[np.lexsort((rest.imag, rest.real))]
    pairs = 0.5 * (rest[0::2] + rest[1::2]).real
    spread = float(np.abs(rest[0::2] - rest[1::2]).max())
    trivial = w[near]

    if np.any(np.abs(trivial - 1.0) >= tol):
        verdict = INDETERMINATE
    elif np.any(np.abs(rest.imag) > tol) or np.any(np.abs(rest.real) > 1 + tol):
        verdict = UNSTABLE
    elif np.all(np.abs(rest.real) < 1 - tol):
        gaps = np.diff(np.sort(pairs))
        verdict = LINEARLY_STABLE if np.all(gaps > tol) else SPECTRALLY_STABLE
    else:
        verdict = INDETERMINATE
    out = base if base is not None else MonodromyReport(X, res)
    out.symplectic_residual = res
    out.W_eigenvalues = np.concatenate([trivial, rest])
    out.verdict = verdict
    out.trivial = trivial
    out.nontrivial = rest
    out.pairs = pairs
    out.pair_spread = spread
    return out


def orbit_stability(state0: PhaseState, period: float, ms: Optional[MassSystem] = None,
                    tol: float = 1e-12, verdict_tol: float = 1e-3,
                    subperiod: Optional[float] = None, closure_tol: float = 1e-6):
    """Reduce a Cartesian periodic state and run monodromy plus verdict."""
    ms = _ms(ms)
    rs = to_reduced(state0.centered(ms), ms)
    rep = monodromy_matrix(rs.z, rs.c, ms, period, tol, closure_tol, subperiod)
    return stability_verdict(rep, verdict_tol)
