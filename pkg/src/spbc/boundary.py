"""Boundary templates and the two closed-form comparison actions.

Start configurations are isosceles triangles with a fourth body on the axis;
end configurations are trapezoids rotated by ``theta``.  Configurations are
row vectors and rotate by right multiplication with :func:`rotation_matrix`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from .dynamics import MassSystem, _I, _J, _ms, potential
from .errors import CollisionOnSegment, DegenerateAngle, NoSignChange

U0 = 2.0 * math.sqrt(2.0) + 1.0  # potential of the unit square, unit masses
B = np.array([[-1.0, 0.0], [0.0, 1.0]])
DEGENERATE = (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4))


@dataclass(frozen=True)
class RotationAngle:
    """``theta = (p/q) pi`` when rational, otherwise a float in ``(0, pi)``."""

    p: Optional[int] = None
    q: Optional[int] = None
    real: Optional[float] = None

    def __post_init__(self):
        if self.real is None:
            if self.p is None or self.q is None:
                raise ValueError("rational angle needs both p and q")
            p, q = int(self.p), int(self.q)
            if p <= 0 or q <= 0:
                raise ValueError("p and q must be positive integers")
            if math.gcd(p, q) != 1:
                raise ValueError(f"p/q = {p}/{q} is not in lowest terms")
            if not p < q:
                raise ValueError("rational angle must satisfy 0 < p/q < 1")
            object.__setattr__(self, "p", p)
            object.__setattr__(self, "q", q)
        else:
            if self.p is not None or self.q is not None:
                raise ValueError("give either (p, q) or real, not both")
            x = float(self.real)
            if not 0.0 < x < math.pi:
                raise ValueError(f"theta must lie in (0, pi), got {x}")
            object.__setattr__(self, "real", x)

    @classmethod
    def rational(cls, p: int, q: int) -> "RotationAngle":
        return cls(p=p, q=q)

    @classmethod
    def parse(cls, text: str) -> "RotationAngle":
        """``"2/5"`` means ``2 pi / 5``; a plain decimal is radians."""
        text = text.strip()
        if "/" in text:
            num, den = text.split("/", 1)
            return cls(p=int(num), q=int(den))
        return cls(real=float(text))

    @property
    def is_rational(self) -> bool:
        return self.real is None

    @property
    def fraction(self) -> Optional[Fraction]:
        return Fraction(self.p, self.q) if self.is_rational else None

    @property
    def value(self) -> float:
        return self.p * math.pi / self.q if self.is_rational else self.real

    def is_degenerate(self, atol: float = 1e-12) -> bool:
        if self.is_rational:
            return self.fraction in DEGENERATE
        return any(abs(self.real - float(f) * math.pi) <= atol for f in DEGENERATE)

    def to_dict(self) -> dict:
        return {"p": self.p, "q": self.q} if self.is_rational else {"real": self.real}

    @classmethod
    def from_dict(cls, d: dict) -> "RotationAngle":
        if "real" in d and d["real"] is not None:
            return cls(real=d["real"])
        return cls(p=d["p"], q=d["q"])

    def __str__(self) -> str:
        return f"{self.p}pi/{self.q}" if self.is_rational else f"{self.real:.12g}"


AngleLike = Union[RotationAngle, float]


def as_angle(theta: AngleLike) -> RotationAngle:
    if isinstance(theta, RotationAngle):
        return theta
    return RotationAngle(real=float(theta))


def angle_value(theta: AngleLike) -> float:
    return theta.value if isinstance(theta, RotationAngle) else float(theta)


def check_nondegenerate(theta: AngleLike) -> None:
    if as_angle(theta).is_degenerate():
        raise DegenerateAngle(f"theta = {theta} is one of pi/4, pi/2, 3pi/4")


@dataclass(frozen=True)
class BoundaryParams:
    """Six boundary parameters plus the half-step time and rotation angle."""

    a: tuple
    T: float
    theta: RotationAngle

    def __post_init__(self):
        a = tuple(float(x) for x in np.asarray(self.a, dtype=float).ravel())
        if len(a) != 6 or not all(math.isfinite(x) for x in a):
            raise ValueError(f"a must be 6 finite reals, got {self.a}")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ValueError(f"T must be positive, got {self.T}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "theta", as_angle(self.theta))

    @property
    def qstart(self) -> np.ndarray:
        return build_qstart(*self.a[:3])

    @property
    def qend(self) -> np.ndarray:
        return build_qend(*self.a[3:], self.theta)

    def with_a(self, a) -> "BoundaryParams":
        return BoundaryParams(a, self.T, self.theta)


def rotation_matrix(theta: AngleLike) -> np.ndarray:
    """``R(theta) = [[cos, -sin], [sin, cos]]``; acts on row vectors from the right."""
    t = angle_value(theta)
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, -s], [s, c]])


def reflect_y(config: np.ndarray) -> np.ndarray:
    """Reflection about the y-axis, ``(x, y) -> (-x, y)``."""
    return np.asarray(config, dtype=float) @ B


def build_qstart(a1: float, a2: float, a3: float) -> np.ndarray:
    return np.array([[a1, a2], [0.0, -a3], [-a1, a2], [0.0, -2.0 * a2 + a3]], dtype=float)


def trapezoid(a4: float, a5: float, a6: float) -> np.ndarray:
    """End template before rotation."""
    return np.array([[-a5, a4], [a5, a4], [-a6, -a4], [a6, -a4]], dtype=float)


def build_qend(a4: float, a5: float, a6: float, theta: AngleLike) -> np.ndarray:
    return trapezoid(a4, a5, a6) @ rotation_matrix(theta)


def fit_qend_params(config: np.ndarray, theta: AngleLike) -> tuple:
    """Least-squares ``(a4, a5, a6)`` of a configuration against the end template."""
    p = np.asarray(config) @ rotation_matrix(-angle_value(theta))
    a4 = 0.25 * (p[0, 1] + p[1, 1] - p[2, 1] - p[3, 1])
    a5 = 0.5 * (p[1, 0] - p[0, 0])
    a6 = 0.5 * (p[3, 0] - p[2, 0])
    return a4, a5, a6


def template_intersection_rank(theta: AngleLike) -> int:
    """Rank of ``a -> Qstart(a1..a3) - Qend(a4..a6)``; 6 means only ``a = 0`` is shared."""
    cols = []
    for k in range(6):
        e = np.zeros(6)
        e[k] = 1.0
        cols.append((build_qstart(*e[:3]) - build_qend(*e[3:], theta)).ravel())
    return int(np.linalg.matrix_rank(np.array(cols).T, tol=1e-10))


@dataclass(frozen=True)
class CircularSolution:
    action: float
    a_circ: np.ndarray
    radius: float
    period: float
    alpha: float
    outside_reference_range: bool


def circular_action(theta: AngleLike, T: float = 1.0) -> CircularSolution:
    """Action over ``[0, T]`` of the boundary data that extends to uniform rotation.

    The square rotates by ``alpha``, the distance from ``theta`` to the nearer
    of ``pi/4`` and ``3pi/4``.  Angles below ``pi/4`` or above ``3pi/4`` reuse
    the neighbouring template and are flagged ``outside_reference_range``.
    """
    th = angle_value(theta)
    if not 0.0 < th < math.pi:
        raise ValueError(f"theta must lie in (0, pi), got {th}")
    check_nondegenerate(theta)
    if T <= 0:
        raise ValueError("T must be positive")
    s2 = math.sqrt(2.0) / 2.0
    if th < math.pi / 2:
        alpha = abs(th - math.pi / 4)
    else:
        alpha = abs(th - 3 * math.pi / 4)
    radius = U0 ** (1 / 3) * T ** (2 / 3) * (2 * alpha) ** (-2 / 3)
    a1 = radius
    if th < math.pi / 2:
        a = np.array([a1, 0.0, -a1, s2 * a1, -s2 * a1, s2 * a1])
    else:
        a = np.array([a1, 0.0, a1, s2 * a1, s2 * a1, -s2 * a1])
    action = 3.0 * 2.0 ** (-1 / 3) * U0 ** (2 / 3) * T ** (1 / 3) * alpha ** (2 / 3)
    outer = th < math.pi / 4 or th > 3 * math.pi / 4
    return CircularSolution(action, a, radius, 2 * math.pi * T / alpha, alpha, outer)


def adaptive_simpson(f, lo: float, hi: float, tol: float = 1e-10, max_depth: int = 50) -> float:
    """Adaptive Simpson quadrature with Richardson correction."""

    def simpson(a, fa, b, fb):
        m = 0.5 * (a + b)
        fm = f(m)
        return m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def rec(a, fa, b, fb, m, fm, whole, eps, depth):
        lm, flm, left = simpson(a, fa, m, fm)
        rm, frm, right = simpson(m, fm, b, fb)
        delta = left + right - whole
        if depth <= 0 or abs(delta) <= 15.0 * eps:
            return left + right + delta / 15.0
        return rec(a, fa, m, fm, lm, flm, left, eps / 2, depth - 1) + rec(
            m, fm, b, fb, rm, frm, right, eps / 2, depth - 1
        )

    fa, fb = f(lo), f(hi)
    m, fm, whole = simpson(lo, fa, hi, fb)
    return rec(lo, fa, hi, fb, m, fm, whole, tol, max_depth)


def inverse_sqrt_quadratic_integral(a: float, b: float, c: float, T: float) -> float:
    """``int_0^T dt / sqrt(a + b t + c t^2)`` for a nonnegative quadratic.

    Closed form via ``asinh`` when the discriminant is resolvable, the pure
    logarithm when the relative motion is collinear, and adaptive Simpson when
    ``c`` is negligible (parallel motion).
    """
    qmin_t = min(max(-b / (2 * c), 0.0), T) if c > 0 else (0.0 if b >= 0 else T)
    qmin = a + b * qmin_t + c * qmin_t**2
    if qmin <= 1e-24 * max(a, 1.0):
        raise CollisionOnSegment("pair distance vanishes along the straight path")
    if c <= 1e-14 * max(a, 1e-300) / (T * T):
        return adaptive_simpson(lambda t: 1.0 / math.sqrt(a + b * t + c * t * t), 0.0, T, 1e-10)
    sc = math.sqrt(c)
    disc = 4.0 * a * c - b * b
    if disc > 1e-14 * 4.0 * a * c:
        sd = math.sqrt(disc)
        return (math.asinh((2 * c * T + b) / sd) - math.asinh(b / sd)) / sc
    # collinear relative motion: sqrt(Q) = sqrt(c) |t - t*|
    ts = -b / (2 * c)
    return (math.log(abs(T - ts)) - math.log(abs(ts))) / sc if ts < 0 else (
        math.log(ts) - math.log(ts - T)
    ) / sc


def _pair_quadratics(qs: np.ndarray, qe: np.ndarray, T: float):
    d0 = qs[_J] - qs[_I]
    w = (qe[_J] - qe[_I] - d0) / T
    a = (d0 * d0).sum(1)
    b = 2.0 * (d0 * w).sum(1)
    c = (w * w).sum(1)
    return a, b, c


def test_path_action(bp: BoundaryParams, ms: Optional[MassSystem] = None) -> float:
    """Action of the constant-velocity straight path from ``Qstart`` to ``Qend``."""
    m = _ms(ms).m
    qs, qe, T = bp.qstart, bp.qend, bp.T
    kinetic = float((m * ((qe - qs) ** 2).sum(1)).sum() / (2.0 * T))
    a, b, c = _pair_quadratics(qs, qe, T)
    pot = sum(
        m[i] * m[j] * inverse_sqrt_quadratic_integral(a[k], b[k], c[k], T)
        for k, (i, j) in enumerate(zip(_I, _J))
    )
    return kinetic + pot


def test_path_quadratics(bp: BoundaryParams):
    """Pair coefficients ``(a, b, c)`` of ``|q_j - q_i|^2`` along the straight path."""
    return _pair_quadratics(bp.qstart, bp.qend, bp.T)


def static_action(config: np.ndarray, T: float, ms: Optional[MassSystem] = None) -> float:
    return T * potential(config, ms)


def action_gap(theta: float, a_ref, T: float = 1.0, ms: Optional[MassSystem] = None) -> float:
    """``circular_action - test_path_action`` at rotation ``theta`` (radians)."""
    bp = BoundaryParams(a_ref, T, RotationAngle(real=theta))
    return circular_action(theta, T).action - test_path_action(bp, ms)


def bisect(f, lo: float, hi: float, width: float = 1e-6, max_iter: int = 200):
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo, lo
    if fhi == 0.0:
        return hi, hi
    if (flo > 0) == (fhi > 0):
        raise NoSignChange(f"no sign change on [{lo}, {hi}]: f = {flo:.4g}, {fhi:.4g}")
    for _ in range(max_iter):
        if hi - lo <= width:
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid, mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    return lo, hi


def theta_brackets(a_ref, T: float = 1.0, width: float = 1e-6, ms: Optional[MassSystem] = None):
    """Locate where the straight test path stops beating the circular action.

    Returns two intervals of width at most ``width``; the first lies in
    ``(pi/4, pi/2)`` and the second in ``(pi/2, 3pi/4)``.
    """
    g = lambda th: action_gap(th, a_ref, T, ms)  # noqa: E731
    eps = 1e-6
    left = bisect(g, math.pi / 4 + eps, math.pi / 2 - eps, width)
    right = bisect(g, math.pi / 2 + eps, 3 * math.pi / 4 - eps, width)
    return left, right


# keep pytest from collecting these when imported into test modules
test_path_action.__test__ = False
test_path_quadratics.__test__ = False
