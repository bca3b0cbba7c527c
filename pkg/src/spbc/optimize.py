"""Dense BFGS with a Wolfe line search that stays usable at the rounding floor.

Near a minimizer the objective changes by less than its own rounding noise,
so plain Armijo tests reject good steps.  The line search therefore also
accepts the approximate Wolfe conditions of Hager and Zhang whenever the
function value is within ``eps_f`` of the starting value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

C1 = 1e-4
C2 = 0.9


@dataclass
class MinimizeResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    nit: int
    nfev: int
    converged: bool
    message: str


def _accept(phi0, dphi0, phi, dphi, alpha, eps_f):
    wolfe = phi <= phi0 + C1 * alpha * dphi0 and abs(dphi) <= -C2 * dphi0
    approx = phi <= phi0 + eps_f and (2 * C1 - 1) * dphi0 >= dphi >= C2 * dphi0
    return wolfe or approx


def _cubic_min(a, fa, da, b, fb, db):
    """Minimizer of the cubic through two points with slopes, or None."""
    d1 = da + db - 3.0 * (fa - fb) / (a - b)
    rad = d1 * d1 - da * db
    if rad < 0:
        return None
    d2 = np.copysign(np.sqrt(rad), b - a)
    den = db - da + 2.0 * d2
    if den == 0:
        return None
    return b - (b - a) * (db + d2 - d1) / den


def line_search(fg, x, f0, g0, p, alpha0=1.0, eps_f=0.0, max_eval=40):
    """Bracket-and-zoom search on ``phi(a) = f(x + a p)`` for a Wolfe step.

    Returns ``(alpha, f, g, nfev)`` or ``None`` when no acceptable step exists.
    """
    dphi0 = float(g0 @ p)
    if not dphi0 < 0:
        return None
    nfev = 0

    def phi(alpha):
        nonlocal nfev
        nfev += 1
        f, g = fg(x + alpha * p)
        return f, g, float(g @ p)

    def armijo_fails(alpha, f):
        return not np.isfinite(f) or f > f0 + C1 * alpha * dphi0

    def zoom(lo, f_lo, d_lo, hi, f_hi, d_hi):
        while nfev < max_eval:
            a, b = min(lo, hi), max(lo, hi)
            if b - a <= 1e-14 * max(b, 1e-300):
                return None
            trial = None
            if np.isfinite(f_hi) and np.isfinite(d_hi):
                trial = _cubic_min(lo, f_lo, d_lo, hi, f_hi, d_hi)
            if trial is None or not (a + 0.1 * (b - a) <= trial <= b - 0.1 * (b - a)):
                trial = 0.5 * (a + b)
            f, g, d = phi(trial)
            if _accept(f0, dphi0, f, d, trial, eps_f):
                return trial, f, g
            if armijo_fails(trial, f) or f >= f_lo:
                hi, f_hi, d_hi = trial, f, d
            else:
                if d * (hi - lo) >= 0:
                    hi, f_hi, d_hi = lo, f_lo, d_lo
                lo, f_lo, d_lo = trial, f, d
        return None

    prev, f_prev, d_prev = 0.0, f0, dphi0
    alpha = alpha0
    while nfev < max_eval:
        f, g, d = phi(alpha)
        if _accept(f0, dphi0, f, d, alpha, eps_f):
            return alpha, f, g, nfev
        if armijo_fails(alpha, f) or (prev > 0 and f >= f_prev):
            out = zoom(prev, f_prev, d_prev, alpha, f, d)
            break
        if d >= 0:
            out = zoom(alpha, f, d, prev, f_prev, d_prev)
            break
        prev, f_prev, d_prev = alpha, f, d
        alpha *= 2.0
    else:
        return None
    if out is None:
        return None
    return out[0], out[1], out[2], nfev


def bfgs(
    fg: Callable,
    x0: np.ndarray,
    gtol: float = 1e-8,
    max_iter: int = 1000,
    project: Optional[Callable] = None,
    eps_f: Optional[float] = None,
    gnorm: Optional[Callable] = None,
    first_step: Optional[float] = None,
) -> MinimizeResult:
    """Minimize ``f`` given ``fg(x) -> (f, grad)``.

    Converges when the sup-norm of the (projected) gradient drops below
    ``gtol``.  ``project`` maps gradients onto the feasible linear subspace;
    iterates then stay in ``x0 + range(project)``.  ``gnorm`` replaces the
    sup-norm in the stopping test (e.g. to measure it in unscaled variables).
    ``first_step`` overrides the initial trial step, which is useful when the
    variables are already preconditioned.
    """
    norm = gnorm if gnorm is not None else (lambda v: np.abs(v).max())
    proj = project if project is not None else (lambda v: v)
    x = np.asarray(x0, dtype=float).copy()
    f, g = fg(x)
    g = proj(g)
    nfev = 1
    n = x.size
    H = np.eye(n)
    first = True
    for it in range(max_iter):
        if norm(g) < gtol:
            return MinimizeResult(x, f, g, it, nfev, True, "gradient tolerance reached")
        p = -proj(H @ g)
        if float(p @ g) >= 0:
            H = np.eye(n)
            p = -g
        ef = eps_f if eps_f is not None else 1e-14 * (1.0 + abs(f))
        alpha0 = 1.0
        if first:
            alpha0 = first_step or min(1.0, 1.0 / max(np.abs(g).max(), 1e-300))
        res = line_search(fg, x, f, g, p, alpha0=alpha0, eps_f=ef)
        if res is None:
            if not first and not np.allclose(H, np.eye(n)):
                H = np.eye(n)
                first = True
                continue
            return MinimizeResult(x, f, g, it, nfev, False, "line search failed")
        alpha, f_new, g_new, ne = res
        nfev += ne
        g_new = proj(g_new)
        s = alpha * p
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-300:
            if first:
                H *= sy / float(y @ y)
                first = False
            rho = 1.0 / sy
            Hy = H @ y
            H += (rho * rho * float(y @ Hy) + rho) * np.outer(s, s) - rho * (
                np.outer(Hy, s) + np.outer(s, Hy)
            )
        x = x + s
        f, g = f_new, g_new
    conv = norm(g) < gtol
    return MinimizeResult(x, f, g, max_iter, nfev, conv, "maximum iterations reached")
