"""Outer minimization of the reduced action over the six boundary parameters.

Each objective evaluation is a full inner path minimization.  Phase one is a
Nelder-Mead simplex, which tolerates the small noise left by the inner
solves; phase two polishes with BFGS on a central finite-difference gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .boundary import AngleLike, BoundaryParams, as_angle, check_nondegenerate
from .dynamics import MassSystem, _ms
from .errors import CollisionPath, Stalled
from .optimize import bfgs
from .pathopt import DiscretePath, InnerOptions, inner_minimize


class OuterObjective:
    """``a -> min action over the fiber of a``, warm-started from nearby fibers.

    Collision-bound fibers evaluate to ``+inf`` and are counted in
    ``collisions``.  ``history`` records the running best value.
    """

    def __init__(self, theta: AngleLike, T: float = 1.0, ms: Optional[MassSystem] = None,
                 inner: Optional[InnerOptions] = None, warm: bool = True, cache_size: int = 64):
        self.theta = as_angle(theta)
        self.T = float(T)
        self.ms = _ms(ms)
        self.inner = inner or InnerOptions()
        self.warm = warm
        self.cache_size = cache_size
        self._cache = []
        self.nfev = 0
        self.collisions = 0
        self.history = []
        self.best = (np.inf, None, None)

    def _nearest(self, a):
        if not self.warm or not self._cache:
            return None
        d = [np.abs(a - b).max() for b, _ in self._cache]
        return self._cache[int(np.argmin(d))][1]

    def solve(self, a):
        """Inner solution ``(path, value)`` for the fiber of ``a``."""
        a = np.asarray(a, dtype=float)
        bp = BoundaryParams(a, self.T, self.theta)
        path, value = inner_minimize(bp, self.ms, self.inner, warm=self._nearest(a))
        self._cache.append((a.copy(), path.coeffs))
        if len(self._cache) > self.cache_size:
            self._cache.pop(0)
        return path, value

    def __call__(self, a) -> float:
        a = np.asarray(a, dtype=float)
        self.nfev += 1
        if not np.all(np.isfinite(a)):
            return np.inf
        try:
            path, value = self.solve(a)
        except CollisionPath:
            self.collisions += 1
            value, path = np.inf, None
        if value < self.best[0]:
            self.best = (value, a.copy(), path)
        self.history.append(self.best[0])
        return value


def outer_objective(a, theta: AngleLike, T: float = 1.0, ms: Optional[MassSystem] = None,
                    inner: Optional[InnerOptions] = None) -> float:
    return OuterObjective(theta, T, ms, inner)(a)


@dataclass
class OuterOptions:
    max_evals: int = 6000
    simplex_tol: float = 1e-6
    simplex_step: float = 0.05
    gtol: float = 1e-7
    fd_step: float = 1e-6
    polish: bool = True
    inner: InnerOptions = field(default_factory=InnerOptions)


@dataclass
class OuterResult:
    a_star: np.ndarray
    value: float
    inner_path: DiscretePath
    diagnostics: dict


def fd_gradient(f, a, step: float = 1e-6):
    """Central differences with steps ``step * (1 + |a_i|)``."""
    a = np.asarray(a, dtype=float)
    g = np.empty_like(a)
    for i in range(a.size):
        h = step * (1.0 + abs(a[i]))
        e = np.zeros_like(a)
        e[i] = h
        g[i] = (f(a + e) - f(a - e)) / (2 * h)
    return g


def outer_minimize(seed, theta: AngleLike, T: float = 1.0, ms: Optional[MassSystem] = None,
                   opts: Optional[OuterOptions] = None) -> OuterResult:
    """Local minimizer of the reduced action near ``seed``.

    Raises
    ------
    Stalled
        If neither the simplex nor the gradient polish converges within
        ``opts.max_evals`` objective evaluations.
    """
    opts = opts or OuterOptions()
    seed = np.asarray(seed, dtype=float)
    if seed.shape != (6,) or not np.all(np.isfinite(seed)):
        raise ValueError(f"seed must be 6 finite reals, got {seed}")
    obj = OuterObjective(theta, T, ms, opts.inner)
    f_seed = obj(seed)
    if not np.isfinite(f_seed):
        raise CollisionPath("seed fiber is collision-bound")

    sim = [seed]
    for i in range(6):
        v = seed.copy()
        v[i] += opts.simplex_step * max(1.0, abs(seed[i]))
        sim.append(v)
    nm = minimize(obj, seed, method="Nelder-Mead",
                  options=dict(initial_simplex=np.array(sim), xatol=opts.simplex_tol,
                               fatol=1e-14, maxfev=opts.max_evals, adaptive=True))
    simplex_ok = bool(nm.success)
    diam = float(np.abs(nm.final_simplex[0] - nm.final_simplex[0][0]).max())
    a = np.array(obj.best[1])
    diagnostics = dict(simplex_evals=obj.nfev, simplex_converged=simplex_ok,
                       simplex_diameter=diam, collisions=0)

    polish_ok = False
    grad_norm = None
    if opts.polish:
        limit = obj.nfev + opts.max_evals

        def fg(x):
            if obj.nfev >= limit:
                return np.inf, np.full(6, np.nan)
            f = obj(x)
            return f, fd_gradient(obj, x, opts.fd_step)

        res = bfgs(fg, a, gtol=opts.gtol, max_iter=200)
        if res.fun <= obj(a):
            a = res.x
        polish_ok = res.converged
        grad_norm = float(np.abs(res.grad).max())
        # a line search that fails at the noise floor still leaves a stationary point
        if not polish_ok and grad_norm < 10 * opts.gtol:
            polish_ok = True
        diagnostics.update(polish_iterations=res.nit, polish_message=res.message)
    if obj.best[0] < obj(a):
        a = np.array(obj.best[1])
    diagnostics.update(polish_converged=polish_ok, grad_norm=grad_norm,
                       total_evals=obj.nfev, collisions=obj.collisions,
                       seed_value=f_seed, history=list(obj.history))
    if not (simplex_ok or polish_ok):
        raise Stalled(f"outer minimization did not converge in {obj.nfev} evaluations")

    # cold re-solve guards against warm-start bias
    path, value = inner_minimize(BoundaryParams(a, T, as_angle(theta)), _ms(ms), opts.inner)
    diagnostics["warm_value"] = float(obj(a))
    return OuterResult(np.array(a), float(value), path, diagnostics)


def coercivity_probe(a, scales: Sequence[float], theta: AngleLike, T: float = 1.0,
                     ms: Optional[MassSystem] = None, inner: Optional[InnerOptions] = None):
    """``[(s, value(s * a)) for s in scales]``; refuses degenerate angles."""
    check_nondegenerate(theta)
    obj = OuterObjective(theta, T, ms, inner, warm=False)
    a = np.asarray(a, dtype=float)
    return [(float(s), obj(s * a)) for s in scales]
