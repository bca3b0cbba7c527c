"""End-to-end solve: boundary minimization, shooting polish, assembly, stability."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .assembly import Orbit, ShootingResult, classify_angle, extend_orbit, shooting_refine
from .boundary import AngleLike, BoundaryParams, as_angle, circular_action
from .dynamics import MassSystem, PhaseState, _ms
from .errors import DegenerateAngle, NotPeriodic
from .fixtures import orbit_fixture
from .outersolve import OuterOptions, OuterResult, outer_minimize
from .pathopt import InnerOptions, eval_path, inner_minimize
from .stability import MonodromyReport, orbit_stability


@dataclass
class SolveOptions:
    modes: int = 32
    quad_nodes: int = 512
    inner_gtol: float = 1e-8
    outer_max_evals: int = 6000
    shooting_tol: float = 1e-10
    skip_outer: bool = False
    cycles: Optional[int] = None
    samples_per_T: int = 20

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class Solution:
    theta: object
    T: float
    ms: MassSystem
    a: np.ndarray
    value: float
    state: PhaseState
    orbit: Orbit
    outer: Optional[OuterResult] = None
    shooting: Optional[ShootingResult] = None
    timings: dict = field(default_factory=dict)


def refuse_right_angle(theta: AngleLike) -> None:
    if abs(as_angle(theta).value - np.pi / 2) < 1e-12:
        raise DegenerateAngle("theta must differ from pi/2")


def solve(theta: AngleLike, T: float = 1.0, seed=None, ms: Optional[MassSystem] = None,
          opts: Optional[SolveOptions] = None, initial: Optional[PhaseState] = None) -> Solution:
    """Solve the boundary problem for ``theta`` and assemble the orbit.

    ``initial`` (a published initial state) skips both minimizations and
    seeds the shooting polish directly.
    """
    theta = as_angle(theta)
    refuse_right_angle(theta)
    ms = _ms(ms)
    opts = opts or SolveOptions()
    inner = InnerOptions(K=opts.modes, M=opts.quad_nodes, gtol=opts.inner_gtol)
    timings = {}
    t0 = time.perf_counter()
    outer = None
    if initial is not None:
        shoot = shooting_refine(None, theta, T, ms, opts.shooting_tol, initial=initial)
        a = shoot.a
        value = inner_minimize(BoundaryParams(a, T, theta), ms, inner)[1]
    else:
        seed = np.asarray(seed, dtype=float)
        if opts.skip_outer:
            path, value = inner_minimize(BoundaryParams(seed, T, theta), ms, inner)
            a = seed
        else:
            outer = outer_minimize(seed, theta, T, ms,
                                   OuterOptions(max_evals=opts.outer_max_evals, inner=inner))
            path, value, a = outer.inner_path, outer.value, outer.a_star
        timings["outer"] = time.perf_counter() - t0
        q0, v0 = eval_path(path, 0.0)
        shoot = shooting_refine(a, theta, T, ms, opts.shooting_tol, initial=PhaseState(q0, v0))
    timings["shooting"] = time.perf_counter() - t0 - timings.get("outer", 0.0)
    orbit = extend_orbit(shoot.state, theta, opts.cycles, T=T, ms=ms,
                         samples_per_T=opts.samples_per_T)
    timings["total"] = time.perf_counter() - t0
    return Solution(theta, T, ms, np.asarray(a), float(value), shoot.state, orbit, outer,
                    shoot, timings)


def solve_fixture(theta: AngleLike, T: float = 1.0, opts: Optional[SolveOptions] = None):
    """Solve from the published initial state for ``theta``."""
    theta = as_angle(theta)
    fix = orbit_fixture(theta.fraction)
    if fix is None:
        raise KeyError(f"no published initial state for theta = {theta}")
    return solve(theta, T, opts=opts, initial=fix.state)


def stability(state: PhaseState, theta: AngleLike, T: float = 1.0,
              ms: Optional[MassSystem] = None, tol: float = 1e-3,
              subperiod: bool = False) -> MonodromyReport:
    """Verdict over the minimal period implied by ``theta``."""
    cls = classify_angle(theta)
    if not cls.periodic:
        raise NotPeriodic("quasi-periodic orbits have no monodromy matrix")
    period = cls.period_multiple * T
    # the reduced orbit already closes after 8T
    sub = 8 * T if subperiod and cls.period_multiple % 8 == 0 else None
    return orbit_stability(state, period, ms, verdict_tol=tol, subperiod=sub)


def circular_benchmark(theta: AngleLike, T: float = 1.0) -> float:
    return circular_action(theta, T).action
