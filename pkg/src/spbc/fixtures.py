"""Published reference data used as seeds and regression targets (read-only)."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Optional

import numpy as np

from .dynamics import PhaseState


@dataclass(frozen=True)
class OrbitFixture:
    """Published initial state for one rotation angle (fraction of pi)."""

    theta: Fraction
    q: tuple
    v: tuple
    where: str

    @property
    def state(self) -> PhaseState:
        return PhaseState(np.array(self.q), np.array(self.v))


@dataclass(frozen=True)
class EigenFixture:
    theta: Fraction
    period: float
    pairs: tuple
    where: str


def _orbit(theta, q, v, where):
    return OrbitFixture(Fraction(theta), tuple(map(tuple, q)), tuple(map(tuple, v)), where)


STAR_PENTAGON = _orbit(
    "2/5",
    [(1.0598738926379, 1.7699901770118), (0.0, -0.80951135793043),
     (-1.0598738926379, 1.7699901770118), (0.0, -2.7304689960932)],
    [(-0.55391384867197, -0.39895079845794), (1.0936551555351, 0.0),
     (-0.55391558212647, 0.39895379682134), (0.01417427526245, 0.0)],
    "published star-pentagon initial state",
)

ORBITS = MappingProxyType({
    Fraction(2, 5): STAR_PENTAGON,
    Fraction(3, 7): _orbit(
        "3/7",
        [(0.9421459089, 2.189431278), (0.0, -1.300514651),
         (-0.9421459089, 2.189431278), (0.0, -3.078347905)],
        [(-0.4908870906, -0.474846006), (1.039544889, 0.0),
         (-0.4908437595, 0.4748326024), (-0.05781403894, 0.0)],
        "published initial state",
    ),
    Fraction(5, 12): _orbit(
        "5/12",
        [(0.9885667998, 1.984831768), (0.0, -1.067317853),
         (-0.9885667998, 1.984831768), (0.0, -2.902345684)],
        [(-0.5187341985, -0.4460463326), (1.064058961, 0.0),
         (-0.5187107584, 0.4460354291), (-0.02661400412, 0.0)],
        "published initial state",
    ),
    Fraction(9, 22): _orbit(
        "9/22",
        [(1.020078100, 1.878808307), (0.0, -0.9422097516),
         (-1.02007810, 1.878808307), (0.0, -2.815406862)],
        [(-0.5352327448, -0.4256795762), (1.078223783, 0.0),
         (-0.5352124256, 0.4256692972), (-0.007778613051, 0.0)],
        "published initial state",
    ),
})

# minimizer of the star-pentagon boundary problem (T = 1)
A_STAR = (1.0598738926379, 1.7699901770118, 0.80951135793043,
          0.75377929101531, 1.1034410399611, 2.440248251576)

# four-digit vector used for the straight test path
A_TEST_PATH = (1.0597, 1.7696, 0.8094, 0.7536, 1.1032, 2.4398)
TEST_PATH_ACTION = 3.2484
TEST_PATH_KINETIC = 1.0633
CIRCULAR_ACTION = 3.528734094
CIRCULAR_RADIUS = 1.6272

THETA0_BRACKET = (1.1938, 1.2252)
THETA1_BRACKET = (1.7279, 1.7593)
UNSTABLE_ANGLES = tuple(Fraction(x) for x in ("1/4", "1/3", "3/8", "3/10", "4/11", "5/14"))

EIGENVALUES = MappingProxyType({
    Fraction(2, 5): EigenFixture(Fraction(2, 5), 40, (0.761537, 0.235841, -0.299445, -0.456736),
                                 "star pentagon stability list"),
    Fraction(3, 7): EigenFixture(Fraction(3, 7), 56, (-0.375476, 0.493924, 0.623185, 0.698755),
                                 "stability catalog"),
    Fraction(4, 9): EigenFixture(Fraction(4, 9), 72, (-0.888315, 0.717492, 0.781167, 0.875241),
                                 "stability catalog"),
    Fraction(15, 31): EigenFixture(Fraction(15, 31), 248,
                                   (-0.761943, -0.0535079, -0.375899, 0.994815),
                                   "stability catalog"),
    Fraction(5, 12): EigenFixture(Fraction(5, 12), 24, (-0.752385, 0.786314, 0.850377, 0.845072),
                                  "stability catalog"),
    Fraction(9, 22): EigenFixture(Fraction(9, 22), 88, (-0.612649, -0.791503, -0.967491, -0.99911),
                                  "stability catalog"),
})

# names accepted by ``--seed-fixture``; the second is a legacy alias of the first
SEED_ALIASES = MappingProxyType({
    "test-path": A_TEST_PATH,
    "appendixB": A_TEST_PATH,
    "star-pentagon": A_STAR,
})


def seed_vector(name: str) -> tuple:
    try:
        return SEED_ALIASES[name]
    except KeyError:
        raise KeyError(f"unknown seed fixture {name!r}; choose from {sorted(SEED_ALIASES)}") from None


def orbit_fixture(theta) -> Optional[OrbitFixture]:
    """Published initial state for ``theta`` (a Fraction of pi), if any."""
    return ORBITS.get(Fraction(theta)) if theta is not None else None
