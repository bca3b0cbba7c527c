import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from spbc.boundary import B
from spbc.dynamics import (
    EQUAL_MASSES, MassSystem, PhaseState, accelerations, angular_momentum, integrate_flow,
    kinetic_energy, min_pair_distance, potential, total_energy,
)
from spbc.errors import CollisionError, StepFailure
from spbc.fixtures import STAR_PENTAGON

from helpers import random_centered_state

U0 = 2 * math.sqrt(2) + 1
UNIT_SQUARE = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])

coords = st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)
configs = arrays(np.float64, (4, 2), elements=coords).filter(
    lambda q: min_pair_distance(q) > 0.2
)
masses = st.tuples(*[st.floats(0.2, 5.0)] * 4)


def test_mass_system_partial_sums():
    ms = MassSystem((1.0, 2.0, 3.0, 4.0))
    assert ms.mu.tolist() == [1.0, 3.0, 6.0, 10.0]
    assert ms.total == 10.0
    # M_i = m_i mu_{i-1} / mu_i
    assert np.allclose(ms.reduced, [2 * 1 / 3, 3 * 3 / 6, 4 * 6 / 10])


@pytest.mark.parametrize("bad", [(1, 1, 1, 0), (1, -1, 1, 1), (1, 1, 1)])
def test_mass_system_rejects_bad_masses(bad):
    with pytest.raises(ValueError):
        MassSystem(bad)


def test_potential_unit_square():
    assert potential(UNIT_SQUARE) == pytest.approx(U0, rel=1e-15)


def test_potential_collinear_hand_sum():
    q = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
    exact = sum(Fraction(1, abs(i - j)) for i, j in itertools.combinations(range(4), 2))
    assert exact == Fraction(13, 3)
    assert potential(q) == pytest.approx(float(exact), rel=1e-15)


@given(configs, st.floats(0.1, 10.0))
def test_potential_is_homogeneous_of_degree_minus_one(q, s):
    assert potential(s * q) == pytest.approx(potential(q) / s, rel=1e-12)


def test_potential_collision_raises():
    q = UNIT_SQUARE.copy()
    q[1] = q[0]
    with pytest.raises(CollisionError):
        potential(q)
    with pytest.raises(CollisionError):
        accelerations(q)


def test_square_accelerations_point_inward():
    acc = accelerations(UNIT_SQUARE)
    # r^3 w^2 = U0 / 4 at r = 1
    assert np.allclose(np.linalg.norm(acc, axis=1), U0 / 4, rtol=1e-14)
    assert np.allclose(acc / np.linalg.norm(acc, axis=1)[:, None], -UNIT_SQUARE, atol=1e-15)


def test_mirror_pair_accelerations_mirror():
    q = np.array([[0.7, 0.3], [-0.7, 0.3], [0.2, -1.1], [-0.2, -1.1]])
    acc = accelerations(q)
    assert np.allclose(acc[[1, 0, 3, 2]], acc @ B, atol=1e-15)


def _fd_accelerations(q, ms, h=1e-6):
    out = np.empty_like(q)
    for i in range(4):
        for d in range(2):
            e = np.zeros_like(q)
            e[i, d] = h
            out[i, d] = (potential(q + e, ms) - potential(q - e, ms)) / (2 * h) / ms.m[i]
    return out


@settings(max_examples=100, deadline=None)
@given(configs, masses)
def test_accelerations_match_potential_gradient(q, m):
    ms = MassSystem(m)
    acc = accelerations(q, ms)
    fd = _fd_accelerations(q, ms)
    assert np.abs(acc - fd).max() <= 1e-6 * np.abs(acc).max() + 1e-9


def test_energy_of_static_square():
    s = PhaseState(UNIT_SQUARE, np.zeros((4, 2)))
    assert total_energy(s) == pytest.approx(-U0, rel=1e-15)
    assert angular_momentum(s) == 0.0


@given(configs, arrays(np.float64, (4, 2), elements=coords))
def test_doubling_velocities_quadruples_kinetic(q, v):
    k1 = kinetic_energy(PhaseState(q, v))
    k2 = kinetic_energy(PhaseState(q, 2 * v))
    assert k2 == pytest.approx(4 * k1, rel=1e-14, abs=1e-300)


def test_circular_state_angular_momentum():
    r = 1.3
    w = math.sqrt(U0 / 4 / r**3)
    q = r * UNIT_SQUARE
    v = w * q @ np.array([[0.0, 1.0], [-1.0, 0.0]])  # w e_z x q
    L = 0.0
    for (x, y), (vx, vy) in zip(q, v):
        L += x * vy - y * vx
    assert angular_momentum(PhaseState(q, v)) == pytest.approx(4 * r**2 * w, rel=1e-14)
    assert L == pytest.approx(4 * r**2 * w, rel=1e-14)


def test_circular_state_is_a_relative_equilibrium():
    r = 1.3
    w = math.sqrt(U0 / 4 / r**3)
    q = r * UNIT_SQUARE
    v = w * q @ np.array([[0.0, 1.0], [-1.0, 0.0]])
    tr = integrate_flow(PhaseState(q, v), t_span=(0.0, 1.0))
    c, s = math.cos(w), math.sin(w)
    # counterclockwise rotation by w for row vectors
    assert np.abs(tr.final.q - q @ np.array([[c, s], [-s, c]])).max() < 1e-10


def test_star_pentagon_energy_over_one_time_unit():
    s = STAR_PENTAGON.state
    e0 = total_energy(s)
    tr = integrate_flow(s, t_span=(0.0, 1.0))
    assert abs(total_energy(tr.final) - e0) < 1e-8 * abs(e0)


def _drift(tr, f):
    vals = np.array([f(tr.state(k)) for k in range(len(tr))])
    return np.abs(vals - vals[0]).max() / abs(vals[0])


def test_conservation_over_forty_time_units(star_shoot):
    tr = integrate_flow(star_shoot.state, t_span=(0.0, 40.0))
    assert _drift(tr, total_energy) < 1e-8
    assert _drift(tr, angular_momentum) < 1e-8


def test_published_star_pentagon_closes_after_forty():
    s = STAR_PENTAGON.state
    tr = integrate_flow(s, t_span=(0.0, 40.0))
    err = float(np.abs(tr.final.flat() - s.flat()).max())
    assert err < 1e-3, f"closure error {err:.3e}"


def test_refined_star_pentagon_closes_after_forty(star_shoot):
    s = star_shoot.state
    tr = integrate_flow(s, t_span=(0.0, 40.0), dense=False)
    assert np.abs(tr.final.flat() - s.flat()).max() < 1e-9


def test_closure_error_shrinks_with_tolerance(star_shoot):
    s = star_shoot.state
    errs = []
    for tol in (1e-6, 5e-7, 2.5e-7, 1.25e-7):
        tr = integrate_flow(s, t_span=(0.0, 40.0), abs_tol=tol, rel_tol=tol, dense=False)
        errs.append(np.abs(tr.final.flat() - s.flat()).max())
    assert all(b < a for a, b in zip(errs, errs[1:])), errs


def test_collinear_rest_state_stays_collinear():
    q = np.array([[-3.0, 0.0], [-1.0, 0.0], [1.0, 0.0], [3.0, 0.0]])
    tr = integrate_flow(PhaseState(q, np.zeros((4, 2))), t_span=(0.0, 1.0))
    assert np.abs(tr.q[..., 1]).max() == 0.0
    assert np.abs(tr.v[..., 1]).max() == 0.0


def test_centered_state_stays_centered(rng):
    s = random_centered_state(rng, spread=2.0)
    tr = integrate_flow(s, t_span=(0.0, 2.0))
    m = EQUAL_MASSES.m[:, None]
    assert np.abs((m * tr.q).sum(1)).max() < 1e-9
    assert np.abs((m * tr.v).sum(1)).max() < 1e-9


def test_mirror_equivariance():
    s = STAR_PENTAGON.state
    mirrored = PhaseState(s.q @ B, s.v @ B)
    t = np.linspace(0.0, 1.0, 101)
    q1, v1 = integrate_flow(s, t_span=(0.0, 1.0))(t)
    q2, v2 = integrate_flow(mirrored, t_span=(0.0, 1.0))(t)
    assert np.abs(q2 - q1 @ B).max() < 1e-9
    assert np.abs(v2 - v1 @ B).max() < 1e-9


def test_trajectory_times_strictly_increase():
    tr = integrate_flow(STAR_PENTAGON.state, t_span=(0.0, 3.0))
    assert np.all(np.diff(tr.t) > 0)
    q, v = tr(1.5)
    assert q.shape == (4, 2) and v.shape == (4, 2)


def test_head_on_collision_is_reported():
    q = np.array([[-0.5, 0.0], [0.5, 0.0], [0.0, 50.0], [0.0, -50.0]])
    with pytest.raises((CollisionError, StepFailure)):
        integrate_flow(PhaseState(q, np.zeros((4, 2))), t_span=(0.0, 5.0))


def test_collision_error_at_start():
    q = UNIT_SQUARE.copy()
    q[2] = q[3]
    with pytest.raises(CollisionError):
        integrate_flow(PhaseState(q, np.zeros((4, 2))))


@pytest.mark.parametrize("tol", [0.0, 0.1, -1e-9])
def test_tolerance_range(tol):
    with pytest.raises(ValueError):
        integrate_flow(STAR_PENTAGON.state, abs_tol=tol)


def test_centering_removes_center_of_mass_and_momentum(rng):
    s = PhaseState(rng.normal(size=(4, 2)) + 3.0, rng.normal(size=(4, 2)) + 1.0)
    c = s.centered()
    assert c.is_centered()
    assert not s.is_centered()
