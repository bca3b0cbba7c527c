import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from spbc.boundary import (
    B, BoundaryParams, RotationAngle, bisect, build_qend, build_qstart, circular_action,
    fit_qend_params, reflect_y, rotation_matrix, static_action, template_intersection_rank,
    test_path_action, test_path_quadratics, theta_brackets, trapezoid,
)
from spbc.dynamics import potential
from spbc.errors import CollisionOnSegment, DegenerateAngle, NoSignChange
from spbc.fixtures import (
    A_STAR, A_TEST_PATH, CIRCULAR_ACTION, CIRCULAR_RADIUS, STAR_PENTAGON, TEST_PATH_ACTION,
    TEST_PATH_KINETIC, THETA0_BRACKET, THETA1_BRACKET,
)

U0 = 2 * math.sqrt(2) + 1
TWO_FIFTHS = RotationAngle(2, 5)

reals = st.floats(-5.0, 5.0, allow_nan=False)
angles = st.floats(-10.0, 10.0, allow_nan=False)
regular_theta = st.floats(0.05, math.pi - 0.05).filter(
    lambda t: min(abs(t - k * math.pi / 4) for k in (1, 2, 3)) > 1e-3
)


# --- angles ---------------------------------------------------------------

def test_rotation_angle_parse():
    th = RotationAngle.parse("2/5")
    assert (th.p, th.q) == (2, 5)
    assert th.value == pytest.approx(2 * math.pi / 5, rel=1e-16)
    assert RotationAngle.parse("0.97").real == 0.97
    assert RotationAngle.from_dict(th.to_dict()) == th


@pytest.mark.parametrize("text", ["2/4", "5/4", "0/3", "-1/3", "3.5", "0"])
def test_rotation_angle_rejects(text):
    with pytest.raises(ValueError):
        RotationAngle.parse(text)


@pytest.mark.parametrize("p,q", [(1, 4), (1, 2), (3, 4)])
def test_degenerate_angles(p, q):
    assert RotationAngle(p, q).is_degenerate()
    assert RotationAngle(real=p * math.pi / q).is_degenerate()


# --- rotation and reflection ----------------------------------------------

def test_rotation_identity_and_convention():
    assert np.array_equal(rotation_matrix(0.0), np.eye(2))
    assert np.allclose(np.array([1.0, 0.0]) @ rotation_matrix(math.pi / 2), [0.0, -1.0],
                       atol=1e-16)
    th = 0.3
    x, y = 0.4, -1.7
    got = np.array([x, y]) @ rotation_matrix(th)
    assert np.allclose(got, [x * math.cos(th) + y * math.sin(th),
                             -x * math.sin(th) + y * math.cos(th)], atol=1e-16)


@given(angles, angles)
def test_rotation_group_law(a, b):
    assert np.abs(rotation_matrix(a) @ rotation_matrix(b) - rotation_matrix(a + b)).max() < 1e-14


def test_reflection():
    assert np.array_equal(B @ B, np.eye(2))
    assert np.array_equal(reflect_y(np.array([[3.0, 5.0]])), [[-3.0, 5.0]])


@given(reals, reals, reals)
def test_reflected_start_swaps_outer_bodies(a1, a2, a3):
    q = build_qstart(a1, a2, a3)
    assert np.array_equal(reflect_y(q), q[[2, 1, 0, 3]] + 0.0)


# --- templates --------------------------------------------------------------

def test_qstart_zero_is_total_collision():
    assert np.array_equal(build_qstart(0, 0, 0), np.zeros((4, 2)))


def test_qstart_matches_published_positions():
    assert np.abs(build_qstart(*A_STAR[:3]) - np.array(STAR_PENTAGON.q)).max() < 1e-12


@given(reals, reals, reals, angles)
def test_templates_have_zero_column_sums(a, b, c, th):
    scale = 1e-15 * (1 + abs(a) + abs(b) + abs(c))
    assert np.abs(build_qstart(a, b, c).sum(0)).max() <= 4 * scale
    assert np.abs(build_qend(a, b, c, th).sum(0)).max() <= 8 * scale


def test_qend_rectangle():
    assert np.array_equal(build_qend(1, 1, 1, 0.0),
                          [[-1, 1], [1, 1], [-1, -1], [1, -1]])


@given(reals, reals, reals, angles)
def test_qend_unrotates_to_trapezoid(a4, a5, a6, th):
    back = build_qend(a4, a5, a6, th) @ rotation_matrix(-th)
    assert np.abs(back - trapezoid(a4, a5, a6)).max() < 1e-14 * (1 + abs(a4) + abs(a5) + abs(a6))


@given(reals, reals, reals, regular_theta)
def test_fit_qend_params_inverts_template(a4, a5, a6, th):
    got = fit_qend_params(build_qend(a4, a5, a6, th), th)
    assert np.allclose(got, (a4, a5, a6), atol=1e-13)


def test_square_template_of_circular_family():
    a1 = 1.3
    s = math.sqrt(2) * a1 / 2
    a = [a1, 0.0, -a1, s, -s, s]
    th = 2 * math.pi / 5
    qs = build_qstart(*a[:3])
    qe = build_qend(*a[3:], th)
    for q in (qs, qe):
        assert np.allclose(np.linalg.norm(q, axis=1), a1, rtol=1e-15)
        d = np.linalg.norm(q[:, None] - q[None], axis=-1)[np.triu_indices(4, 1)]
        assert np.allclose(np.sort(d), [math.sqrt(2) * a1] * 4 + [2 * a1] * 2, rtol=1e-14)
    # the end square is the start square turned by theta - pi/4
    assert np.abs(qs @ rotation_matrix(th - math.pi / 4) - qe).max() < 1e-15


@given(regular_theta)
def test_templates_meet_only_at_origin(th):
    assert template_intersection_rank(th) == 6


@pytest.mark.parametrize("k", [1, 2, 3])
def test_templates_meet_along_a_line_at_degenerate_angles(k):
    assert template_intersection_rank(k * math.pi / 4) == 5


# --- circular benchmark ----------------------------------------------------

def test_circular_action_star_pentagon():
    c = circular_action(TWO_FIFTHS, 1.0)
    assert abs(c.action - CIRCULAR_ACTION) < 1e-6
    assert c.period == pytest.approx(2 * math.pi / c.alpha)
    assert not c.outside_reference_range


def test_circular_radius_published_value():
    # four published decimals: half a unit in the last place
    r = circular_action(TWO_FIFTHS, 1.0).radius
    assert abs(r - CIRCULAR_RADIUS) < 5e-5, f"radius {r:.6f}"


def _rotating_square_action(theta, T):
    """Action of a square rigidly turning by ``theta - theta_ref`` in time ``T``."""
    ref = math.pi / 4 if theta < math.pi / 2 else 3 * math.pi / 4
    w = abs(theta - ref) / T
    r = (U0 / 4 / w**2) ** (1 / 3)  # r^3 w^2 = U0 / 4
    return T * (0.5 * 4 * r**2 * w**2 + U0 / r), r


@pytest.mark.parametrize("theta", [0.9, 2 * math.pi / 5, 1.4, 1.7, 2.2])
def test_circular_action_equals_rotating_square(theta):
    c = circular_action(theta, 1.7)
    want, r = _rotating_square_action(theta, 1.7)
    assert c.action == pytest.approx(want, rel=1e-13)
    assert c.radius == pytest.approx(r, rel=1e-13)
    qs, qe = build_qstart(*c.a_circ[:3]), build_qend(*c.a_circ[3:], theta)
    ref = math.pi / 4 if theta < math.pi / 2 else 3 * math.pi / 4
    assert np.abs(qs @ rotation_matrix(theta - ref) - qe).max() < 1e-13


def test_circular_action_vanishes_near_quarter_turn():
    vals = [circular_action(math.pi / 4 + e).action for e in (1e-2, 1e-4, 1e-6, 1e-8)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-4


@given(st.floats(1e-3, math.pi / 4 - 1e-3))
def test_circular_action_symmetric_about_three_quarters(alpha):
    lo = circular_action(3 * math.pi / 4 - alpha).action
    hi = circular_action(3 * math.pi / 4 + alpha).action
    assert lo == pytest.approx(hi, rel=1e-12)


@pytest.mark.parametrize("theta", [1.0, 1.3, 2.0])
def test_circular_action_scales_as_cube_root_of_T(theta):
    for T in (0.5, 2.0, 8.0):
        ratio = circular_action(theta, T).action / circular_action(theta, 1.0).action
        assert ratio == pytest.approx(T ** (1 / 3), rel=1e-12)


def test_circular_action_continuous_off_degenerate_points():
    def max_jump(lo, hi, n):
        t = np.linspace(lo, hi, n)
        return np.abs(np.diff([circular_action(x).action for x in t])).max()

    for lo, hi in ((math.pi / 4, math.pi / 2), (math.pi / 2, 3 * math.pi / 4)):
        lo, hi = lo + 1e-3, hi - 1e-3
        coarse, fine = max_jump(lo, hi, 501), max_jump(lo, hi, 2001)
        # jumps shrink with the grid: no discontinuity inside
        assert fine < coarse / 3


@pytest.mark.parametrize("theta", [math.pi / 4, math.pi / 2, 3 * math.pi / 4,
                                   RotationAngle(1, 2), RotationAngle(3, 4)])
def test_circular_action_refuses_degenerate(theta):
    with pytest.raises(DegenerateAngle):
        circular_action(theta)


def test_outer_quadrants_flagged():
    assert circular_action(0.3).outside_reference_range
    assert circular_action(2.9).outside_reference_range


# --- straight test path -----------------------------------------------------

def _simpson_action(bp, n=10_000):
    """Composite Simpson on the straight path, independent of the closed form."""
    qs, qe, T = bp.qstart, bp.qend, bp.T
    t = np.linspace(0.0, T, n + 1)
    q = qs + (t / T)[:, None, None] * (qe - qs)
    f = potential(q)
    w = np.ones(n + 1)
    w[1:-1:2], w[2:-1:2] = 4.0, 2.0
    pot = (T / n) / 3.0 * (w * f).sum()
    return ((qe - qs) ** 2).sum() / (2 * T) + pot


def test_test_path_action_published_value():
    bp = BoundaryParams(A_TEST_PATH, 1.0, TWO_FIFTHS)
    assert abs(test_path_action(bp) - TEST_PATH_ACTION) < 5e-4
    kinetic = ((bp.qend - bp.qstart) ** 2).sum() / 2
    assert abs(kinetic - TEST_PATH_KINETIC) < 5e-4


def test_test_path_action_matches_simpson_at_reference():
    bp = BoundaryParams(A_TEST_PATH, 1.0, TWO_FIFTHS)
    assert test_path_action(bp) == pytest.approx(_simpson_action(bp), rel=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.3, 3.0), min_size=6, max_size=6), regular_theta,
       st.floats(0.3, 3.0))
def test_test_path_action_matches_simpson(a, th, T):
    bp = BoundaryParams(a, T, th)
    a_, b_, c_ = test_path_quadratics(bp)
    # keep the Simpson oracle itself accurate
    tmin = np.clip(-b_ / (2 * np.maximum(c_, 1e-300)), 0, T)
    assume((a_ + b_ * tmin + c_ * tmin**2).min() > 0.05)
    assert test_path_action(bp) == pytest.approx(_simpson_action(bp), rel=1e-8)


def test_test_path_without_motion_is_static_action():
    # degenerate angles admit a nonzero a with Qstart = Qend (a square at pi/4)
    th = math.pi / 4
    M = np.array([(build_qstart(*e[:3]) - build_qend(*e[3:], th)).ravel() for e in np.eye(6)]).T
    a = np.linalg.svd(M)[2][-1] * 2.0
    bp = BoundaryParams(a, 1.3, th)
    assert np.abs(bp.qstart - bp.qend).max() < 1e-14
    assert test_path_action(bp) == pytest.approx(static_action(bp.qstart, 1.3), rel=1e-12)
    assert static_action(bp.qstart, 1.3) == pytest.approx(1.3 * potential(bp.qstart))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.3, 3.0), min_size=6, max_size=6), regular_theta)
def test_test_path_action_exceeds_kinetic(a, th):
    bp = BoundaryParams(a, 1.0, th)
    try:
        total = test_path_action(bp)
    except CollisionOnSegment:
        return
    kinetic = ((bp.qend - bp.qstart) ** 2).sum() / 2
    assert total > kinetic


def test_test_path_collision_is_detected():
    # a2 = a3 puts bodies 2 and 4 on top of each other at t = 0
    bp = BoundaryParams([1.0, 0.7, 0.7, 1.0, 1.0, 2.0], 1.0, TWO_FIFTHS)
    with pytest.raises(CollisionOnSegment):
        test_path_action(bp)


# --- theta brackets --------------------------------------------------------

def test_theta_brackets():
    (l0, h0), (l1, h1) = theta_brackets(A_TEST_PATH, 1.0)
    assert h0 - l0 <= 1e-6 and h1 - l1 <= 1e-6
    assert THETA0_BRACKET[0] < l0 <= h0 < THETA0_BRACKET[1]
    assert THETA1_BRACKET[0] < l1 <= h1 < THETA1_BRACKET[1]


def test_gap_positive_at_star_pentagon():
    gap = circular_action(TWO_FIFTHS).action - test_path_action(
        BoundaryParams(A_TEST_PATH, 1.0, TWO_FIFTHS))
    assert gap > 0
    assert gap == pytest.approx(CIRCULAR_ACTION - TEST_PATH_ACTION, abs=5e-4)


def test_bisect_requires_sign_change():
    with pytest.raises(NoSignChange):
        bisect(lambda x: x * x + 1.0, -1.0, 1.0)
    lo, hi = bisect(lambda x: x - 0.3, 0.0, 1.0, width=1e-9)
    assert lo <= 0.3 <= hi and hi - lo <= 1e-9
