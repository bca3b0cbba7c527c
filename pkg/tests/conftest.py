import numpy as np
import pytest

from spbc.assembly import extend_orbit, integrate_orbit, shooting_refine
from spbc.boundary import BoundaryParams, RotationAngle
from spbc.fixtures import A_STAR, STAR_PENTAGON
from spbc.pathopt import inner_minimize

STAR_THETA = RotationAngle(2, 5)


@pytest.fixture(scope="session")
def star_theta():
    return STAR_THETA


@pytest.fixture(scope="session")
def star_shoot():
    return shooting_refine(None, STAR_THETA, 1.0, initial=STAR_PENTAGON.state)


@pytest.fixture(scope="session")
def star_orbit(star_shoot):
    return extend_orbit(star_shoot.state, STAR_THETA, T=1.0)


@pytest.fixture(scope="session")
def star_integrated(star_shoot):
    return integrate_orbit(star_shoot.state, STAR_THETA)


@pytest.fixture(scope="session")
def star_inner():
    """Inner minimizer on the fiber of the published boundary vector."""
    return inner_minimize(BoundaryParams(A_STAR, 1.0, STAR_THETA))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def star_outer():
    from spbc.fixtures import A_TEST_PATH
    from spbc.outersolve import outer_minimize

    return outer_minimize(A_TEST_PATH, STAR_THETA, 1.0)


# acceptance outcomes: criterion -> list of (part, passed, detail)
ACCEPTANCE = {}


@pytest.fixture
def record():
    def _record(criterion, part, passed, detail=""):
        ACCEPTANCE.setdefault(criterion, []).append((part, bool(passed), detail))
        print(f"criterion {criterion} [{part}] {'PASS' if passed else 'FAIL'} {detail}")
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for c in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[c]
        # stretch parts are reported but do not decide the criterion
        ok = all(p for name, p, _ in parts if not name.startswith("stretch"))
        failed = [f"{name}: {d}" for name, p, d in parts if not p]
        line = f"criterion {c:>2}: {'PASS' if ok else 'FAIL'}"
        if failed:
            line += "  (" + "; ".join(failed) + ")"
        tr.write_line(line)
