import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from nbreg.orbits import cols4bp_orbit, pps4bp_collinear_orbit, pps4bp_sbc_orbit, schubart_orbit

ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


# -- independent oracles ----------------------------------------------------------------

def newton_rhs(masses, dim):
    """Plain Newtonian right-hand side written out pair by pair."""
    m = np.asarray(masses, dtype=float)
    n = len(m)

    def rhs(t, y):
        q = y[: n * dim].reshape(n, dim)
        a = np.zeros_like(q)
        for j in range(n):
            for k in range(n):
                if j != k:
                    d = q[k] - q[j]
                    a[j] += m[k] * d / np.linalg.norm(d) ** 3
        return np.concatenate([y[n * dim:], a.ravel()])

    return rhs


def reference_flow(rhs, y0, t_end, rtol=1e-13, atol=1e-14):
    """High-accuracy DOP853 solution from scipy, used as an external oracle."""
    sol = solve_ivp(rhs, (0.0, t_end), np.asarray(y0, dtype=float), method="DOP853",
                    rtol=rtol, atol=atol, dense_output=True)
    assert sol.success, sol.message
    return sol


def kepler_period(a, total_mass):
    return 2 * math.pi * math.sqrt(a ** 3 / total_mass)


# -- shared orbits (solved once per session) ------------------------------------------------

@pytest.fixture(scope="session")
def schubart_equal():
    return schubart_orbit((1 / 3, 1 / 3, 1 / 3))


@pytest.fixture(scope="session")
def schubart_paper():
    return schubart_orbit((0.333333, 0.333334, 0.333333))


@pytest.fixture(scope="session")
def cols4bp_1():
    return cols4bp_orbit(1.0)


@pytest.fixture(scope="session")
def cols4bp_10():
    return cols4bp_orbit(10.0)


@pytest.fixture(scope="session")
def ppscol_1():
    return pps4bp_collinear_orbit(1.0)


@pytest.fixture(scope="session")
def sbc_1():
    return pps4bp_sbc_orbit(1.0)
