import math

import numpy as np
import pytest

from nbreg.errors import NonNegativeEnergy, NotOnEnergyLevel
from nbreg.integrate import Event, IntegratorConfig, integrate, locate_events
from nbreg.regularize import (bracket_series, col2bp_field, col2bp_solve, levi_civita, levi_civita_inverse,
                              physical_momentum, poincare_transform, regularized_momentum,
                              verify_bracket_identities)

from conftest import kepler_period


def test_levi_civita_examples():
    assert levi_civita(2.0) == 4.0
    np.testing.assert_array_equal(levi_civita(np.array([0.0, 1.0])), [-1.0, 0.0])
    assert levi_civita(0.0) == 0.0
    np.testing.assert_array_equal(levi_civita(np.zeros(2)), [0.0, 0.0])


def test_planar_square_is_complex_square():
    rng = np.random.default_rng(3)
    for Q in rng.normal(size=(20, 2)):
        z = complex(*Q) ** 2
        np.testing.assert_allclose(levi_civita(Q), [z.real, z.imag], rtol=1e-15, atol=1e-15)
        assert np.linalg.norm(levi_civita(Q)) == pytest.approx(Q @ Q, rel=1e-14)


def test_inverse_branch():
    assert levi_civita_inverse(9.0) == 3.0
    Q = levi_civita_inverse(np.array([-4.0, 0.0]))
    np.testing.assert_allclose(Q, [0.0, 2.0])
    Q = levi_civita_inverse(np.array([3.0, -4.0]))
    assert Q[0] >= 0
    np.testing.assert_allclose(levi_civita(Q), [3.0, -4.0], rtol=1e-14)


def test_momentum_round_trip():
    rng = np.random.default_rng(4)
    for _ in range(20):
        Q, p = rng.normal(size=2), rng.normal(size=2)
        np.testing.assert_allclose(physical_momentum(Q, regularized_momentum(Q, p)), p, rtol=1e-12, atol=1e-14)


def test_closed_form_equal_masses():
    cf = col2bp_solve(1.0, 1.0, -1.0)
    assert cf.omega == 1.0 and cf.w_max == 1.0
    assert cf.collision_speed == 1.0
    assert cf.period_s == pytest.approx(2 * math.pi)
    # Kepler's third law on the degenerate ellipse, a = m1 m2 / (-2E) = 1/2
    assert cf.collision_period_t == pytest.approx(kepler_period(0.5, 2.0), abs=1e-14)
    assert cf.collision_period_t == pytest.approx(math.pi / 2, abs=1e-14)


@pytest.mark.parametrize("m1,m2,E", [(1, 1, -1), (0.3, 2.0, -0.7), (5.0, 0.1, -3.0)])
def test_closed_form_invariants(m1, m2, E):
    cf = col2bp_solve(m1, m2, E)
    assert cf.omega > 0 and cf.w_max > 0
    assert E * cf.w_max ** 2 + m1 * m2 == pytest.approx(0, abs=1e-14)
    assert cf.wdot(0.0) ** 2 == pytest.approx((m1 + m2) / 2, rel=1e-14)
    a = m1 * m2 / (-2 * E)
    assert cf.collision_period_t == pytest.approx(kepler_period(a, m1 + m2), rel=1e-12)


def test_nonnegative_energy_rejected():
    with pytest.raises(NonNegativeEnergy):
        col2bp_solve(1, 1, 0.0)
    with pytest.raises(NonNegativeEnergy):
        col2bp_solve(1, 1, 0.5)


def test_collision_doubling():
    cf = col2bp_solve(1.0, 1.0, -1.0)
    # w has zeros at s = 0 and s = pi within one s-period [0, 2 pi)
    s = np.linspace(0, cf.period_s, 20001)[:-1]
    w = cf.w(s)
    zeros_w = np.count_nonzero(w == 0) + np.count_nonzero(np.sign(w[:-1]) * np.sign(w[1:]) < 0)
    assert zeros_w == 2
    # x = w^2 vanishes once per physical collision period
    T = cf.collision_period_t
    t = np.linspace(0, T, 401)[1:-1]
    assert min(cf.x_of_t(ti) for ti in t) > 0
    assert cf.x_of_t(T) == pytest.approx(0, abs=1e-12)
    assert cf.t(cf.period_s) == pytest.approx(2 * T)


def test_bracket_identities_closed_form_vanish():
    cf = col2bp_solve(1.0, 1.0, -1.0)
    s = np.linspace(0, 2 * math.pi, 500)
    r = verify_bracket_identities(np.sin(s), np.cos(s), -np.sin(s), 1, 1, -1)
    assert r.eq_motion <= 1e-15 and r.eq_energy <= 1e-15
    r = verify_bracket_identities(cf.w(s), cf.wdot(s), cf.wddot(s), 1, 1, -1)
    assert r.eq_motion <= 1e-14 and r.eq_energy <= 1e-14


def test_bracket_identity_detects_violation():
    delta = 1e-3
    # E w^2 - w'^2 + 1 with w = 0, w' = 1 gives 0; shift w'^2 by delta
    w, wdot = np.array([0.0]), np.array([math.sqrt(1 + delta)])
    r = verify_bracket_identities(w, wdot, np.array([0.0]), 1, 1, -1)
    assert r.eq_energy == pytest.approx(delta, rel=1e-12)


def test_numeric_bracket_identities():
    f = col2bp_field(1.0, 1.0, -1.0)
    cf = col2bp_solve(1.0, 1.0, -1.0)
    traj = integrate(f, cf.state(0.0), (0.0, 10 * math.pi), IntegratorConfig(1e-10, 1e-12))
    r = verify_bracket_identities(*bracket_series(f, traj.y, 1, 1), 1, 1, -1)
    assert r.eq_motion <= 1e-8 and r.eq_energy <= 1e-8


@pytest.mark.parametrize("m1,m2,E", [(1, 1, -1), (0.4, 1.7, -0.6)])
def test_numerics_match_closed_form_through_ten_collisions(m1, m2, E):
    cf = col2bp_solve(m1, m2, E)
    f = col2bp_field(m1, m2, E)
    s_end = 10 * math.pi / cf.omega
    traj = integrate(f, cf.state(0.0), (0.0, s_end), IntegratorConfig(1e-12, 1e-13))
    mu = cf.reduced_mass
    err = 0.0
    for s in np.linspace(0, s_end, 3001):
        y = traj(s)
        err = max(err, abs(y[0] - cf.w(s)), abs(y[1] / (4 * mu) - cf.wdot(s)), abs(y[2] - cf.t(s)))
    assert err <= 1e-8
    zeros = locate_events(f, traj, lambda y: y[0])
    assert len(zeros) == 10


def test_collision_transit_speed():
    m1, m2, E = 0.7, 1.9, -1.3
    cf = col2bp_solve(m1, m2, E)
    f = col2bp_field(m1, m2, E)
    y0 = cf.state(0.5 * math.pi / cf.omega)  # start at maximum separation
    traj = integrate(f, y0, (0.0, 10.0), IntegratorConfig(1e-12, 1e-13), [Event(lambda y: y[0], -1)])
    y = traj.y[-1]
    assert abs(y[0]) <= 1e-12
    wdot = f(0.0, y)[0]
    assert abs(abs(wdot) - math.sqrt((m1 + m2) / 2)) <= 1e-8


@pytest.mark.parametrize("m1,m2,E", [(1, 1, -1), (3.0, 0.2, -0.5)])
def test_collision_speed_on_level_set(m1, m2, E):
    f = col2bp_field(m1, m2, E)
    mu = m1 * m2 / (m1 + m2)
    P = math.sqrt(8 * mu * m1 * m2)
    y = np.array([0.0, P, 0.0])
    assert abs(f.residual(y)) <= 1e-12
    assert f(0.0, y)[0] ** 2 == pytest.approx((m1 + m2) / 2, rel=1e-13)
    assert f(0.0, y)[2] == 0.0  # dt/ds vanishes only at the collision


def test_energy_pinning_along_flow():
    f = col2bp_field(1.0, 2.0, -0.8, dim=2)
    Q = levi_civita_inverse(np.array([1.3, 0.4]))
    P = regularized_momentum(Q, np.array([0.1, 0.3]))
    # choose the momentum scale that puts the state on Gamma = 0
    mu = 2 / 3
    k = (2.0 + (-0.8) * (Q @ Q)) * 8 * mu / (P @ P)
    y0 = np.concatenate([Q, math.sqrt(k) * P, [0.0]])
    assert abs(f.residual(y0)) <= 1e-12
    tol = 1e-10
    traj = integrate(f, y0, (0.0, 30.0), IntegratorConfig(tol, tol))
    assert max(abs(f.residual(y)) for y in traj.y) <= 100 * tol
    assert np.all(np.diff(traj.y[:, -1]) >= 0)


def test_off_level_state_rejected():
    f = col2bp_field(1.0, 1.0, -1.0)
    with pytest.raises(NotOnEnergyLevel):
        f.check_level(np.array([1.0, 1.0, 0.0]))


def test_identity_time_change_gives_physical_field():
    f = poincare_transform(lambda q, p: 0.5 * p @ p + 0.5 * q @ q, lambda q: 1.0, 0.3, 1)
    y = np.array([0.4, -1.1, 0.0])
    np.testing.assert_allclose(f(0.0, y), [-1.1, -0.4, 1.0], rtol=1e-6, atol=1e-8)


def test_generic_transform_matches_analytic_col2bp():
    m1, m2, E = 1.0, 1.0, -1.0
    mu = 0.5

    def to_physical(Q, P):
        return Q ** 2, P / (2 * Q)

    f = poincare_transform(lambda x, p: p @ p / (2 * mu) - m1 * m2 / x[0], lambda x: x[0], E, 1, to_physical)
    g = col2bp_field(m1, m2, E)
    for y in ([0.8, 0.3, 0.0], [1.2, -1.5, 2.0]):
        np.testing.assert_allclose(f(0.0, np.array(y)), g(0.0, np.array(y)), rtol=1e-6, atol=1e-7)
