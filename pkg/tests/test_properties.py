import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from nbreg.integrate import IntegratorConfig
from nbreg.nbody import PhaseState, accelerations, extreme_distances, integrals, simulate
from nbreg.problems import RegularizedState, make_problem
from nbreg.regularize import (col2bp_field, col2bp_solve, levi_civita, levi_civita_inverse,
                              physical_momentum, regularized_momentum)

coord = st.floats(-3.0, 3.0, allow_nan=False)
mass = st.floats(0.1, 5.0)


@st.composite
def systems(draw, n_min=2, n_max=5, dims=(1, 2, 3)):
    n = draw(st.integers(n_min, n_max))
    dim = draw(st.sampled_from(dims))
    q = np.array(draw(st.lists(coord, min_size=n * dim, max_size=n * dim))).reshape(n, dim)
    v = np.array(draw(st.lists(coord, min_size=n * dim, max_size=n * dim))).reshape(n, dim)
    m = tuple(draw(st.lists(mass, min_size=n, max_size=n)))
    st_ = PhaseState(q, v)
    assume(extreme_distances(st_)[0] > 1e-2)
    return st_, m


@given(systems())
def test_third_law(sys):
    state, m = sys
    a = accelerations(state, m)
    F = np.asarray(m)[:, None] * a
    scale = np.sum(np.abs(F)) + 1e-300
    assert np.max(np.abs(F.sum(0))) <= 1e-12 * scale


@given(systems(), st.lists(coord, min_size=3, max_size=3))
def test_translation_invariance(sys, shift):
    state, m = sys
    c = np.asarray(shift[: state.positions.shape[1]])
    moved = PhaseState(state.positions + c, state.velocities)
    a, b = accelerations(state, m), accelerations(moved, m)
    # shifting changes the rounding of q_k - q_j, so compare in a scale-aware way
    scale = np.max(np.abs(a)) + 1e-300
    assert np.max(np.abs(a - b)) <= 1e-9 * scale * (1 + np.max(np.abs(c)))


@given(systems(dims=(1,)))
def test_collinear_angular_momentum_exactly_zero(sys):
    state, m = sys
    assert np.all(integrals(state, m).angular_momentum == 0.0)


@given(systems())
def test_reflection_rules(sys):
    state, m = sys
    I0 = integrals(state, m)
    I1 = integrals(PhaseState(-state.positions, -state.velocities), m)
    for name in ("self_potential", "kinetic", "total_energy", "half_moment_of_inertia"):
        assert getattr(I1, name) == getattr(I0, name)
    np.testing.assert_array_equal(I1.center_of_mass, -I0.center_of_mass)
    np.testing.assert_array_equal(I1.linear_momentum, -I0.linear_momentum)
    # q x v picks up (-1)(-1): the sign rule in the reflected frame
    np.testing.assert_allclose(I1.angular_momentum, I0.angular_momentum, rtol=1e-15, atol=1e-15)


@given(systems())
def test_integral_set_invariants(sys):
    state, m = sys
    I = integrals(state, m)
    assert I.kinetic >= 0 and I.self_potential > 0 and I.half_moment_of_inertia >= 0
    assert I.total_energy == I.kinetic - I.self_potential


@given(st.floats(1e-3, 1e3), st.floats(-math.pi, math.pi))
def test_planar_levi_civita_round_trip(r, phi):
    x = np.array([r * math.cos(phi), r * math.sin(phi)])
    Q = levi_civita_inverse(x)
    np.testing.assert_allclose(levi_civita(Q), x, rtol=1e-12, atol=1e-12 * r)
    assert Q[0] >= 0


@given(st.floats(1e-6, 1e6))
def test_collinear_levi_civita_round_trip(x):
    Q = levi_civita_inverse(x)
    assert Q >= 0 and abs(levi_civita(Q) - x) <= 1e-12 * x


@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4))
def test_momentum_round_trip(vals):
    Q, p = np.array(vals[:2]), np.array(vals[2:])
    assume(Q @ Q > 1e-4)
    back = physical_momentum(Q, regularized_momentum(Q, p))
    np.testing.assert_allclose(back, p, rtol=1e-12, atol=1e-12 * (1 + np.max(np.abs(p))))


@given(st.floats(0.1, 5), st.floats(0.1, 5), st.floats(-5, -0.05))
def test_col2bp_collision_speed(m1, m2, E):
    cf = col2bp_solve(m1, m2, E)
    assert abs(cf.wdot(0.0) ** 2 - (m1 + m2) / 2) <= 1e-12 * (m1 + m2)
    assert abs(E * cf.w_max ** 2 + m1 * m2) <= 1e-12 * m1 * m2
    f = col2bp_field(m1, m2, E)
    y = cf.state(0.0)
    assert abs(f.residual(y)) <= 1e-12 * (1 + m1 * m2)
    assert f(0.0, y)[-1] == 0.0  # dt/ds vanishes on the collision set


@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4), st.floats(0.2, 4))
def test_cols4bp_symmetry_is_exact(vals, m):
    # physical velocities are infinite on the collision set itself
    assume(min(abs(vals[0]), abs(vals[1])) > 1e-3)
    p = make_problem("cols4bp", m=m)
    s = p.to_physical(RegularizedState(np.array(vals[:2]), np.array(vals[2:])))
    assert np.array_equal(s.positions[3], -s.positions[0])
    assert np.array_equal(s.positions[2], -s.positions[1])
    assert np.array_equal(s.velocities[3], -s.velocities[0])


@settings(max_examples=15, deadline=None)
@given(systems(n_min=2, n_max=3, dims=(2,)))
def test_conservation_along_flow(sys):
    state, m = sys
    tol = 1e-10
    f, traj = simulate(state, m, 1.0, IntegratorConfig(tol, tol))
    assume(traj.completed)
    states = [f.state(y) for y in traj.y]
    # away from close encounters only
    assume(min(extreme_distances(s)[0] for s in states) > 0.2)
    I = [integrals(s, m) for s in states]
    H0, A0, L0 = I[0].total_energy, I[0].angular_momentum, I[0].linear_momentum
    scale = 1 + abs(H0) + I[0].kinetic + I[0].self_potential
    assert max(abs(i.total_energy - H0) for i in I) <= 100 * tol * scale
    assert max(np.max(np.abs(i.angular_momentum - A0)) for i in I) <= 100 * tol * scale
    assert max(np.max(np.abs(i.linear_momentum - L0)) for i in I) <= 100 * tol * scale
    # L is the centre-of-mass velocity
    for s, i in zip(traj.t, I):
        np.testing.assert_allclose(i.center_of_mass, I[0].center_of_mass + s * L0,
                                   atol=100 * tol * scale)
