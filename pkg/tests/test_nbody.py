import math

import numpy as np
import pytest

from nbreg.errors import CollisionConfiguration, InsufficientData
from nbreg.integrate import IntegratorConfig
from nbreg.nbody import (MassVector, NBodyField, PhaseState, SingularityKind, accelerations,
                         extreme_distances, integrals, simulate, singularity_diagnostics)

from conftest import newton_rhs


def test_mass_vector_invariants():
    assert MassVector((1, 2)).total == 3
    with pytest.raises(ValueError):
        MassVector((1.0,))
    with pytest.raises(ValueError):
        MassVector((1.0, 0.0))
    with pytest.raises(ValueError):
        MassVector((1.0, -2.0, 1.0))


def test_phase_state_shapes():
    with pytest.raises(ValueError):
        PhaseState(np.zeros((3, 1)), np.zeros((2, 1)))
    with pytest.raises(ValueError):
        PhaseState(np.zeros((2, 4)), np.zeros((2, 4)))


def test_two_body_acceleration():
    # a_j = m_k (q_k - q_j) / r^3 = 1 * 2 / 8, pointing at the partner
    a = accelerations(PhaseState([[-1.0], [1.0]], [[0.0], [0.0]]), (1, 1))
    np.testing.assert_allclose(a[:, 0], [0.25, -0.25], rtol=0, atol=1e-15)


def test_symmetric_middle_body_is_unaccelerated():
    q = np.array([[0.3, -1.2], [0.0, 0.0], [-0.3, 1.2]])
    a = accelerations(PhaseState(q, np.zeros_like(q)), (1, 1, 1))
    np.testing.assert_allclose(a[1], 0.0, atol=1e-15)


def test_collapse_seed_accelerations():
    third = 1 / 3
    a = accelerations(PhaseState([[-1.0], [0.0], [1.0]], np.zeros((3, 1))), (third, third, third))
    assert a[0, 0] > 0
    assert a[2, 0] == -a[0, 0]
    assert a[1, 0] == 0.0


def test_coincident_bodies_raise():
    st = PhaseState([[0.0], [0.0]], [[0.0], [0.0]])
    with pytest.raises(CollisionConfiguration):
        accelerations(st, (1, 1))
    with pytest.raises(CollisionConfiguration):
        integrals(st, (1, 1))


def test_integrals_example():
    I = integrals(PhaseState([[-1.0], [1.0]], [[0.0], [0.0]]), (1, 1))
    assert I.self_potential == 0.5
    assert I.kinetic == 0.0
    assert I.total_energy == -0.5
    assert I.center_of_mass[0] == 0.0
    assert I.linear_momentum[0] == 0.0
    assert I.half_moment_of_inertia == 1.0
    assert np.all(I.angular_momentum == 0.0)


def test_collinear_angular_momentum_is_zero():
    rng = np.random.default_rng(1)
    st = PhaseState(rng.normal(size=(4, 1)), rng.normal(size=(4, 1)))
    assert np.all(integrals(st, (1, 2, 3, 4)).angular_momentum == 0.0)


def _circular_pair():
    # m = (1, 1) at (+-1/2, 0): v_c^2 / (1/2) = 1 / 1^2 -> v_c = sqrt(1/2)
    vc = math.sqrt(0.5)
    return PhaseState([[0.5, 0.0], [-0.5, 0.0]], [[0.0, vc], [0.0, -vc]])


def test_circular_orbit_energy_negative_and_conserved():
    st = _circular_pair()
    H0 = integrals(st, (1, 1)).total_energy
    assert H0 == pytest.approx(2 * 0.5 * 0.5 - 1.0)
    tol = 1e-10
    f, traj = simulate(st, (1, 1), 10.0, IntegratorConfig(tol, tol))
    assert traj.completed
    H = [integrals(f.state(y), (1, 1)).total_energy for y in traj.y]
    A = [float(integrals(f.state(y), (1, 1)).angular_momentum) for y in traj.y]
    assert max(abs(h - H0) for h in H) <= 100 * tol
    assert max(abs(a - A[0]) for a in A) <= 100 * tol


def test_field_matches_independent_newton_rhs():
    rng = np.random.default_rng(7)
    m = (1.0, 0.5, 2.0, 0.7)
    f = NBodyField(m, dim=2)
    ref = newton_rhs(m, 2)
    for _ in range(5):
        y = rng.normal(size=16)
        np.testing.assert_allclose(f(0.0, y), ref(0.0, y), rtol=1e-12, atol=1e-12)


def test_extreme_distances():
    assert extreme_distances(PhaseState([[-1.0], [0.0], [1.0]], np.zeros((3, 1)))) == (1.0, 2.0)
    assert extreme_distances(PhaseState(np.zeros((3, 2)), np.zeros((3, 2)))) == (0.0, 0.0)
    lo, hi = extreme_distances(PhaseState([[0.0, 0.0], [3.0, 4.0]], np.zeros((2, 2))))
    assert lo == hi == 5.0


def _history(f, traj, masses):
    return [(f.state(y, t), integrals(f.state(y, t), masses)) for t, y in zip(traj.t, traj.y)]


def test_total_collapse_diagnosed():
    third = 1 / 3
    masses = (third, third, third)
    f, traj = simulate(PhaseState([[-1.0], [0.0], [1.0]], np.zeros((3, 1))), masses, 10.0)
    assert not traj.completed
    verdict = singularity_diagnostics(_history(f, traj, masses))
    assert verdict.kind == SingularityKind.TOTAL_COLLAPSE


def test_two_body_fall_is_a_collision():
    f, traj = simulate(PhaseState([[-0.5], [0.5]], np.zeros((2, 1))), (1, 1), 2.0)
    verdict = singularity_diagnostics(_history(f, traj, (1, 1)))
    assert verdict.kind == SingularityKind.COLLISION
    assert verdict.inertia_bounded


def test_circular_orbit_no_singularity():
    f, traj = simulate(_circular_pair(), (1, 1), 10.0)
    verdict = singularity_diagnostics(_history(f, traj, (1, 1)))
    assert verdict.kind == SingularityKind.NONE


def test_diagnostics_need_samples():
    st = _circular_pair()
    with pytest.raises(InsufficientData):
        singularity_diagnostics([st] * 3)
