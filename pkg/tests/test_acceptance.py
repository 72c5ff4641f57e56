"""Acceptance criteria 1-10, each run at its stated tolerance and time budget.

Every criterion records one PASS/FAIL line, printed in the pytest terminal
summary.  ``python tests/test_acceptance.py`` runs them without pytest.
"""

import math
import sys
import time

import numpy as np
import pytest

from nbreg.benchmark import compare
from nbreg.errors import TripleCollisionChart
from nbreg.integrate import Event, IntegratorConfig, integrate, locate_events
from nbreg.nbody import (PhaseState, SingularityKind, extreme_distances, integrals, simulate,
                         singularity_diagnostics)
from nbreg.orbits import ORBIT_CONFIG, pps4bp_sbc_orbit, schubart_orbit
from nbreg.problems import RegularizedState, make_problem
from nbreg.regularize import (bracket_series, col2bp_field, col2bp_solve, levi_civita,
                              levi_civita_inverse, verify_bracket_identities)
from nbreg.stability import Classification, find_boundary, monodromy, orbit_stability, stability_report

from conftest import ACCEPTANCE_LINES, kepler_period, newton_rhs, reference_flow

S, U = Classification.STABLE, Classification.UNSTABLE


def _record(number, title, budget, fn):
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failure, reported with its cause
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    dt = time.perf_counter() - t0
    in_time = dt < budget
    verdict = "PASS" if ok and in_time else "FAIL"
    note = "" if in_time else f" (over budget {budget:g} s)"
    line = f"[{verdict}] {number:2d}. {title}: {detail}; {dt:.1f} s{note}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok and in_time, line


# -- 1 ---------------------------------------------------------------------------------

def crit_col2bp():
    cf = col2bp_solve(1.0, 1.0, -1.0)
    f = col2bp_field(1.0, 1.0, -1.0)
    # collision velocity: closed form, and the field evaluated on the level set at w = 0
    speed_cf = abs(cf.wdot(0.0) - 1.0)
    speed_field = abs(abs(f(0.0, cf.state(0.0))[0]) - 1.0)
    period = abs(cf.collision_period_t - kepler_period(0.5, 2.0))
    s_end = 10 * math.pi / cf.omega
    traj = integrate(f, cf.state(0.0), (0.0, s_end), IntegratorConfig(1e-12, 1e-13))
    err = max(max(abs(y[0] - cf.w(s)), abs(y[1] / 2 - cf.wdot(s)), abs(y[2] - cf.t(s)))
              for s, y in ((s, traj(s)) for s in np.linspace(0, s_end, 2001)))
    hits = len(locate_events(f, traj, lambda y: y[0]))
    ok = speed_cf <= 1e-12 and speed_field <= 1e-12 and period <= 1e-8 and err <= 1e-8 and hits == 10
    return ok, (f"|w'-1|={max(speed_cf, speed_field):.1e}, period err {period:.1e}, "
                f"pointwise err {err:.1e} over {hits} collisions")


# -- 2 ---------------------------------------------------------------------------------

def crit_brackets():
    worst = 0.0
    for m1, m2, E in ((1, 1, -1), (0.4, 1.7, -0.6)):
        cf = col2bp_solve(m1, m2, E)
        f = col2bp_field(m1, m2, E)
        traj = integrate(f, cf.state(0.0), (0.0, 10 * math.pi / cf.omega), IntegratorConfig(1e-10, 1e-12))
        r = verify_bracket_identities(*bracket_series(f, traj.y, m1, m2), m1, m2, E)
        worst = max(worst, r.eq_motion, r.eq_energy)
    return worst <= 1e-8, f"max residual {worst:.1e}"


# -- 3 ---------------------------------------------------------------------------------

def _chart_cases():
    m = np.array([0.5, 0.3, 0.8])[:, None]
    q = np.array([[-1.0], [0.1], [1.2]])
    v = np.array([[0.2], [-0.1], [0.05]])
    yield "col3bp", {"masses": (0.5, 0.3, 0.8)}, PhaseState(q - (m * q).sum(0) / m.sum(),
                                                            v - (m * v).sum(0) / m.sum())
    yield "cols4bp", {"m": 0.7}, PhaseState([[2.0], [0.6], [-0.6], [-2.0]], [[0.2], [0.7], [-0.7], [-0.2]])
    q1, q2, v1, v2 = np.array([1.0, 0.3]), np.array([-0.2, 0.9]), np.array([0.1, 0.2]), np.array([-0.3, 0.05])
    yield "pps4bp", {"m": 0.6, "channels": "sbc"}, PhaseState([q1, q2, -q1, -q2], [v1, v2, -v1, -v2])
    q1, q2, v1, v2 = np.array([2.5, 0.2]), np.array([0.8, -0.1]), np.array([0.1, 0.05]), np.array([0.5, 0.1])
    yield "pps4bp", {"m": 0.6, "channels": "collinear"}, PhaseState([q1, q2, -q1, -q2], [v1, v2, -v1, -v2])


def crit_charts():
    worst, parts = 0.0, []
    for tag, kw, state in _chart_cases():
        n, dim = state.positions.shape
        p0 = make_problem(tag, **kw)
        E = integrals(state, p0.masses.masses).total_energy
        p = make_problem(tag, energy=E, **kw)
        f = p.field
        traj = integrate(f, p.from_physical(state).y, (0.0, 1e3), IntegratorConfig(1e-12, 1e-12),
                         [Event(lambda y: y[-1] - 1.0, +1)], guard=f.check)
        got = p.to_physical(RegularizedState.from_y(traj.y[-1], traj.t[-1], E))
        ref = reference_flow(newton_rhs(p.masses.masses, dim), state.flat(), 1.0)
        rmin = min(extreme_distances(PhaseState.from_flat(ref.sol(t), n, dim))[0]
                   for t in np.linspace(0, 1, 101))
        if rmin <= 0.1:
            return False, f"{tag} test state comes within {rmin:.3f}"
        want = PhaseState.from_flat(ref.sol(1.0), n, dim)
        dev = max(np.max(np.abs(got.positions - want.positions)), np.max(np.abs(got.velocities - want.velocities)))
        worst = max(worst, dev)
        parts.append(f"{tag}{'/' + kw['channels'] if 'channels' in kw else ''} {dev:.1e}")
    return worst <= 1e-6, "deviation " + ", ".join(parts)


# -- 4 ---------------------------------------------------------------------------------

def crit_collapse():
    third = 1 / 3
    masses = (third,) * 3
    state = PhaseState([[-1.0], [0.0], [1.0]], np.zeros((3, 1)))
    f, traj = simulate(state, masses, 10.0)
    history = [f.state(y, t) for t, y in zip(traj.t, traj.y)]
    verdict = singularity_diagnostics(history, masses)
    E = integrals(state, masses).total_energy
    p = make_problem("col3bp", masses=masses, energy=E)
    try:
        integrate(p.field, p.from_physical(state).y, (0.0, 1e9), IntegratorConfig(1e-10, 1e-12),
                  guard=p.field.check)
        chart = False
    except TripleCollisionChart:
        chart = True
    ok = verdict.kind == SingularityKind.TOTAL_COLLAPSE and chart and traj.t[-1] < 10.0
    return ok, f"diagnostic {verdict.kind.value} before t={traj.t[-1]:.4f}, chart abort {chart}"


# -- 5 ---------------------------------------------------------------------------------

def crit_schubart():
    orb = schubart_orbit((0.333333, 0.333334, 0.333333))
    rep = stability_report(orb)
    ok = orb.residual <= 1e-10 and rep.classification == S
    return ok, f"residual {orb.residual:.1e}, {rep.classification.value}, max |lambda| {rep.max_modulus:.6f}"


# -- 6-8 -------------------------------------------------------------------------------

def _windows(name, expect):
    got = {m: orbit_stability(name, m) for m in expect}
    bad = [m for m in expect if got[m].classification != expect[m]]
    text = ", ".join(f"m={m:g} {got[m].classification.value[0]}({got[m].max_modulus:.4f})" for m in expect)
    return not bad, text


def crit_cols4bp():
    ok, text = _windows("cols4bp", {1.0: S, 10.0: U, 100.0: S})
    lo = find_boundary("cols4bp", (2.0, 4.0), width=1e-2)
    hi = find_boundary("cols4bp", (30.0, 40.0), width=1e-1)
    ok = ok and abs(lo.m - 2.83) <= 0.05 and abs(hi.m - 35.4) <= 0.5
    return ok, (f"{text}; m*={lo.m:.3f} in [{lo.bracket[0]:.3f}, {lo.bracket[1]:.3f}], "
                f"m*={hi.m:.2f} in [{hi.bracket[0]:.2f}, {hi.bracket[1]:.2f}] ({hi.lower.value}/{hi.upper.value})")


def crit_pps_collinear():
    return _windows("pps4bp-collinear", {0.3: U, 0.5: S, 0.8: U, 3.0: U, 40.0: S})


def crit_sbc():
    orb = pps4bp_sbc_orbit(1.0)
    p = orb.problem
    traj = integrate(p.field, orb.y0, (0.0, orb.period_s), ORBIT_CONFIG)
    A = max(abs(p.angular_momentum(y)) for y in traj.y)
    exists = orb.residual <= 1e-10 and A <= 1e-9 and orb.itinerary.alternates()
    ok, text = _windows("pps4bp-sbc", {0.23: S, 0.4: U, 0.9: S})
    b = find_boundary("pps4bp-sbc", (0.4, 0.7), width=2e-3)
    ok = ok and exists and abs(b.m - 0.538) <= 0.01
    return ok, (f"m=1 residual {orb.residual:.1e}, max|A| {A:.1e}, alternating {orb.itinerary.alternates()}; "
                f"{text}; m*={b.m:.4f} in [{b.bracket[0]:.4f}, {b.bracket[1]:.4f}]")


# -- 9 ---------------------------------------------------------------------------------

def crit_properties():
    from nbreg.orbits import cols4bp_orbit

    checks = {}
    orbits = [cols4bp_orbit(1.0), cols4bp_orbit(10.0), pps4bp_sbc_orbit(1.0),
              schubart_orbit((1 / 3, 1 / 3, 1 / 3))]
    det_err, pair_err = 0.0, 0.0
    for orb in orbits:
        M = monodromy(orb)
        det_err = max(det_err, abs(np.linalg.det(M) - 1))
        ev = np.linalg.eigvals(M)
        pair_err = max(pair_err, max(np.min(np.abs(lam * ev - 1)) / (1 + abs(lam) ** 2) for lam in ev))
    checks["det"] = det_err <= 1e-6
    checks["pairing"] = pair_err <= 1e-4

    orb = orbits[0]
    M = monodromy(orb)
    f, n = orb.problem.field, M.shape[0]
    fd = np.empty_like(M)
    for i in range(n):
        d = 1e-7 * (1 + abs(orb.y0[i]))
        yp, ym = orb.y0.copy(), orb.y0.copy()
        yp[i] += d
        ym[i] -= d
        a = integrate(f, yp, (0.0, orb.period_s), ORBIT_CONFIG).y[-1][:n]
        b = integrate(f, ym, (0.0, orb.period_s), ORBIT_CONFIG).y[-1][:n]
        fd[:, i] = orb.deck * (a - b) / (2 * d)
    fd_err = np.max(np.abs(M - fd)) / np.max(np.abs(M))
    checks["variational"] = fd_err <= 1e-4

    tol = 1e-10
    # well-separated bound triple: the bound is stated away from collisions
    state = PhaseState([[2.0, 0.0], [-1.0, 1.7], [-1.0, -1.7]], [[0.0, 0.4], [-0.35, -0.2], [0.35, -0.2]])
    masses = (1.0, 0.8, 1.2)
    fld, traj = simulate(state, masses, 10.0, IntegratorConfig(tol, tol))
    I = [integrals(fld.state(y), masses) for y in traj.y]
    sts = [fld.state(y) for y in traj.y]
    close = min(extreme_distances(s)[0] for s in sts)
    drift = max(max(abs(i.total_energy - I[0].total_energy), abs(float(i.angular_momentum - I[0].angular_momentum)),
                    float(np.max(np.abs(i.linear_momentum - I[0].linear_momentum)))) for i in I)
    checks["conservation"] = traj.completed and close > 0.5 and drift <= 100 * tol

    rng = np.random.default_rng(0)
    rt = 0.0
    for x in rng.normal(size=(2000, 2)) * 10.0 ** rng.uniform(-3, 3, (2000, 1)):
        rt = max(rt, np.max(np.abs(levi_civita(levi_civita_inverse(x)) - x)) / np.linalg.norm(x))
    checks["levi-civita"] = rt <= 1e-12

    zero = all(np.all(integrals(PhaseState(rng.normal(size=(4, 1)), rng.normal(size=(4, 1))),
                                (1, 2, 3, 4)).angular_momentum == 0.0) for _ in range(200))
    checks["A=0"] = zero
    ok = all(checks.values())
    detail = (f"det {det_err:.1e}, pairing {pair_err:.1e}, variational {fd_err:.1e}, drift {drift:.1e}, "
              f"round trip {rt:.1e}, collinear A exact {zero}")
    return ok, detail


# -- 10 --------------------------------------------------------------------------------

def crit_benchmark():
    rows = {r.method: r for r in compare([1e-6], (1e-10,))}
    raw, reg = rows["raw"], rows["regularized"]
    raw_failed = raw.status != "Completed"
    ratio = raw.energy_drift / reg.energy_drift if reg.energy_drift > 0 else math.inf
    ok = reg.status == "Completed" and (raw_failed or ratio >= 1e3)
    return ok, (f"raw {raw.status} drift {raw.energy_drift:.1e}, regularized drift {reg.energy_drift:.1e}, "
                f"ratio {ratio:.1e}")


CRITERIA = [
    (1, "Col2BP closed form", 1.0, crit_col2bp),
    (2, "bracket identities", 1.0, crit_brackets),
    (3, "chart consistency", 10.0, crit_charts),
    (4, "total collapse", 5.0, crit_collapse),
    (5, "Schubart orbit stability", 30.0, crit_schubart),
    (6, "ColS4BP windows", 600.0, crit_cols4bp),
    (7, "PPS4BP collinear windows", 600.0, crit_pps_collinear),
    (8, "PPS4BP SBC orbit", 900.0, crit_sbc),
    (9, "property suite", 120.0, crit_properties),
    (10, "benchmark direction", 60.0, crit_benchmark),
]


@pytest.mark.parametrize("number,title,budget,fn", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_acceptance(number, title, budget, fn):
    ok, line = _record(number, title, budget, fn)
    assert ok, line


if __name__ == "__main__":
    results = [_record(*c)[0] for c in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria passed")
    sys.exit(0 if all(results) else 1)
