"""Periodic collision orbits by symmetric shooting and return-map Newton.

All orbits start on a collision section of the first regularized channel
(``u1 = 0``), where the Levi-Civita chart is regular.  Symmetric families
start at a fixed point of a time-reversing symmetry and only need to hit a
second symmetric configuration after half a period; the full period is then
assembled by symmetry and closes up to the deck transformation
``(Q, P) -> (-Q, -P)``.

Orbits are computed at ``E = -1``.  Other negative energies follow from the
homogeneity of the potential: with lengths scaled by ``lam = 1 / |E|`` the
regularized coordinates scale as ``u -> lam**0.5 u``, ``P -> P``, and times as
``t -> lam**1.5 t``, ``s -> lam**-0.5 s``.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import ContinuationStalled, NoConvergence, NonNegativeEnergy
from .integrate import Event, IntegratorConfig, Termination, integrate
from .problems import CollisionEvent, Problem, RegularizedState, make_problem

__all__ = [
    "ORBIT_CONFIG",
    "SHOOT_TOL",
    "CollisionItinerary",
    "ShootingSpec",
    "PeriodicOrbit",
    "shoot",
    "scan_bracket",
    "collision_itinerary",
    "return_mismatch",
    "rescale_orbit",
    "Family",
    "family",
    "schubart_orbit",
    "cols4bp_orbit",
    "pps4bp_collinear_orbit",
    "pps4bp_sbc_orbit",
    "continue_family",
    "FAMILY_NAMES",
]

ORBIT_CONFIG = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-12)
SHOOT_TOL = 1e-10
MIN_CONTINUATION_STEP = 1e-4


@dataclass(frozen=True)
class CollisionItinerary:
    """Collision events met during one period, in order of fictitious time."""

    events: tuple = ()

    def __len__(self):
        return len(self.events)

    def labels(self):
        return tuple((e.kind, e.detail) for e in self.events)

    def channels(self):
        return tuple(e.channel for e in self.events)

    def alternates(self):
        ch = self.channels()
        return len(ch) >= 2 and all(a != b for a, b in zip(ch, ch[1:]))


@dataclass
class ShootingSpec:
    """Boundary-value formulation of a symmetric periodic orbit.

    Parameters
    ----------
    start : callable
        Maps the vector of unknowns to a full regularized state ``(Q, P, t)``
        on the section and on the level ``Gamma = 0``.
    section : callable
        Scalar predicate that vanishes on the starting section.
    targets : sequence of callable
        Scalar conditions ``target(y_end, y0)`` on the state reached at the
        half-period event, given the starting state.
    unknowns : tuple of str
        Names of the free initial components.
    half_period_event : Event
        Terminal event marking the half period.
    invalid_events : sequence of Event
        Terminal events that mark a shot as leaving the orbit type.
    invalid_value : float
        Value reported for every target by an invalid shot; its sign lets a
        one-dimensional scan bracket the root across the boundary of validity.
    deck : ndarray
        Diagonal of the transformation relating ``y(period)`` to ``y(0)``.
    max_s : float
        Bound on the fictitious time of a half-period search.
    """

    start: Callable
    section: Callable
    targets: Sequence[Callable]
    unknowns: tuple
    half_period_event: Event
    invalid_events: Sequence[Event] = ()
    invalid_value: float = -1.0
    deck: Optional[np.ndarray] = None
    max_s: float = 1e3

    def __post_init__(self):
        if len(self.targets) != len(self.unknowns):
            raise ValueError(
                f"{len(self.targets)} targets for {len(self.unknowns)} unknowns")


@dataclass
class PeriodicOrbit:
    spec: object
    initial: RegularizedState
    period_s: float
    period_t: float
    itinerary: CollisionItinerary
    residual: float
    unknowns: np.ndarray = field(default=None, repr=False)
    deck: np.ndarray = field(default=None, repr=False)
    family: str = ""
    parameter: float = float("nan")
    problem: Problem = field(default=None, repr=False, compare=False)

    @property
    def energy(self):
        return self.spec.energy

    @property
    def y0(self):
        return self.initial.y


@dataclass
class _Shot:
    x: np.ndarray
    y0: np.ndarray
    y_half: Optional[np.ndarray]
    s_half: float
    values: np.ndarray
    valid: bool
    scale: float

    @property
    def residual(self):
        return float(np.max(np.abs(self.values)) / self.scale)


def _fire(problem, shooting, x, config):
    y0 = np.asarray(shooting.start(np.asarray(x, dtype=float)), dtype=float)
    scale = 1.0 + float(np.max(np.abs(y0[:-1])))
    events = [shooting.half_period_event, *shooting.invalid_events]
    f = problem.field
    traj = integrate(f, y0, (0.0, shooting.max_s), config, events, guard=f.check)
    hit = traj.termination == Termination.EVENT_HIT
    if hit:
        s_half, y_half = traj.events[-1]
        # attribute the stop to whichever predicate vanishes there
        g = abs(shooting.half_period_event.predicate(y_half))
        if not any(abs(ev.predicate(y_half)) < g for ev in shooting.invalid_events):
            vals = np.array([t(y_half, y0) for t in shooting.targets], dtype=float)
            return _Shot(np.array(x, float), y0, y_half, float(s_half), vals, True, scale)
    vals = np.full(len(shooting.targets), shooting.invalid_value * scale)
    return _Shot(np.array(x, float), y0, None, float("nan"), vals, False, scale)


def scan_bracket(problem, shooting, grid, config=None):
    """Scan a one-dimensional grid of unknowns for a sign change of the target.

    Returns ``(lo, hi)`` around the first sign change, or raises
    :class:`NoConvergence`.
    """
    config = config or ORBIT_CONFIG
    prev = None
    for r in grid:
        shot = _fire(problem, shooting, [r], config)
        v = shot.values[0]
        if prev is not None and np.sign(v) != np.sign(prev[1]) and v != 0:
            return prev[0], r
        prev = (r, v)
    raise NoConvergence("no sign change of the half-period target on the scan grid")


def _fd_jacobian(problem, shooting, x, base, config):
    n = len(x)
    J = np.empty((n, n))
    for j in range(n):
        d = 1e-7 * (1.0 + abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += d
        xm[j] -= d
        sp = _fire(problem, shooting, xp, config)
        sm = _fire(problem, shooting, xm, config)
        if not (sp.valid and sm.valid):
            # one-sided difference when the orbit type changes nearby
            if sp.valid:
                J[:, j] = (sp.values - base.values) / d
            elif sm.valid:
                J[:, j] = (base.values - sm.values) / d
            else:
                raise NoConvergence("finite-difference probes left the orbit type", base.residual)
        else:
            J[:, j] = (sp.values - sm.values) / (2 * d)
    return J


def _newton(problem, shooting, x0, tol, max_iter, config):
    x = np.array(x0, dtype=float)
    shot = _fire(problem, shooting, x, config)
    if not shot.valid:
        raise NoConvergence("initial guess does not reach the half-period section", float("inf"))
    for _ in range(max_iter):
        if shot.residual <= tol:
            return shot
        J = _fd_jacobian(problem, shooting, x, shot, config)
        try:
            dx = -np.linalg.solve(J, shot.values)
        except np.linalg.LinAlgError:
            raise NoConvergence("singular shooting Jacobian", shot.residual)
        lam = 1.0
        for _ in range(12):
            trial = _fire(problem, shooting, x + lam * dx, config)
            if trial.valid and trial.residual < shot.residual:
                break
            lam *= 0.5
        else:
            raise NoConvergence("line search failed", shot.residual)
        x, shot = x + lam * dx, trial
    if shot.residual <= tol:
        return shot
    raise NoConvergence(f"no convergence in {max_iter} iterations", shot.residual)


def _brent(problem, shooting, bracket, config):
    def g(r):
        return _fire(problem, shooting, [r], config).values[0]

    r = brentq(g, bracket[0], bracket[1], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return _fire(problem, shooting, [r], config)


def collision_itinerary(problem, y0, period_s, config=None):
    """Collision events along one period, found as closest approaches of each
    regularized channel that reach the collision set."""
    config = config or ORBIT_CONFIG
    f = problem.field
    d = problem.dim
    nch = len(problem.channel_labels)
    n = problem.ndof

    def approach(i):
        sl = slice(i * d, (i + 1) * d)
        return lambda y: float(y[sl] @ f(0.0, y)[sl])

    events = [Event(approach(i), +1, terminal=False) for i in range(nch)]
    traj = integrate(f, y0, (0.0, period_s), config, events)
    size = max(1.0, float(np.max(np.abs(traj.y[:, :n]))))
    found = []
    for i in range(nch):
        sl = slice(i * d, (i + 1) * d)
        if np.linalg.norm(y0[sl]) <= 1e-6 * size:
            found.append(problem.collision_event(i, 0.0, y0))
    for s, y in traj.events:
        if s >= period_s * (1 - 1e-9):
            continue
        for i in range(nch):
            if np.linalg.norm(y[i * d:(i + 1) * d]) <= 1e-6 * size:
                found.append(problem.collision_event(i, s, y))
                break
    found.sort(key=lambda e: e.s)
    return CollisionItinerary(tuple(found))


def return_mismatch(problem, y0, period_s, deck=None, config=None):
    """Scaled distance between ``deck * y(period_s)`` and ``y0`` in ``(Q, P)``."""
    config = config or ORBIT_CONFIG
    n = problem.ndof
    traj = integrate(problem.field, y0, (0.0, period_s), config)
    traj.raise_for_status()
    D = -np.ones(2 * n) if deck is None else np.asarray(deck)
    yT = traj.y[-1]
    scale = 1.0 + float(np.max(np.abs(y0[:2 * n])))
    return float(np.max(np.abs(D * yT[:2 * n] - y0[:2 * n])) / scale), yT


def shoot(problem, shooting, guess, tol=SHOOT_TOL, max_iter=50, config=None, bracket=None,
          family_name="", parameter=float("nan")):
    """Solve a :class:`ShootingSpec` and assemble the periodic orbit.

    With ``bracket`` (one unknown only) the root is found by Brent's method,
    otherwise by Newton's method with a finite-difference Jacobian of the flow
    and a backtracking line search.  The reported residual is the larger of
    the scaled target norm and the scaled full-period return mismatch.

    Raises
    ------
    NonNegativeEnergy
        If the problem's energy is not negative.
    NoConvergence
        After ``max_iter`` iterations or when the return mismatch exceeds ``tol``.
    ChartAbort
        If a trajectory meets the triple-collision guard.
    """
    if not problem.energy < 0:
        raise NonNegativeEnergy(f"periodic orbits require E < 0, got {problem.energy}")
    config = config or ORBIT_CONFIG
    if bracket is not None:
        shot = _brent(problem, shooting, bracket, config)
        if not shot.valid:
            raise NoConvergence("bracketed root left the orbit type", float("inf"))
    else:
        shot = _newton(problem, shooting, guess, tol, max_iter, config)
    if abs(shooting.section(shot.y0)) > 0.0:
        raise NoConvergence("start left the collision section", float("inf"))
    period_s = 2.0 * shot.s_half
    deck = shooting.deck if shooting.deck is not None else -np.ones(2 * problem.ndof)
    mismatch, yT = return_mismatch(problem, shot.y0, period_s, deck, config)
    residual = max(shot.residual, mismatch)
    if not residual <= tol:
        raise NoConvergence(
            f"targets {shot.residual:.2e}, full-period return {mismatch:.2e} exceed {tol:.0e}",
            residual)
    itinerary = collision_itinerary(problem, shot.y0, period_s, config)
    state = RegularizedState.from_y(shot.y0, 0.0, problem.energy)
    return PeriodicOrbit(
        problem.spec, state, period_s, 2.0 * float(shot.y_half[-1]), itinerary, residual,
        shot.x, np.asarray(deck, dtype=float), family_name, parameter, problem,
    )


# -- homogeneity -------------------------------------------------------------------

def rescale_orbit(orbit, energy):
    """Map an orbit to another negative energy by the scaling symmetry."""
    if not energy < 0:
        raise NonNegativeEnergy(f"periodic orbits require E < 0, got {energy}")
    lam = orbit.energy / energy
    st = orbit.initial
    init = RegularizedState(st.Q * math.sqrt(lam), st.P.copy(), 0.0, st.t * lam ** 1.5, energy)
    problem = _problem_at_energy(orbit.problem, energy)
    events = tuple(CollisionEvent(e.kind, e.detail, e.s * lam ** -0.5, e.t * lam ** 1.5, e.channel)
                   for e in orbit.itinerary.events)
    unknowns = None if orbit.unknowns is None else orbit.unknowns.copy()
    return replace(
        orbit, spec=problem.spec, initial=init, period_s=orbit.period_s * lam ** -0.5,
        period_t=orbit.period_t * lam ** 1.5, itinerary=CollisionItinerary(events),
        unknowns=unknowns, problem=problem,
    )


def _problem_at_energy(problem, energy):
    tag = problem.tag
    if tag == "col3bp":
        return make_problem(tag, masses=problem.masses.masses, energy=energy)
    return make_problem(tag, m=getattr(problem, "m", None), energy=energy,
                        channels=getattr(problem, "channels", None))


# -- concrete families ------------------------------------------------------------

def _collinear_symmetric(problem):
    """Start ``(0, r, P1, 0)``: left channel colliding, right channel at rest.

    Half period: the second channel collides (``Q2`` decreasing through 0)
    with ``P1 = 0``.  A prior collision of the first channel ends the shot as
    invalid.
    """
    def start(x):
        y = np.zeros(2 * problem.ndof + 1)
        y[1] = x[0]
        return problem.project_to_level(y, 0)

    return ShootingSpec(
        start=start,
        section=lambda y: y[0],
        targets=(lambda y, y0: y[2],),
        unknowns=("Q2",),
        half_period_event=Event(lambda y: y[1], -1),
        invalid_events=(Event(lambda y: y[0], -1),),
        invalid_value=-1.0,
    )


def _collinear_return_map(problem):
    """Two-unknown return map on the section ``Q1 = 0`` for asymmetric masses.

    Unknowns ``(Q2, P2)``; the next crossing of ``Q1 = 0`` must reproduce the
    start up to the deck transformation, so the terminal event of this spec
    marks a full period; :func:`_return_orbit` handles the bookkeeping.
    """
    def start(x):
        y = np.zeros(2 * problem.ndof + 1)
        y[1], y[3] = x[0], x[1]
        return problem.project_to_level(y, 0)

    return ShootingSpec(
        start=start,
        section=lambda y: y[0],
        targets=(lambda y, y0: y[1] + y0[1], lambda y, y0: y[3] + y0[3]),
        unknowns=("Q2", "P2"),
        half_period_event=Event(lambda y: y[0], -1),
        invalid_value=1.0,
    )


def _sbc_spec(problem):
    """Non-collinear SBC orbit in the PPS4BP ``sbc`` chart.

    Start: ``u1 = 0``, ``u2 = r (cos pi/8, sin pi/8)``, ``P2 = 0`` and
    ``P1 = rho (cos a, sin a)`` with ``rho`` fixed by ``Gamma = 0``.  Half
    period: ``u2`` crosses the line through the origin perpendicular to its
    initial direction; targets are the perpendicular offset (the second
    channel must collide) and ``u1 . P1``.
    """
    c, s = math.cos(math.pi / 8), math.sin(math.pi / 8)
    e, e_perp = np.array([c, s]), np.array([-s, c])
    rho = math.sqrt(16 * problem.m / problem.chart.a11)

    def start(x):
        r, a = x
        return np.array([0, 0, r * c, r * s, rho * math.cos(a), rho * math.sin(a), 0, 0, 0.0])

    return ShootingSpec(
        start=start,
        section=lambda y: float(np.hypot(y[0], y[1])),
        targets=(lambda y, y0: float(y[2:4] @ e_perp), lambda y, y0: float(y[0:2] @ y[4:6])),
        unknowns=("r", "alpha"),
        half_period_event=Event(lambda y: float(y[2:4] @ e), -1),
        max_s=50.0,
    )


def _embed_collinear(y):
    """Lift a ColS4BP state ``(u1, u2, P1, P2, t)`` to the planar chart."""
    Y = np.zeros(9)
    Y[0], Y[2], Y[4], Y[6], Y[8] = y
    return Y


class Family:
    """A one-parameter family of orbits computed through fixed anchors.

    Anchors lie on a fixed grid in the parameter and are solved in a
    deterministic chain from a seed, so the orbit returned for a parameter
    value does not depend on the order of earlier requests (or on which
    process serves them).  A request between anchors is corrected by Newton's
    method from a secant predictor through the nearest anchor and its
    neighbour toward the seed, halving the step down to
    ``MIN_CONTINUATION_STEP`` when the corrector fails.
    """

    name = ""
    log_grid = True
    anchor_step = 2 ** 0.25
    seed_parameter = 1.0

    def __init__(self, energy=-1.0, config=None):
        self.energy = energy
        self.config = config or ORBIT_CONFIG
        self._anchors = {}

    # subclass hooks
    def problem(self, p):
        raise NotImplementedError

    def shooting(self, problem):
        raise NotImplementedError

    def seed(self):
        """Unknowns of the orbit at ``seed_parameter``."""
        raise NotImplementedError

    def finish(self, orbit):
        return orbit

    def _index(self, p):
        if self.log_grid:
            return math.log(p / self.seed_parameter) / math.log(self.anchor_step)
        return (p - self.seed_parameter) / self.anchor_step

    def _value(self, k):
        if self.log_grid:
            return self.seed_parameter * self.anchor_step ** k
        return round(self.seed_parameter + k * self.anchor_step, 12)

    def correct(self, p, guess):
        """Newton-correct ``guess`` at parameter ``p``; returns the unknowns."""
        problem = self.problem(p)
        return _newton(problem, self.shooting(problem), guess, SHOOT_TOL, 50, self.config).x

    def assemble(self, p, x):
        problem = self.problem(p)
        return shoot(problem, self.shooting(problem), x, config=self.config,
                     family_name=self.name, parameter=p)

    def anchor(self, k):
        """``(parameter, unknowns)`` of anchor ``k``."""
        if k not in self._anchors:
            if k == 0:
                self._anchors[k] = (self._value(0), np.asarray(self.seed(), dtype=float))
            else:
                step = 1 if k > 0 else -1
                prev = self.anchor(k - step)
                prev2 = self._anchors.get(k - 2 * step)
                p = self._value(k)
                self._anchors[k] = (p, self.advance(prev, prev2, p))
        return self._anchors[k]

    @staticmethod
    def predict(prev, prev2, p):
        if prev2 is None:
            return prev[1].copy()
        t = (p - prev[0]) / (prev[0] - prev2[0])
        return prev[1] + t * (prev[1] - prev2[1])

    def advance(self, prev, prev2, p):
        """Unknowns at ``p`` continued from ``prev = (parameter, unknowns)``."""
        try:
            return self.correct(p, self.predict(prev, prev2, p))
        except NoConvergence:
            pass
        step = 0.5 * (p - prev[0])
        cur, before = prev, prev2
        while cur[0] != p:
            target = p if abs(step) >= abs(p - cur[0]) else cur[0] + step
            try:
                x = self.correct(target, self.predict(cur, before, target))
            except NoConvergence as exc:
                step *= 0.5
                if abs(step) < MIN_CONTINUATION_STEP:
                    raise ContinuationStalled(
                        f"{self.name}: continuation stalled near {cur[0]:.6g}", exc.residual)
                continue
            cur, before = (target, x), cur
        return cur[1]

    def unknowns(self, p):
        if not p > 0:
            raise ValueError(f"parameter must be positive, got {p}")
        idx = self._index(p)
        k = int(round(idx))
        base = self.anchor(k)
        if base[0] == p or abs(idx - k) < 1e-12:
            return base[1]
        inward = self._anchors.get(k - int(np.sign(k))) if k != 0 else None
        return self.advance(base, inward, p)

    def __call__(self, p):
        """Orbit at parameter ``p``, rescaled to the family energy."""
        orb = self.finish(self.assemble(p, self.unknowns(p)))
        if self.energy != orb.energy:
            orb = rescale_orbit(orb, self.energy)
        return orb


class SchubartFamily(Family):
    """Col3BP with masses ``(end, m2, end)``; parameter ``m2``."""

    name = "schubart"

    def __init__(self, energy=-1.0, config=None, end=1.0):
        super().__init__(energy, config)
        self.end = float(end)
        self.seed_parameter = self.end

    def problem(self, p):
        return make_problem("col3bp", masses=(self.end, p, self.end), energy=-1.0)

    def shooting(self, problem):
        return _collinear_symmetric(problem)

    def seed(self):
        return _grid_seed(self.problem(self.seed_parameter), self.config)


class ColS4BPFamily(Family):
    name = "cols4bp"

    def problem(self, p):
        return make_problem("cols4bp", m=p, energy=-1.0)

    def shooting(self, problem):
        return _collinear_symmetric(problem)

    def seed(self):
        return _grid_seed(self.problem(1.0), self.config)


class PPS4BPCollinearFamily(Family):
    """The ColS4BP orbit lifted to the planar PPS4BP collinear chart.

    Shares the ColS4BP anchors; only the final orbit is lifted.
    """

    name = "pps4bp-collinear"

    def __init__(self, energy=-1.0, config=None):
        super().__init__(energy, config)
        self.base = family("cols4bp", -1.0, self.config)

    def problem(self, p):
        return self.base.problem(p)

    def shooting(self, problem):
        return self.base.shooting(problem)

    def unknowns(self, p):
        return self.base.unknowns(p)

    def seed(self):
        return self.base.seed()

    def finish(self, orbit):
        return _lift_to_planar(orbit, self.config)


class SBCFamily(Family):
    name = "pps4bp-sbc"
    log_grid = False
    anchor_step = 0.02

    def problem(self, p):
        return make_problem("pps4bp", m=p, energy=-1.0, channels="sbc")

    def shooting(self, problem):
        return _sbc_spec(problem)

    def seed(self):
        # equal masses: the orbit lies in the invariant set alpha = -pi/8,
        # where the collision target vanishes identically
        problem = self.problem(1.0)
        spec = _sbc_spec(problem)
        a = -math.pi / 8
        line = ShootingSpec(
            start=lambda x: spec.start([x[0], a]),
            section=spec.section,
            targets=(spec.targets[1],),
            unknowns=("r",),
            half_period_event=spec.half_period_event,
            max_s=spec.max_s,
            invalid_value=1.0,
        )
        sc = _potential_scale(problem)
        lo, hi = scan_bracket(problem, line, np.geomspace(0.1 * sc, 2 * sc, 25), self.config)
        r = _brent(problem, line, (lo, hi), self.config).x[0]
        return _newton(problem, spec, np.array([r, a]), SHOOT_TOL, 50, self.config).x


def _potential_scale(problem):
    return math.sqrt(sum(t.coeff for t in problem.chart.terms))


def _grid_seed(problem, config):
    spec = _collinear_symmetric(problem)
    sc = _potential_scale(problem)
    lo, hi = scan_bracket(problem, spec, np.geomspace(0.1 * sc, 5 * sc, 25), config)
    shot = _brent(problem, spec, (lo, hi), config)
    if not shot.valid:
        raise NoConvergence("bracketed root left the orbit type", float("inf"))
    return shot.x


def _lift_to_planar(orbit, config):
    m = orbit.problem.m
    planar = make_problem("pps4bp", m=m, energy=orbit.energy, channels="collinear")
    y0 = _embed_collinear(orbit.y0)
    mismatch, _ = return_mismatch(planar, y0, orbit.period_s, None, config)
    itinerary = collision_itinerary(planar, y0, orbit.period_s, config)
    state = RegularizedState.from_y(y0, 0.0, orbit.energy)
    return PeriodicOrbit(
        planar.spec, state, orbit.period_s, orbit.period_t, itinerary,
        max(orbit.residual, mismatch), orbit.unknowns, -np.ones(8),
        "pps4bp-collinear", orbit.parameter, planar,
    )


FAMILY_NAMES = ("schubart", "cols4bp", "pps4bp-collinear", "pps4bp-sbc")
_FAMILY_CLASSES = {
    "schubart": SchubartFamily,
    "cols4bp": ColS4BPFamily,
    "pps4bp-collinear": PPS4BPCollinearFamily,
    "pps4bp-sbc": SBCFamily,
}
_FAMILY_CACHE = {}


def family(name, energy=-1.0, config=None, **kwargs):
    """Shared family instance for ``name`` (cached per energy and configuration)."""
    if name not in _FAMILY_CLASSES:
        raise ValueError(f"unknown orbit family {name!r}; expected one of {FAMILY_NAMES}")
    config = config or ORBIT_CONFIG
    key = (name, float(energy), config, tuple(sorted(kwargs.items())))
    if key not in _FAMILY_CACHE:
        _FAMILY_CACHE[key] = _FAMILY_CLASSES[name](energy=energy, config=config, **kwargs)
    return _FAMILY_CACHE[key]


def _check_energy(E):
    if not E < 0:
        raise NonNegativeEnergy(f"periodic orbits require E < 0 (negative total energy), got {E}")


def schubart_orbit(masses, E=-1.0, config=None):
    """Schubart orbit of the collinear three-body problem.

    Equal end masses use one-unknown symmetric shooting from a grid-searched
    bracket.  Otherwise the symmetric orbit for the mean end mass is deformed
    to the requested masses by Newton continuation of the two-unknown return
    map on ``Q1 = 0``.
    """
    _check_energy(E)
    m1, m2, m3 = (float(x) for x in masses)
    if min(m1, m2, m3) <= 0:
        raise ValueError("masses must be positive")
    config = config or ORBIT_CONFIG
    if m1 == m3:
        problem = make_problem("col3bp", masses=(m1, m2, m3), energy=-1.0)
        x = _grid_seed(problem, config)
        orbit = shoot(problem, _collinear_symmetric(problem), x, config=config,
                      family_name="schubart", parameter=m2)
    else:
        orbit = _asymmetric_schubart(m1, m2, m3, config)
    return orbit if E == -1.0 else rescale_orbit(orbit, E)


def _asymmetric_schubart(m1, m2, m3, config):
    mb = 0.5 * (m1 + m3)
    sym = make_problem("col3bp", masses=(mb, m2, mb), energy=-1.0)
    y0 = _collinear_symmetric(sym).start(_grid_seed(sym, config))
    x = np.array([y0[1], y0[3]])
    lam, h = 0.0, 0.25
    while lam < 1.0:
        nxt = min(1.0, lam + h)
        masses = (mb + nxt * (m1 - mb), m2, mb + nxt * (m3 - mb))
        problem = make_problem("col3bp", masses=masses, energy=-1.0)
        try:
            x = _newton(problem, _collinear_return_map(problem), x, SHOOT_TOL, 50, config).x
        except NoConvergence as exc:
            h /= 2
            if h < MIN_CONTINUATION_STEP:
                raise ContinuationStalled("mass homotopy stalled", exc.residual)
            continue
        lam = nxt
    return _return_orbit(problem, x, config)


def _return_orbit(problem, guess, config):
    spec = _collinear_return_map(problem)
    shot = _newton(problem, spec, guess, SHOOT_TOL, 50, config)
    period_s = shot.s_half
    deck = -np.ones(2 * problem.ndof)
    mismatch, yT = return_mismatch(problem, shot.y0, period_s, deck, config)
    residual = max(shot.residual, mismatch)
    if not residual <= SHOOT_TOL:
        raise NoConvergence(f"return map residual {residual:.2e}", residual)
    itinerary = collision_itinerary(problem, shot.y0, period_s, config)
    return PeriodicOrbit(
        problem.spec, RegularizedState.from_y(shot.y0, 0.0, problem.energy), period_s,
        float(yT[-1]), itinerary, residual, shot.x, deck, "schubart", problem.masses.masses[1],
        problem,
    )


def cols4bp_orbit(m, E=-1.0, config=None):
    _check_energy(E)
    return family("cols4bp", E, config)(m)


def pps4bp_collinear_orbit(m, E=-1.0, config=None):
    _check_energy(E)
    return family("pps4bp-collinear", E, config)(m)


def pps4bp_sbc_orbit(m, E=-1.0, config=None):
    """Non-collinear SBC orbit, continued from equal masses in steps of 0.02."""
    _check_energy(E)
    return family("pps4bp-sbc", E, config)(m)


def continue_family(base, parameter_range, step, config=None):
    """Natural-parameter continuation of ``base`` across ``parameter_range``.

    Members are spaced by ``step`` (the last one lands exactly on each end of
    the range) and each is corrected from a secant predictor through the two
    previous members.  The result is ordered by parameter and includes
    ``base``.

    Raises
    ------
    ContinuationStalled
        When step halving below ``1e-4`` still fails to converge.
    """
    lo, hi = sorted(float(v) for v in parameter_range)
    p0 = base.parameter
    if not lo <= p0 <= hi:
        raise ValueError(f"base parameter {p0} outside range [{lo}, {hi}]")
    if base.family not in _FAMILY_CLASSES:
        raise ValueError(f"orbit does not belong to a continuable family: {base.family!r}")
    extra = {"end": base.problem.masses.masses[0]} if base.family == "schubart" else {}
    fam = _FAMILY_CLASSES[base.family](energy=-1.0, config=config or ORBIT_CONFIG, **extra)
    start = (p0, np.asarray(base.unknowns, dtype=float))

    def march(end):
        out, prev, prev2 = [], start, None
        n = int(math.ceil(abs(end - p0) / step - 1e-9))
        for k in range(1, n + 1):
            p = end if k == n else p0 + k * step * np.sign(end - p0)
            nxt = (p, fam.advance(prev, prev2, p))
            out.append(nxt)
            prev, prev2 = nxt, prev
        return out

    out = []
    for item in march(lo)[::-1] + [None] + march(hi):
        if item is None:
            out.append(base)
            continue
        p, x = item
        orb = fam.finish(fam.assemble(p, x))
        out.append(orb if base.energy == -1.0 else rescale_orbit(orb, base.energy))
    return out
