"""Adaptive Dormand-Prince 5(4) integration with dense output.

The stepper is a fixed, deterministic implementation of the DOPRI5 pair with
the Hairer-Wanner PI step controller and the pair's 4th-order continuous
extension.  It is used for the physical N-body equations, for every
regularized Hamiltonian field, and (through :func:`integrate_variational`) for
transporting state-transition matrices along periodic orbits.

Vector fields use the signature ``f(t, y) -> dy``.  A field may carry a
``jacobian(t, y)`` method; otherwise central differences are used.
"""

from dataclasses import dataclass, field as dc_field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import NoSignChange, StepLimit, StepUnderflow

__all__ = [
    "IntegratorConfig",
    "Termination",
    "Event",
    "Trajectory",
    "integrate",
    "integrate_variational",
    "refine_event",
    "locate_events",
    "finite_difference_jacobian",
]

_EPS = np.finfo(float).eps

# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
_D = np.array([
    -12715105075 / 11282082432,
    0.0,
    87487479700 / 32700410799,
    -10690763975 / 1880347072,
    701980252875 / 199316789632,
    -1453857185 / 822651844,
    69997945 / 29380423,
])

# PI controller constants (Hairer, Norsett & Wanner, II.4).
_BETA = 0.04
_EXPO1 = 0.2 - 0.75 * _BETA
_SAFE = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 10.0


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = np.inf
    max_steps: int = 200_000
    dense_output: bool = True

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")

    def tightened(self, factor):
        """Copy of this config with both tolerances divided by ``factor``."""
        return IntegratorConfig(self.rel_tol / factor, self.abs_tol / factor,
                                self.max_step, self.max_steps, self.dense_output)


class Termination(str, Enum):
    COMPLETED = "Completed"
    EVENT_HIT = "EventHit"
    STEP_LIMIT = "StepLimit"
    STEP_UNDERFLOW = "StepUnderflow"


@dataclass
class Event:
    """Scalar predicate watched during integration.

    ``direction`` is +1 for increasing crossings only, -1 for decreasing only
    and 0 for both.  A terminal event stops the integration at the refined
    crossing.  Crossings at or before ``armed_after`` are ignored, which
    keeps an event from firing on the section the integration starts on.
    """

    predicate: Callable[[np.ndarray], float]
    direction: int = 0
    terminal: bool = True
    armed_after: float = -np.inf


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray
    termination: Termination
    nfev: int = 0
    # Per-step continuous extension: start time, step, 5 coefficient rows.
    dense_t0: Optional[np.ndarray] = None
    dense_h: Optional[np.ndarray] = None
    dense_coef: Optional[np.ndarray] = None
    events: list = dc_field(default_factory=list)

    @property
    def completed(self):
        return self.termination in (Termination.COMPLETED, Termination.EVENT_HIT)

    @property
    def has_dense(self):
        return self.dense_coef is not None and len(self.dense_t0) > 0

    def raise_for_status(self):
        if self.termination is Termination.STEP_UNDERFLOW:
            raise StepUnderflow(f"step size underflow at t={self.t[-1]!r}", self)
        if self.termination is Termination.STEP_LIMIT:
            raise StepLimit(f"step limit reached at t={self.t[-1]!r}", self)
        return self

    def __call__(self, s):
        """Evaluate the continuous extension at ``s`` (scalar)."""
        if not self.has_dense:
            raise ValueError("trajectory was integrated without dense output")
        i = int(np.searchsorted(self.dense_t0, s, side="right")) - 1
        i = min(max(i, 0), len(self.dense_t0) - 1)
        return _dense_eval(self.dense_coef[i], (s - self.dense_t0[i]) / self.dense_h[i])

    def component(self, sl):
        """Trajectory restricted to a slice of the state vector."""
        return Trajectory(
            self.t, self.y[:, sl], self.termination, self.nfev,
            self.dense_t0, self.dense_h,
            None if self.dense_coef is None else self.dense_coef[:, :, sl],
            [(ts, ys[sl]) for ts, ys in self.events],
        )


def _dense_eval(coef, theta):
    r1, r2, r3, r4, r5 = coef
    return r1 + theta * (r2 + (1 - theta) * (r3 + theta * (r4 + (1 - theta) * r5)))


def _rms(v):
    return float(np.sqrt(np.mean(v * v)))


def _initial_step(f, t0, y0, f0, direction, rtol, atol):
    sc = atol + rtol * np.abs(y0)
    d0, d1 = _rms(y0 / sc), _rms(f0 / sc)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    y1 = y0 + direction * h0 * f0
    f1 = f(t0 + direction * h0, y1)
    d2 = _rms((f1 - f0) / sc) / h0
    if not np.isfinite(d2):
        return h0 * 1e-3
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def integrate(field, initial, span, config=None, events: Sequence[Event] = (), guard=None):
    """Integrate ``dy/dt = field(t, y)`` over ``span = (start, end)``.

    Returns a :class:`Trajectory`.  Failures to reach ``end`` are reported in
    ``Trajectory.termination`` rather than raised; call
    :meth:`Trajectory.raise_for_status` to convert them to exceptions.

    ``guard``, if given, is called on every accepted state and may raise
    (e.g. a chart abort) to stop the integration.
    """
    config = config or IntegratorConfig()
    t0, t_end = float(span[0]), float(span[1])
    y = np.array(initial, dtype=float)
    n = y.size
    rtol, atol = config.rel_tol, config.abs_tol

    ts, ys = [t0], [y.copy()]
    dt0, dh, dcoef = [], [], []
    found = []
    termination = Termination.COMPLETED

    def result():
        dense = config.dense_output
        return Trajectory(
            np.array(ts), np.array(ys).reshape(len(ts), n), termination, nfev,
            np.array(dt0) if dense else None,
            np.array(dh) if dense else None,
            np.array(dcoef).reshape(len(dcoef), 5, n) if dense else None,
            found,
        )

    nfev = 0
    if t_end <= t0:
        return result()

    t = t0
    k = np.empty((7, n))
    k[0] = field(t, y)
    nfev += 1
    h = _initial_step(field, t, y, k[0], 1.0, rtol, atol)
    nfev += 1
    ev_prev = [float(ev.predicate(y)) for ev in events]
    facold = 1e-4
    rejected = False
    nsteps = 0

    while t < t_end:
        if nsteps >= config.max_steps:
            termination = Termination.STEP_LIMIT
            break
        remaining = t_end - t
        h = min(h, config.max_step)
        last = h >= remaining
        if last:
            h = remaining
        elif h < 16 * _EPS * max(abs(t), 1e-300):
            termination = Termination.STEP_UNDERFLOW
            break
        nsteps += 1

        for i in range(1, 7):
            yi = y + h * np.dot(_A[i], k[:i])
            k[i] = field(t + _C[i] * h, yi)
        nfev += 6
        y_new = yi  # stage 7 sits at the 5th-order solution (FSAL)
        if not (np.all(np.isfinite(k)) and np.all(np.isfinite(y_new))):
            h *= 0.2
            rejected = True
            continue

        sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms(h * np.dot(_E, k) / sc)
        fac11 = err ** _EXPO1
        fac = fac11 / facold ** _BETA
        fac = max(1 / _FAC_MAX, min(1 / _FAC_MIN, fac / _SAFE))
        h_new = h / fac

        if err > 1.0:
            h = h / min(1 / _FAC_MIN, fac11 / _SAFE)
            rejected = True
            continue

        t_new = t_end if last else t + h
        if config.dense_output or events:
            coef = np.empty((5, n))
            coef[0] = y
            coef[1] = y_new - y
            coef[2] = h * k[0] - coef[1]
            coef[3] = coef[1] - h * k[6] - coef[2]
            coef[4] = h * np.dot(_D, k)
        if config.dense_output:
            dt0.append(t)
            dh.append(h)
            dcoef.append(coef)

        stop = None
        for j, ev in enumerate(events):
            g1 = float(ev.predicate(y_new))
            g0 = ev_prev[j]
            ev_prev[j] = g1
            if t_new <= ev.armed_after:
                continue
            if _crosses(g0, g1, ev.direction):
                # locate on the interpolant, then land on it with a full
                # Runge-Kutta step so the event state carries 5th-order accuracy
                s_star = _bracket_root(
                    lambda s, c=coef, t_=t, h_=h: ev.predicate(_dense_eval(c, (s - t_) / h_)),
                    t, t_new, g0, g1)
                land = _lander(field, t, y, k[0])
                s_star = _polish_event(lambda s: ev.predicate(land(s)), s_star, t, t_new, g0, g1)
                y_star = land(s_star)
                nfev += land.calls
                if ev.terminal and (stop is None or s_star < stop[0]):
                    stop = (s_star, y_star)
                elif not ev.terminal:
                    found.append((s_star, y_star))

        if stop is not None:
            found.append(stop)
            ts.append(stop[0])
            ys.append(stop[1])
            termination = Termination.EVENT_HIT
            break

        t, y = t_new, y_new
        k[0] = k[6]
        ts.append(t)
        ys.append(y.copy())
        if guard is not None:
            try:
                guard(y)
            except Exception as exc:
                exc.trajectory = result()
                raise

        facold = max(err, 1e-4)
        if rejected:
            h_new = min(h_new, h)
        rejected = False
        h = h_new

    return result()


def _lander(field, t, y, f0):
    """``s -> y(s)`` by one DOPRI5 step from ``(t, y)``."""
    def step(s):
        step.calls += 6
        h = s - t
        if h == 0.0:
            return y.copy()
        k = np.empty((7, y.size))
        k[0] = f0
        for i in range(1, 6):
            k[i] = field(t + _C[i] * h, y + h * np.dot(_A[i], k[:i]))
        return y + h * np.dot(_B[:6], k[:6])
    step.calls = 0
    return step


def _polish_event(fun, guess, a, b, ga, gb):
    """Refine an event time against ``fun``; keeps ``guess`` if no bracket."""
    g = fun(guess)
    if g == 0.0:
        return guess
    # bracket the root around the interpolant estimate
    w = 1e-6 * (b - a)
    lo, hi = max(a, guess - w), min(b, guess + w)
    glo, ghi = fun(lo), fun(hi)
    if np.sign(glo) == np.sign(ghi):
        lo, hi, glo, ghi = a, b, ga, fun(b)
        if np.sign(glo) == np.sign(ghi) or glo == 0.0:
            return guess
    if ghi == 0.0:
        return hi
    return brentq(fun, lo, hi, xtol=1e-300, rtol=4 * _EPS, maxiter=200)


def _crosses(g0, g1, direction):
    if g0 == 0.0:
        return False
    if direction > 0:
        return g0 < 0.0 <= g1
    if direction < 0:
        return g0 > 0.0 >= g1
    return (g0 < 0.0 <= g1) or (g0 > 0.0 >= g1)


def _bracket_root(fun, a, b, fa, fb):
    if fb == 0.0:
        return b
    scale = max(abs(fa), abs(fb))
    root = brentq(fun, a, b, xtol=1e-300, rtol=4 * _EPS, maxiter=200)
    # polish with secant steps when brentq stops on the x tolerance
    for _ in range(5):
        g = fun(root)
        if abs(g) <= 1e-12 * scale:
            break
        dr = max(abs(root), 1.0) * 1e-9
        slope = (fun(root + dr) - fun(root - dr)) / (2 * dr)
        if slope == 0.0:
            break
        root = min(max(root - g / slope, a), b)
    return root


def finite_difference_jacobian(field, t, y):
    """Central-difference Jacobian with step ``1e-7 (1 + |y_i|)``."""
    y = np.asarray(y, dtype=float)
    n = y.size
    jac = np.empty((n, n))
    for i in range(n):
        d = 1e-7 * (1.0 + abs(y[i]))
        yp, ym = y.copy(), y.copy()
        yp[i] += d
        ym[i] -= d
        jac[:, i] = (np.asarray(field(t, yp)) - np.asarray(field(t, ym))) / (2 * d)
    return jac


def integrate_variational(field, initial, span, config=None, events=(), guard=None):
    """Integrate a field together with its state-transition matrix.

    Returns ``(trajectory, phi)`` where ``phi`` is the transition matrix at the
    final point of the trajectory (the event point if a terminal event fired).
    """
    initial = np.array(initial, dtype=float)
    n = initial.size
    jacobian = getattr(field, "jacobian", None)
    if jacobian is None:
        def jacobian(t, y):
            return finite_difference_jacobian(field, t, y)

    def augmented(t, z):
        y = z[:n]
        phi = z[n:].reshape(n, n)
        out = np.empty_like(z)
        out[:n] = field(t, y)
        out[n:] = (jacobian(t, y) @ phi).ravel()
        return out

    wrapped = [Event(lambda z, p=ev.predicate: p(z[:n]), ev.direction, ev.terminal, ev.armed_after)
               for ev in events]
    z0 = np.concatenate([initial, np.eye(n).ravel()])
    guard_z = None if guard is None else (lambda z: guard(z[:n]))
    traj = integrate(augmented, z0, span, config, wrapped, guard_z)
    phi = traj.y[-1, n:].reshape(n, n).copy()
    return traj.component(slice(0, n)), phi


def _hermite(field, t0, y0, t1, y1):
    f0 = np.asarray(field(t0, y0))
    f1 = np.asarray(field(t1, y1))
    h = t1 - t0

    def interp(s):
        th = (s - t0) / h
        h00 = 2 * th**3 - 3 * th**2 + 1
        h10 = th**3 - 2 * th**2 + th
        h01 = -2 * th**3 + 3 * th**2
        h11 = th**3 - th**2
        return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1

    return interp


def _segment_interpolant(field, traj, i):
    t0, t1 = traj.t[i], traj.t[i + 1]
    if traj.has_dense:
        return lambda s: traj(min(max(s, t0), t1))
    return _hermite(field, t0, traj.y[i], t1, traj.y[i + 1])


def locate_events(field, trajectory, predicate, direction=0):
    """All sign changes of ``predicate`` along ``trajectory``, refined on the
    interpolant.  Returns a list of ``(s, state)`` pairs in order."""
    g = np.array([predicate(y) for y in trajectory.y])
    out = []
    for i in range(len(g) - 1):
        if _crosses(g[i], g[i + 1], direction):
            interp = _segment_interpolant(field, trajectory, i)
            s = _bracket_root(lambda s: predicate(interp(s)),
                              trajectory.t[i], trajectory.t[i + 1], g[i], g[i + 1])
            out.append((s, interp(s)))
    return out


def refine_event(field, trajectory, predicate, direction=0):
    """First crossing of ``predicate`` along ``trajectory``.

    A sample where the predicate is exactly zero is returned as is.  Raises
    :class:`NoSignChange` when no adjacent pair of samples brackets a root.
    """
    for i, y in enumerate(trajectory.y):
        if predicate(y) == 0.0:
            return float(trajectory.t[i]), np.array(y)
    hits = locate_events(field, trajectory, predicate, direction)
    if not hits:
        raise NoSignChange("predicate does not change sign along the trajectory")
    return hits[0]
