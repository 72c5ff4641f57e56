"""Newtonian N-body dynamics in physical coordinates (G = 1).

Positions and velocities are ``(N, dim)`` arrays; ``dim`` is 1 for collinear
problems, 2 for planar ones and 3 for the general problem.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import CollisionConfiguration, InsufficientData
from .integrate import IntegratorConfig, integrate

__all__ = [
    "MassVector",
    "PhaseState",
    "IntegralSet",
    "accelerations",
    "integrals",
    "extreme_distances",
    "SingularityKind",
    "SingularityVerdict",
    "singularity_diagnostics",
    "NBodyField",
    "simulate",
]


@dataclass(frozen=True)
class MassVector:
    masses: tuple

    def __init__(self, masses):
        m = tuple(float(x) for x in masses)
        if len(m) < 2:
            raise ValueError("need at least two masses")
        if not all(x > 0 for x in m):
            raise ValueError(f"masses must be strictly positive, got {m}")
        object.__setattr__(self, "masses", m)

    def __len__(self):
        return len(self.masses)

    def __iter__(self):
        return iter(self.masses)

    @property
    def array(self):
        return np.array(self.masses)

    @property
    def total(self):
        return float(sum(self.masses))


def _as_masses(masses):
    return masses if isinstance(masses, MassVector) else MassVector(masses)


@dataclass
class PhaseState:
    positions: np.ndarray
    velocities: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        q = np.asarray(self.positions, dtype=float)
        v = np.asarray(self.velocities, dtype=float)
        if q.ndim == 1:
            q = q[:, None]
        if v.ndim == 1:
            v = v[:, None]
        if q.shape != v.shape:
            raise ValueError(f"positions {q.shape} and velocities {v.shape} differ")
        if q.shape[1] not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")
        self.positions, self.velocities = q, v
        self.time = float(self.time)

    @property
    def n(self):
        return self.positions.shape[0]

    @property
    def dim(self):
        return self.positions.shape[1]

    def flat(self):
        return np.concatenate([self.positions.ravel(), self.velocities.ravel()])

    @classmethod
    def from_flat(cls, y, n, dim, time=0.0):
        y = np.asarray(y, dtype=float)
        k = n * dim
        return cls(y[:k].reshape(n, dim), y[k:2 * k].reshape(n, dim), time)


@dataclass(frozen=True)
class IntegralSet:
    center_of_mass: np.ndarray
    linear_momentum: np.ndarray
    angular_momentum: np.ndarray
    self_potential: float
    kinetic: float
    total_energy: float
    half_moment_of_inertia: float


def _separations(q):
    diff = q[None, :, :] - q[:, None, :]  # diff[j, k] = q_k - q_j
    r = np.sqrt(np.sum(diff * diff, axis=-1))
    return diff, r


def accelerations(state, masses):
    """``a_j = sum_{k != j} m_k (q_k - q_j) / r_jk^3``."""
    m = _as_masses(masses).array
    q = state.positions
    diff, r = _separations(q)
    off = ~np.eye(len(m), dtype=bool)
    if np.any(r[off] == 0.0):
        raise CollisionConfiguration("coincident bodies: force undefined")
    inv3 = np.zeros_like(r)
    inv3[off] = r[off] ** -3
    return np.einsum("jk,k,jkd->jd", inv3, m, diff)


def _angular_momentum(q, v, m):
    dim = q.shape[1]
    if dim == 1:
        return np.zeros(3)
    if dim == 2:
        return np.array(float(np.sum(m * (q[:, 0] * v[:, 1] - q[:, 1] * v[:, 0]))))
    return np.sum(m[:, None] * np.cross(q, v), axis=0)


def integrals(state, masses):
    m = _as_masses(masses).array
    q, v = state.positions, state.velocities
    _, r = _separations(q)
    iu = np.triu_indices(len(m), 1)
    if np.any(r[iu] == 0.0):
        raise CollisionConfiguration("coincident bodies: potential undefined")
    mtot = m.sum()
    U = float(np.sum(np.outer(m, m)[iu] / r[iu]))
    K = 0.5 * float(np.sum(m[:, None] * v * v))
    return IntegralSet(
        center_of_mass=(m @ q) / mtot,
        linear_momentum=(m @ v) / mtot,
        angular_momentum=_angular_momentum(q, v, m),
        self_potential=U,
        kinetic=K,
        total_energy=K - U,
        half_moment_of_inertia=0.5 * float(np.sum(m[:, None] * q * q)),
    )


def extreme_distances(state):
    q = state.positions if isinstance(state, PhaseState) else np.atleast_2d(state)
    if q.shape[0] < 2:
        raise ValueError("need at least two bodies")
    _, r = _separations(q)
    vals = r[np.triu_indices(q.shape[0], 1)]
    return float(vals.min()), float(vals.max())


class SingularityKind(str, Enum):
    NONE = "NoSingularityIndicated"
    COLLISION = "CollisionApproach"
    TOTAL_COLLAPSE = "TotalCollapseApproach"


@dataclass
class SingularityVerdict:
    kind: SingularityKind
    r_min: np.ndarray = field(repr=False)
    r_max: np.ndarray = field(repr=False)
    inertia: np.ndarray = field(repr=False)
    inertia_bounded: bool = True


def _trending_down(x, window, threshold):
    tail = x[-window:]
    return bool(np.all(np.diff(tail) < 0) and tail[-1] < threshold)


def singularity_diagnostics(trajectory, masses=None, window=50, threshold=1e-3, min_samples=None):
    """Classify the end of a trajectory by Painleve/von Zeipel style monitors.

    ``trajectory`` is a sequence of :class:`PhaseState` or of
    ``(PhaseState, IntegralSet)`` pairs.  The verdict is a heuristic on finite
    data: a total collapse requires ``r_max`` strictly decreasing over the last
    ``window`` samples and below ``threshold`` (N >= 3); a collision requires
    the same of ``r_min`` with the moment of inertia staying bounded.
    """
    min_samples = window if min_samples is None else min_samples
    states = [s[0] if isinstance(s, tuple) else s for s in trajectory]
    if len(states) < max(min_samples, 2):
        raise InsufficientData(f"need at least {min_samples} samples, got {len(states)}")
    rr = np.array([extreme_distances(s) for s in states])
    r_min, r_max = rr[:, 0], rr[:, 1]
    if isinstance(trajectory[0], tuple):
        inertia = np.array([s[1].half_moment_of_inertia for s in trajectory])
    else:
        m = np.ones(states[0].n) if masses is None else _as_masses(masses).array
        inertia = np.array([0.5 * np.sum(m[:, None] * s.positions ** 2) for s in states])
    # bounded: the tail never exceeds ten times the largest value seen early on
    head = inertia[: max(len(inertia) // 2, 1)]
    bounded = bool(np.max(inertia[-window:]) <= 10 * max(np.max(head), 1e-300))
    n = states[0].n
    if n >= 3 and _trending_down(r_max, window, threshold):
        kind = SingularityKind.TOTAL_COLLAPSE
    elif _trending_down(r_min, window, threshold) and bounded:
        kind = SingularityKind.COLLISION
    else:
        kind = SingularityKind.NONE
    return SingularityVerdict(kind, r_min, r_max, inertia, bounded)


class NBodyField:
    """Physical-coordinate vector field on the flat state ``(q, v)``."""

    def __init__(self, masses, dim=1):
        self.masses = _as_masses(masses)
        self.n = len(self.masses)
        self.dim = dim
        self._m = self.masses.array

    def __call__(self, t, y):
        k = self.n * self.dim
        q = y[:k].reshape(self.n, self.dim)
        diff, r = _separations(q)
        off = ~np.eye(self.n, dtype=bool)
        if np.any(r[off] == 0.0):
            return np.full_like(y, np.nan)
        inv3 = np.zeros_like(r)
        inv3[off] = r[off] ** -3
        a = np.einsum("jk,k,jkd->jd", inv3, self._m, diff)
        return np.concatenate([y[k:], a.ravel()])

    def state(self, y, t=0.0):
        return PhaseState.from_flat(y, self.n, self.dim, t)


def simulate(state, masses, span, config=None, events=()):
    """Integrate the physical equations from ``state``; returns ``(field, trajectory)``."""
    f = NBodyField(masses, dim=state.dim)
    traj = integrate(f, state.flat(), (state.time, state.time + span), config or IntegratorConfig(), events)
    return f, traj
