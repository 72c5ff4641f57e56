"""Levi-Civita / Sundman regularization.

A regularized problem is described by a Hamiltonian ``Gamma(Q, P)`` on the
Levi-Civita phase space.  For a physical Hamiltonian ``H`` and a time scale
``g`` that vanishes on the collision set, ``Gamma = g (H - E)``; on the level
``Gamma = 0`` its flow in the fictitious time ``s`` reparametrizes the
physical flow at energy ``E`` with ``dt/ds = g``.

State vectors of regularized fields are laid out as ``(Q, P, t)``.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ChartDomain, NonNegativeEnergy, NotOnEnergyLevel

__all__ = [
    "levi_civita",
    "levi_civita_inverse",
    "regularized_momentum",
    "physical_momentum",
    "RegularizedField",
    "poincare_transform",
    "col2bp_field",
    "Col2BPClosedForm",
    "col2bp_solve",
    "BracketResiduals",
    "verify_bracket_identities",
    "bracket_series",
    "ENERGY_LEVEL_TOL",
]

ENERGY_LEVEL_TOL = 1e-9


# -- Levi-Civita building blocks ------------------------------------------------
# For u in R^d (d = 1, 2) the square map is z = L(u) u, with L(u) the matrix of
# multiplication by u (complex multiplication when d = 2).  Its Jacobian is
# 2 L(u), and L(u)^T v = M(v) u.

def lc_matrix(u):
    if len(u) == 1:
        return np.array([[u[0]]])
    return np.array([[u[0], -u[1]], [u[1], u[0]]])


def lc_reflect(v):
    if len(v) == 1:
        return np.array([[v[0]]])
    return np.array([[v[0], v[1]], [v[1], -v[0]]])


def lc_square(u):
    if len(u) == 1:
        return np.array([u[0] * u[0]])
    return np.array([u[0] * u[0] - u[1] * u[1], 2.0 * u[0] * u[1]])


def levi_civita(Q):
    """Physical separation from a regularized coordinate.

    Collinear (scalar or length 1): ``x = Q**2``.  Planar (length 2): the
    complex square ``(Q1**2 - Q2**2, 2 Q1 Q2)``.
    """
    if np.ndim(Q) == 0:
        return float(Q) ** 2
    return lc_square(np.asarray(Q, dtype=float))


def levi_civita_inverse(x):
    """Preimage of a separation under :func:`levi_civita`.

    Collinear: ``+sqrt(x)`` (requires ``x >= 0``).  Planar: the principal
    complex square root, so the first component is nonnegative.  The other
    preimage is the negative of the returned one.
    """
    if np.ndim(x) == 0 or len(x) == 1:
        xv = float(np.ravel(x)[0])
        if xv < 0:
            raise ChartDomain(f"collinear separation must be nonnegative, got {xv}")
        r = math.sqrt(xv)
        return r if np.ndim(x) == 0 else np.array([r])
    w = cmath.sqrt(complex(x[0], x[1]))
    return np.array([w.real, w.imag])


def regularized_momentum(Q, p):
    """``P = 2 L(Q)^T p``: momentum conjugate to ``Q`` given the physical one."""
    Q = np.atleast_1d(np.asarray(Q, dtype=float))
    return 2.0 * lc_matrix(Q).T @ np.atleast_1d(p)


def physical_momentum(Q, P):
    """Inverse of :func:`regularized_momentum` (undefined at ``Q = 0``)."""
    Q = np.atleast_1d(np.asarray(Q, dtype=float))
    n2 = float(Q @ Q)
    if n2 == 0.0:
        raise ChartDomain("physical momentum is unbounded at the collision Q = 0")
    return lc_matrix(Q) @ np.atleast_1d(P) / (2.0 * n2)


# -- Regularized Hamiltonian fields ---------------------------------------------

class RegularizedField:
    """Hamiltonian vector field of ``Gamma`` on ``(Q, P)``, plus ``dt/ds``.

    Parameters
    ----------
    ndof : int
        Number of configuration coordinates.
    gamma, gradient, hessian : callable
        ``Gamma`` and its first and second derivatives as functions of the
        phase point ``z = (Q, P)``.  ``hessian`` may be None, in which case the
        Jacobian falls back to central differences of the field.
    scale, scale_gradient : callable
        The time scale ``g(Q)`` and its gradient.
    guard : callable, optional
        Called on accepted states; raises when the chart becomes invalid.
    """

    def __init__(self, ndof, gamma, gradient, hessian=None, scale=None,
                 scale_gradient=None, guard=None, energy=None, chart=None):
        self.ndof = ndof
        self.dim = 2 * ndof + 1
        self.gamma = gamma
        self.gradient = gradient
        self.hessian = hessian
        self.scale = scale if scale is not None else (lambda Q: 1.0)
        self.scale_gradient = scale_gradient
        self.guard = guard
        self.energy = energy
        self.chart = chart
        self._symp = np.block([
            [np.zeros((ndof, ndof)), np.eye(ndof)],
            [-np.eye(ndof), np.zeros((ndof, ndof))],
        ])

    def __call__(self, s, y):
        n = self.ndof
        z = y[: 2 * n]
        g = self.gradient(z)
        out = np.empty(self.dim)
        out[:n] = g[n:]
        out[n: 2 * n] = -g[:n]
        out[-1] = self.scale(z[:n])
        return out

    def jacobian(self, s, y):
        n = self.ndof
        z = y[: 2 * n]
        jac = np.zeros((self.dim, self.dim))
        if self.hessian is None:
            from .integrate import finite_difference_jacobian
            return finite_difference_jacobian(self, s, y)
        jac[: 2 * n, : 2 * n] = self._symp @ self.hessian(z)
        if self.scale_gradient is not None:
            jac[-1, :n] = self.scale_gradient(z[:n])
        else:
            jac[-1, :n] = _fd_gradient(self.scale, z[:n])
        return jac

    def residual(self, y):
        return float(self.gamma(np.asarray(y)[: 2 * self.ndof]))

    def check_level(self, y, tol=ENERGY_LEVEL_TOL):
        r = self.residual(y)
        if not abs(r) <= tol:
            raise NotOnEnergyLevel(f"|Gamma| = {abs(r):.3e} exceeds {tol:.1e}")
        return r

    def check(self, y):
        if self.guard is not None:
            self.guard(np.asarray(y))


def _fd_gradient(fun, z, rel=1e-6):
    z = np.asarray(z, dtype=float)
    g = np.empty(z.size)
    for i in range(z.size):
        d = rel * (1.0 + abs(z[i]))
        zp, zm = z.copy(), z.copy()
        zp[i] += d
        zm[i] -= d
        g[i] = (fun(zp) - fun(zm)) / (2 * d)
    return g


def poincare_transform(hamiltonian, scale, energy, ndof, to_physical=None):
    """Regularized field of ``Gamma = g (H - E)`` built from physical data.

    ``hamiltonian(q, p)`` and ``scale(q)`` act on physical coordinates;
    ``to_physical(Q, P) -> (q, p)`` is the coordinate change (identity when
    omitted).  Derivatives are taken by central differences, so the result is
    only usable away from the collision set; problem modules supply analytic
    fields that stay smooth through collisions.
    """
    if to_physical is None:
        def to_physical(Q, P):
            return Q, P

    def gamma(z):
        q, p = to_physical(z[:ndof], z[ndof:])
        return scale(q) * (hamiltonian(q, p) - energy)

    def scale_q(Q):
        q, _ = to_physical(Q, np.zeros(ndof))
        return scale(q)

    return RegularizedField(ndof, gamma, lambda z: _fd_gradient(gamma, z),
                            scale=scale_q, energy=energy)


def col2bp_field(m1, m2, energy, dim=1):
    """Analytic regularized two-body field in Levi-Civita variables.

    ``Gamma = |P|^2 / (8 mu) - m1 m2 - E |Q|^2`` with ``mu = m1 m2 / (m1 + m2)``
    and ``dt/ds = |Q|^2``.  ``dim = 1`` is the collinear problem; ``dim = 2``
    the planar Kepler problem.
    """
    mu = m1 * m2 / (m1 + m2)
    k = m1 * m2
    d = dim

    def gamma(z):
        Q, P = z[:d], z[d:]
        return P @ P / (8 * mu) - k - energy * (Q @ Q)

    def gradient(z):
        return np.concatenate([-2 * energy * z[:d], z[d:] / (4 * mu)])

    hess = np.diag(np.r_[np.full(d, -2 * energy), np.full(d, 1 / (4 * mu))])

    return RegularizedField(
        d, gamma, gradient, lambda z: hess,
        scale=lambda Q: float(Q @ Q),
        scale_gradient=lambda Q: 2 * Q,
        energy=energy,
    )


@dataclass(frozen=True)
class Col2BPClosedForm:
    """Closed-form regularized collinear two-body motion.

    ``w(s) = w_max sin(omega s)`` with a collision at ``s = 0``.
    """

    m1: float
    m2: float
    E: float
    omega: float
    w_max: float

    @property
    def reduced_mass(self):
        return self.m1 * self.m2 / (self.m1 + self.m2)

    @property
    def period_s(self):
        return 2 * math.pi / self.omega

    @property
    def collision_period_t(self):
        """Physical time between consecutive collisions, ``t(pi / omega)``."""
        return self.t(math.pi / self.omega)

    @property
    def collision_speed(self):
        return self.w_max * self.omega

    def w(self, s):
        return self.w_max * np.sin(self.omega * s)

    def wdot(self, s):
        return self.w_max * self.omega * np.cos(self.omega * s)

    def wddot(self, s):
        return -self.omega ** 2 * self.w(s)

    def t(self, s):
        return self.w_max ** 2 * (s / 2 - np.sin(2 * self.omega * s) / (4 * self.omega))

    def s_of_t(self, t):
        """Invert the monotone map ``s -> t(s)``."""
        lo, hi = 0.0, self.period_s
        while self.t(hi) < t:
            hi *= 2
        if t <= 0:
            return 0.0
        return brentq(lambda s: self.t(s) - t, lo, hi, xtol=1e-15, rtol=1e-15)

    def x_of_t(self, t):
        return self.w(self.s_of_t(t)) ** 2

    def state(self, s):
        """Regularized state ``(w, P, t)`` on the collinear field."""
        return np.array([self.w(s), 4 * self.reduced_mass * self.wdot(s), self.t(s)])


def col2bp_solve(m1, m2, E):
    if not (m1 > 0 and m2 > 0):
        raise ValueError("masses must be positive")
    if not E < 0:
        raise NonNegativeEnergy(f"bounded collision orbits need E < 0, got {E}")
    omega = math.sqrt(-(m1 + m2) * E / (2 * m1 * m2))
    w_max = math.sqrt(-m1 * m2 / E)
    return Col2BPClosedForm(m1, m2, E, omega, w_max)


@dataclass(frozen=True)
class BracketResiduals:
    """Maximum residuals of the regularized equation of motion (``eq_motion``:
    ``2 w w'' - 2 w'^2 + (m1 + m2)``) and of the regularized energy relation
    (``eq_energy``: ``E w^2 - 2 m1 m2 w'^2 / (m1 + m2) + m1 m2``)."""

    eq_motion: float
    eq_energy: float


def verify_bracket_identities(w, wdot, wddot, m1, m2, E):
    w, wdot, wddot = (np.asarray(a, dtype=float) for a in (w, wdot, wddot))
    M = m1 + m2
    r_motion = 2 * w * wddot - 2 * wdot ** 2 + M
    r_energy = E * w ** 2 - 2 * m1 * m2 / M * wdot ** 2 + m1 * m2
    return BracketResiduals(float(np.max(np.abs(r_motion))), float(np.max(np.abs(r_energy))))


def bracket_series(field, states, m1, m2):
    """``(w, w', w'')`` along integrated collinear Col2BP states ``(w, P, t)``."""
    states = np.atleast_2d(states)
    mu = m1 * m2 / (m1 + m2)
    w = states[:, 0]
    wdot = states[:, 1] / (4 * mu)
    wddot = np.array([field(0.0, y)[1] for y in states]) / (4 * mu)
    return w, wdot, wddot
