"""Regularized charts for the symmetric collinear and planar subproblems.

Each problem is reduced (center of mass, symmetry) to two relative
coordinates ``z1, z2`` in R^d with Hamiltonian

    H = 1/2 p^T (A (x) I_d) p - sum_k c_k / |a_k z1 + b_k z2|,

where ``z1`` and ``z2`` are the separations of the two collision channels
being regularized.  Both channels get a Levi-Civita square map
``z_i = u_i^2`` (complex square when d = 2) with conjugate momenta
``P_i = 2 L(u_i)^T p_i``, and the time scale is ``g = |z1| |z2|``.
The resulting ``Gamma = g (H - E)`` is smooth wherever at most one channel
collides, and is polynomial in the momenta.

Problems
--------
Col2BP   two bodies on a line, single channel
Col3BP   z1 = q2 - q1, z2 = q3 - q2
ColS4BP  bodies (q1, q2, -q2, -q1), masses (1, m, m, 1); z1 = q2 (inner
         binary), z2 = q1 - q2 (simultaneous binary of the outer pairs)
PPS4BP   bodies (q1, q2, -q1, -q2), masses (1, m, 1, m) in the plane.
         ``channels="collinear"``: z1 = q2, z2 = q1 - q2 (the ColS4BP chart
         lifted to the plane); ``channels="sbc"``: z1 = q1 - q2, z2 = q1 + q2
         (the two simultaneous-binary-collision channels).
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ChartDomain, TripleCollisionChart
from .nbody import MassVector, PhaseState
from .regularize import (
    RegularizedField,
    col2bp_field,
    lc_matrix,
    lc_reflect,
    lc_square,
    levi_civita_inverse,
)

__all__ = [
    "PotentialTerm",
    "TwoChannelChart",
    "ProblemSpec",
    "RegularizedState",
    "CollisionEvent",
    "Problem",
    "make_problem",
    "col2bp_problem",
    "col3bp_field",
    "cols4bp_field",
    "pps4bp_field",
    "to_physical",
    "from_physical",
    "TRIPLE_GUARD",
]

TRIPLE_GUARD = 1e-6
PROBLEM_TAGS = ("col2bp", "col3bp", "cols4bp", "pps4bp")


@dataclass(frozen=True)
class PotentialTerm:
    """``coeff / |a z1 + b z2|``."""

    coeff: float
    a: float
    b: float


class TwoChannelChart:
    """Analytic ``Gamma``, gradient and Hessian on ``z = (u1, u2, P1, P2)``."""

    def __init__(self, kinetic, terms, energy, dim):
        A = np.asarray(kinetic, dtype=float)
        self.a11, self.a12, self.a22 = A[0, 0], A[0, 1], A[1, 1]
        self.terms = tuple(terms)
        self.energy = float(energy)
        self.d = dim
        self.ndof = 2 * dim
        self._I = np.eye(dim)

    def split(self, z):
        d = self.d
        return z[:d], z[d:2 * d], z[2 * d:3 * d], z[3 * d:4 * d]

    def scale(self, Q):
        d = self.d
        u1, u2 = Q[:d], Q[d:2 * d]
        return float((u1 @ u1) * (u2 @ u2))

    def scale_gradient(self, Q):
        d = self.d
        u1, u2 = Q[:d], Q[d:2 * d]
        return np.concatenate([2 * (u2 @ u2) * u1, 2 * (u1 @ u1) * u2])

    def _term_parts(self, term, u1, u2, n1, n2, z1, z2):
        """``S = |a z1 + b z2|^2`` with its gradient and Hessian blocks."""
        a, b = term.a, term.b
        Mz1, Mz2 = lc_reflect(z1), lc_reflect(z2)
        w = a * z1 + b * z2
        S = float(w @ w)
        g1 = 4 * a * a * n1 * u1 + 4 * a * b * (Mz2 @ u1)
        g2 = 4 * b * b * n2 * u2 + 4 * a * b * (Mz1 @ u2)
        h11 = 4 * a * a * (n1 * self._I + 2 * np.outer(u1, u1)) + 4 * a * b * Mz2
        h22 = 4 * b * b * (n2 * self._I + 2 * np.outer(u2, u2)) + 4 * a * b * Mz1
        h12 = 8 * a * b * lc_matrix(u1).T @ lc_matrix(u2)
        return S, g1, g2, h11, h22, h12

    def gamma(self, z):
        u1, u2, P1, P2 = self.split(z)
        n1, n2 = u1 @ u1, u2 @ u2
        N = n1 * n2
        X = lc_matrix(u1) @ P1
        Y = lc_matrix(u2) @ P2
        val = (self.a11 * n2 * (P1 @ P1) + self.a22 * n1 * (P2 @ P2)) / 8
        val += self.a12 * (X @ Y) / 4
        val -= self.energy * N
        z1, z2 = lc_square(u1), lc_square(u2)
        for t in self.terms:
            if t.b == 0:
                val -= t.coeff * n2 / abs(t.a)
            elif t.a == 0:
                val -= t.coeff * n1 / abs(t.b)
            else:
                w = t.a * z1 + t.b * z2
                val -= t.coeff * N / np.sqrt(w @ w)
        return float(val)

    def gradient(self, z):
        u1, u2, P1, P2 = self.split(z)
        d = self.d
        n1, n2 = u1 @ u1, u2 @ u2
        N = n1 * n2
        L1, L2 = lc_matrix(u1), lc_matrix(u2)
        LP1, LP2 = lc_matrix(P1), lc_matrix(P2)
        X, Y = L1 @ P1, L2 @ P2
        k = self.a12 / 4
        E = self.energy
        gu1 = self.a22 / 4 * (P2 @ P2) * u1 + k * LP1.T @ Y - 2 * E * n2 * u1
        gu2 = self.a11 / 4 * (P1 @ P1) * u2 + k * LP2.T @ X - 2 * E * n1 * u2
        gP1 = self.a11 / 4 * n2 * P1 + k * L1.T @ Y
        gP2 = self.a22 / 4 * n1 * P2 + k * L2.T @ X
        z1, z2 = lc_square(u1), lc_square(u2)
        for t in self.terms:
            c = t.coeff
            if t.b == 0:
                gu2 = gu2 - 2 * c / abs(t.a) * u2
            elif t.a == 0:
                gu1 = gu1 - 2 * c / abs(t.b) * u1
            else:
                w = t.a * z1 + t.b * z2
                S = w @ w
                a, b = t.a, t.b
                dS1 = 4 * a * a * n1 * u1 + 4 * a * b * (lc_reflect(z2) @ u1)
                dS2 = 4 * b * b * n2 * u2 + 4 * a * b * (lc_reflect(z1) @ u2)
                rs = S ** -0.5
                gu1 = gu1 - c * (2 * n2 * u1 * rs - 0.5 * N * rs ** 3 * dS1)
                gu2 = gu2 - c * (2 * n1 * u2 * rs - 0.5 * N * rs ** 3 * dS2)
        out = np.empty(4 * d)
        out[:d], out[d:2 * d], out[2 * d:3 * d], out[3 * d:] = gu1, gu2, gP1, gP2
        return out

    def hessian(self, z):
        u1, u2, P1, P2 = self.split(z)
        d, I = self.d, self._I
        n1, n2 = u1 @ u1, u2 @ u2
        N = n1 * n2
        L1, L2 = lc_matrix(u1), lc_matrix(u2)
        LP1, LP2 = lc_matrix(P1), lc_matrix(P2)
        X, Y = L1 @ P1, L2 @ P2
        k = self.a12 / 4
        E = self.energy
        H = np.zeros((4 * d, 4 * d))
        iu1, iu2 = slice(0, d), slice(d, 2 * d)
        iP1, iP2 = slice(2 * d, 3 * d), slice(3 * d, 4 * d)

        def add(i, j, block):
            H[i, j] += block
            if i != j:
                H[j, i] += block.T

        # kinetic part
        add(iu2, iu2, self.a11 / 4 * (P1 @ P1) * I)
        add(iP1, iP1, self.a11 / 4 * n2 * I)
        add(iu2, iP1, self.a11 / 2 * np.outer(u2, P1))
        add(iu1, iu1, self.a22 / 4 * (P2 @ P2) * I)
        add(iP2, iP2, self.a22 / 4 * n1 * I)
        add(iu1, iP2, self.a22 / 2 * np.outer(u1, P2))
        add(iu1, iP1, k * lc_reflect(Y))
        add(iu2, iP2, k * lc_reflect(X))
        add(iu1, iu2, k * LP1.T @ LP2)
        add(iu1, iP2, k * LP1.T @ L2)
        add(iP1, iu2, k * L1.T @ LP2)
        add(iP1, iP2, k * L1.T @ L2)
        # energy part, -E N
        add(iu1, iu1, -2 * E * n2 * I)
        add(iu2, iu2, -2 * E * n1 * I)
        add(iu1, iu2, -4 * E * np.outer(u1, u2))
        # potential part
        z1, z2 = lc_square(u1), lc_square(u2)
        dN1, dN2 = 2 * n2 * u1, 2 * n1 * u2
        for t in self.terms:
            c = t.coeff
            if t.b == 0:
                add(iu2, iu2, -2 * c / abs(t.a) * I)
                continue
            if t.a == 0:
                add(iu1, iu1, -2 * c / abs(t.b) * I)
                continue
            S, g1, g2, h11, h22, h12 = self._term_parts(t, u1, u2, n1, n2, z1, z2)
            rs = S ** -0.5
            r3, r5 = rs ** 3, rs ** 5
            # Hessian of N S^{-1/2}
            p11 = (2 * n2 * I * rs - 0.5 * r3 * (np.outer(dN1, g1) + np.outer(g1, dN1))
                   + 0.75 * N * r5 * np.outer(g1, g1) - 0.5 * N * r3 * h11)
            p22 = (2 * n1 * I * rs - 0.5 * r3 * (np.outer(dN2, g2) + np.outer(g2, dN2))
                   + 0.75 * N * r5 * np.outer(g2, g2) - 0.5 * N * r3 * h22)
            p12 = (4 * np.outer(u1, u2) * rs - 0.5 * r3 * (np.outer(dN1, g2) + np.outer(g1, dN2))
                   + 0.75 * N * r5 * np.outer(g1, g2) - 0.5 * N * r3 * h12)
            add(iu1, iu1, -c * p11)
            add(iu2, iu2, -c * p22)
            add(iu1, iu2, -c * p12)
        return H

    def guard(self, y):
        d = self.d
        u1, u2 = y[:d], y[d:2 * d]
        r1, r2 = np.sqrt(u1 @ u1), np.sqrt(u2 @ u2)
        if r1 < TRIPLE_GUARD and r2 < TRIPLE_GUARD:
            raise TripleCollisionChart(
                f"both regularized channels below {TRIPLE_GUARD:g} (|u1|={r1:.2e}, |u2|={r2:.2e})")
        z1, z2 = lc_square(u1), lc_square(u2)
        for t in self.terms:
            if t.a != 0 and t.b != 0:
                w = t.a * z1 + t.b * z2
                if np.sqrt(w @ w) < TRIPLE_GUARD:
                    raise TripleCollisionChart(
                        f"non-regularized coincidence |{t.a:g} z1 + {t.b:g} z2| < {TRIPLE_GUARD:g}")

    def field(self):
        return RegularizedField(
            self.ndof, self.gamma, self.gradient, self.hessian,
            scale=self.scale, scale_gradient=self.scale_gradient,
            guard=self.guard, energy=self.energy, chart=self,
        )


@dataclass(frozen=True)
class ProblemSpec:
    tag: str
    masses: MassVector
    energy: float
    regularized_dimension: int
    channels: Optional[str] = None


@dataclass
class RegularizedState:
    Q: np.ndarray
    P: np.ndarray
    s: float = 0.0
    t: float = 0.0
    E: float = float("nan")

    @property
    def y(self):
        return np.concatenate([self.Q, self.P, [self.t]])

    @classmethod
    def from_y(cls, y, s=0.0, E=float("nan")):
        y = np.asarray(y, dtype=float)
        n = (y.size - 1) // 2
        return cls(y[:n].copy(), y[n:2 * n].copy(), s, float(y[-1]), E)


@dataclass(frozen=True)
class CollisionEvent:
    kind: str        # InnerBinary | OuterPairBinary | SimultaneousBinary
    detail: str      # left/right, or the colliding pairing
    s: float
    t: float
    channel: int = 0


class Problem:
    """A regularized subproblem: chart, field and coordinate conversions."""

    tag = ""
    n_bodies = 0
    channel_labels = ()

    def __init__(self, masses, energy, dim):
        self.masses = MassVector(masses)
        self.energy = float(energy)
        self.dim = dim
        self.chart = None
        self._field = None

    @property
    def spec(self):
        return ProblemSpec(self.tag, self.masses, self.energy, 2 * self.ndof, getattr(self, "channels", None))

    @property
    def ndof(self):
        return self.chart.ndof

    @property
    def field(self):
        if self._field is None:
            self._field = self.chart.field()
        return self._field

    # subclasses: relative(q) -> (z1, z2); positions(z1, z2) -> q;
    # momenta(q, v) -> (p1, p2); velocities(z1, z2, p1, p2) -> v

    def check_symmetry(self, q, v):
        pass

    def to_physical(self, reg):
        d = self.dim
        u1, u2 = reg.Q[:d], reg.Q[d:2 * d]
        P1, P2 = reg.P[:d], reg.P[d:2 * d]
        z1, z2 = lc_square(u1), lc_square(u2)
        q = self.positions(z1, z2)
        n1, n2 = u1 @ u1, u2 @ u2
        if n1 == 0 or n2 == 0:
            v = np.full_like(q, np.inf)
        else:
            p1 = lc_matrix(u1) @ P1 / (2 * n1)
            p2 = lc_matrix(u2) @ P2 / (2 * n2)
            v = self.velocities(z1, z2, p1, p2)
        return PhaseState(q, v, reg.t)

    def from_physical(self, state, s=0.0):
        q, v = state.positions, state.velocities
        if q.shape != (self.n_bodies, self.dim):
            raise ChartDomain(f"{self.tag} expects {self.n_bodies} bodies in dimension {self.dim}")
        self.check_symmetry(q, v)
        z1, z2 = self.relative(q)
        for z in (z1, z2):
            if self.dim == 1 and not z[0] > 0:
                raise ChartDomain(f"{self.tag}: separations must be positive, got {z[0]}")
            if self.dim == 2 and not np.any(z != 0):
                raise ChartDomain(f"{self.tag}: separations must be nonzero")
        p1, p2 = self.momenta(q, v)
        u1, u2 = np.atleast_1d(levi_civita_inverse(z1)), np.atleast_1d(levi_civita_inverse(z2))
        P1 = 2 * lc_matrix(u1).T @ p1
        P2 = 2 * lc_matrix(u2).T @ p2
        return RegularizedState(np.concatenate([u1, u2]), np.concatenate([P1, P2]), s, state.time, self.energy)

    def project_to_level(self, y, index):
        """Replace momentum component ``index`` so that ``Gamma = 0``.

        Gamma is quadratic in each momentum component; the coefficients are
        read off the analytic gradient and Hessian, the larger real root is
        taken and polished by Newton steps.
        """
        y = np.array(y, dtype=float)
        f = self.field
        n = self.ndof
        j = n + index
        y[j] = 0.0
        f.check(y)  # the level set is singular at the triple-collision guard
        z = y[:2 * n]
        c = f.residual(y)
        b = f.gradient(z)[j]
        if f.hessian is not None:
            a = 0.5 * f.hessian(z)[j, j]
        else:
            yy = y.copy()
            yy[j] = 1.0
            a = f.residual(yy) - b - c
        if a == 0:
            if b == 0:
                raise ChartDomain("Gamma does not depend on the chosen momentum")
            y[j] = -c / b
            return y
        disc = b * b - 4 * a * c
        if disc < 0:
            raise ChartDomain("no real momentum places the state on the energy level")
        # numerically stable pair of roots
        q = -0.5 * (b + np.copysign(np.sqrt(disc), b))
        roots = [r for r in (q / a, c / q if q != 0 else q / a)]
        y[j] = max(roots)
        for _ in range(3):
            g = f.residual(y)
            d = f.gradient(y[:2 * n])[j]
            if g == 0 or d == 0:
                break
            y[j] -= g / d
        return y

    def channel_norms(self, y):
        d = self.dim
        return float(np.sqrt(y[:d] @ y[:d])), float(np.sqrt(y[d:2 * d] @ y[d:2 * d]))

    def angular_momentum(self, y):
        """``A = 1/2 sum_i u_i x P_i``, the reduced angular momentum (planar
        charts).  It vanishes identically in collinear charts."""
        if self.dim == 1:
            return 0.0
        n = self.ndof
        u, P = y[:n].reshape(-1, 2), y[n:2 * n].reshape(-1, 2)
        return 0.5 * float(np.sum(u[:, 0] * P[:, 1] - u[:, 1] * P[:, 0]))

    def angular_momentum_gradient(self, y):
        """Gradient of :meth:`angular_momentum` on ``(Q, P)``."""
        n = self.ndof
        g = np.zeros(2 * n)
        if self.dim == 1:
            return g
        u, P = y[:n].reshape(-1, 2), y[n:2 * n].reshape(-1, 2)
        g[:n] = 0.5 * np.column_stack([P[:, 1], -P[:, 0]]).ravel()
        g[n:] = 0.5 * np.column_stack([-u[:, 1], u[:, 0]]).ravel()
        return g

    def integral_gradients(self, y):
        """Gradients of the first integrals that produce trivial multipliers:
        ``Gamma`` always, and the angular momentum in planar charts."""
        z = np.asarray(y, dtype=float)[:2 * self.ndof]
        grads = [self.field.gradient(z)]
        if self.dim == 2:
            grads.append(self.angular_momentum_gradient(z))
        return grads

    def collision_event(self, channel, s, y):
        kind, detail = self.channel_labels[channel]
        return CollisionEvent(kind, detail, float(s), float(y[-1]), channel)


class Col2BP(Problem):
    tag = "col2bp"
    n_bodies = 2
    channel_labels = (("InnerBinary", "q1=q2"),)

    def __init__(self, masses, energy):
        super().__init__(masses, energy, 1)
        m1, m2 = self.masses.masses
        self._field = col2bp_field(m1, m2, energy, 1)

    @property
    def ndof(self):
        return 1

    def to_physical(self, reg):
        m1, m2 = self.masses.masses
        M = m1 + m2
        x = reg.Q[0] ** 2
        xdot = np.inf if reg.Q[0] == 0 else reg.P[0] / (2 * reg.Q[0]) * M / (m1 * m2)
        q = np.array([[-m2 * x / M], [m1 * x / M]])
        v = np.array([[-m2 * xdot / M], [m1 * xdot / M]])
        return PhaseState(q, v, reg.t)

    def from_physical(self, state, s=0.0):
        m1, m2 = self.masses.masses
        q, v = state.positions[:, 0], state.velocities[:, 0]
        x = q[1] - q[0]
        if not x > 0:
            raise ChartDomain("Col2BP requires q1 < q2")
        p = m1 * m2 / (m1 + m2) * (v[1] - v[0])
        w = np.sqrt(x)
        return RegularizedState(np.array([w]), np.array([2 * w * p]), s, state.time, self.energy)

    def channel_norms(self, y):
        return (abs(y[0]),)


class Col3BP(Problem):
    tag = "col3bp"
    n_bodies = 3
    channel_labels = (("OuterPairBinary", "left"), ("OuterPairBinary", "right"))

    def __init__(self, masses, energy):
        super().__init__(masses, energy, 1)
        m1, m2, m3 = self.masses.masses
        A = [[1 / m1 + 1 / m2, -1 / m2], [-1 / m2, 1 / m2 + 1 / m3]]
        terms = [PotentialTerm(m1 * m2, 1, 0), PotentialTerm(m2 * m3, 0, 1), PotentialTerm(m1 * m3, 1, 1)]
        self.chart = TwoChannelChart(A, terms, energy, 1)

    def relative(self, q):
        q = q[:, 0]
        return np.array([q[1] - q[0]]), np.array([q[2] - q[1]])

    def positions(self, z1, z2):
        m1, m2, m3 = self.masses.masses
        x1, x2 = z1[0], z2[0]
        q1 = -(m2 * x1 + m3 * (x1 + x2)) / (m1 + m2 + m3)
        return np.array([[q1], [q1 + x1], [q1 + x1 + x2]])

    def momenta(self, q, v):
        m = self.masses.array
        vv = v[:, 0] - (m @ v[:, 0]) / m.sum()
        return np.array([-m[0] * vv[0]]), np.array([m[2] * vv[2]])

    def velocities(self, z1, z2, p1, p2):
        m1, m2, m3 = self.masses.masses
        return np.array([[-p1[0] / m1], [(p1[0] - p2[0]) / m2], [p2[0] / m3]])


def _symmetric_pair_terms(m):
    # U = 1/(2 q1) + m^2/(2 q2) + 2m/(q1 - q2) + 2m/(q1 + q2), with q2 = z1,
    # q1 = z1 + z2
    return [
        PotentialTerm(m * m / 2, 1, 0),
        PotentialTerm(2 * m, 0, 1),
        PotentialTerm(0.5, 1, 1),
        PotentialTerm(2 * m, 2, 1),
    ]


def _symmetric_pair_kinetic(m):
    # K = |q1'|^2 + m |q2'|^2 = p2^2/4 + (p1 - p2)^2/(4m)
    return [[1 / (2 * m), -1 / (2 * m)], [-1 / (2 * m), 0.5 + 1 / (2 * m)]]


class ColS4BP(Problem):
    tag = "cols4bp"
    n_bodies = 4
    channel_labels = (("InnerBinary", "q2=q3"), ("SimultaneousBinary", "q1=q2,q3=q4"))

    def __init__(self, m, energy):
        super().__init__((1.0, m, m, 1.0), energy, 1)
        self.m = float(m)
        self.chart = TwoChannelChart(_symmetric_pair_kinetic(self.m), _symmetric_pair_terms(self.m), energy, 1)

    def check_symmetry(self, q, v):
        q, v = q[:, 0], v[:, 0]
        scale = 1e-12 * (1 + np.max(np.abs(q)))
        if abs(q[3] + q[0]) > scale or abs(q[2] + q[1]) > scale:
            raise ChartDomain("ColS4BP requires q4 = -q1 and q3 = -q2")
        if abs(v[3] + v[0]) > 1e-12 * (1 + np.max(np.abs(v))) or abs(v[2] + v[1]) > 1e-12 * (1 + np.max(np.abs(v))):
            raise ChartDomain("ColS4BP requires symmetric velocities")

    def relative(self, q):
        q1, q2 = q[0, 0], q[1, 0]
        return np.array([q2]), np.array([q1 - q2])

    def positions(self, z1, z2):
        q1, q2 = z1[0] + z2[0], z1[0]
        return np.array([[q1], [q2], [-q2], [-q1]])

    def momenta(self, q, v):
        v1, v2 = v[0, 0], v[1, 0]
        return np.array([2 * v1 + 2 * self.m * v2]), np.array([2 * v1])

    def velocities(self, z1, z2, p1, p2):
        v1 = p2[0] / 2
        v2 = (p1[0] - p2[0]) / (2 * self.m)
        return np.array([[v1], [v2], [-v2], [-v1]])


class PPS4BP(Problem):
    tag = "pps4bp"
    n_bodies = 4

    def __init__(self, m, energy, channels="sbc"):
        super().__init__((1.0, m, 1.0, m), energy, 2)
        self.m = float(m)
        if channels == "collinear":
            kinetic, terms = _symmetric_pair_kinetic(self.m), _symmetric_pair_terms(self.m)
            self.channel_labels = (("InnerBinary", "q2=q4"), ("SimultaneousBinary", "q1=q2,q3=q4"))
        elif channels == "sbc":
            h, g = 0.5 + 0.5 / self.m, 0.5 - 0.5 / self.m
            kinetic = [[h, g], [g, h]]
            # U = 1/|z1 + z2| + m^2/|z2 - z1| + 2m/|z1| + 2m/|z2|
            terms = [
                PotentialTerm(2 * self.m, 1, 0),
                PotentialTerm(2 * self.m, 0, 1),
                PotentialTerm(1.0, 1, 1),
                PotentialTerm(self.m * self.m, -1, 1),
            ]
            self.channel_labels = (("SimultaneousBinary", "q1=q2,q3=q4"),
                                   ("SimultaneousBinary", "q1=q4,q2=q3"))
        else:
            raise ValueError(f"unknown PPS4BP channel set {channels!r}")
        self.channels = channels
        self.chart = TwoChannelChart(kinetic, terms, energy, 2)

    def check_symmetry(self, q, v):
        for x in (q, v):
            scale = 1e-12 * (1 + np.max(np.abs(x)))
            if np.max(np.abs(x[2] + x[0])) > scale or np.max(np.abs(x[3] + x[1])) > scale:
                raise ChartDomain("PPS4BP requires q3 = -q1 and q4 = -q2")

    def relative(self, q):
        q1, q2 = q[0], q[1]
        if self.channels == "collinear":
            return q2.copy(), q1 - q2
        return q1 - q2, q1 + q2

    def positions(self, z1, z2):
        if self.channels == "collinear":
            q1, q2 = z1 + z2, z1.copy()
        else:
            q1, q2 = (z1 + z2) / 2, (z2 - z1) / 2
        return np.array([q1, q2, -q1, -q2])

    def momenta(self, q, v):
        v1, v2 = v[0], v[1]
        if self.channels == "collinear":
            return 2 * v1 + 2 * self.m * v2, 2 * v1
        return v1 - self.m * v2, v1 + self.m * v2

    def velocities(self, z1, z2, p1, p2):
        if self.channels == "collinear":
            v1 = p2 / 2
            v2 = (p1 - p2) / (2 * self.m)
        else:
            v1 = (p1 + p2) / 2
            v2 = (p2 - p1) / (2 * self.m)
        return np.array([v1, v2, -v1, -v2])

    def collision_event(self, channel, s, y):
        ev = super().collision_event(channel, s, y)
        if self.channels != "sbc":
            return ev
        q = self.positions(lc_square(y[0:2]), lc_square(y[2:4]))
        site = q[0]
        quad = "first/third" if site[0] * site[1] > 0 else "second/fourth"
        return CollisionEvent(ev.kind, f"{ev.detail} ({quad} quadrants)", ev.s, ev.t, channel)


def col2bp_problem(m1, m2, energy):
    return Col2BP((m1, m2), energy)


def col3bp_field(masses, energy):
    return Col3BP(masses, energy).field


def cols4bp_field(m, energy):
    return ColS4BP(m, energy).field


def pps4bp_field(m, energy, channels="sbc"):
    return PPS4BP(m, energy, channels).field


def make_problem(tag, masses=None, m=None, energy=-1.0, channels=None):
    tag = tag.lower()
    if tag == "col2bp":
        return Col2BP(masses if masses is not None else (1.0, 1.0), energy)
    if tag == "col3bp":
        return Col3BP(masses if masses is not None else (1 / 3, 1 / 3, 1 / 3), energy)
    if tag == "cols4bp":
        return ColS4BP(1.0 if m is None else m, energy)
    if tag == "pps4bp":
        return PPS4BP(1.0 if m is None else m, energy, channels or "sbc")
    raise ValueError(f"unknown problem {tag!r}; expected one of {PROBLEM_TAGS}")


def to_physical(problem, reg):
    return problem.to_physical(reg)


def from_physical(problem, state):
    return problem.from_physical(state)
