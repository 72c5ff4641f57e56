"""Linear stability of periodic collision orbits.

The monodromy matrix is the state-transition matrix over one period composed
with the deck transformation that closes the orbit.  Every first integral
``F`` contributes a pair of trivial unit multipliers: the Hamiltonian vector
field ``J grad F`` is an eigenvector and ``grad F`` a left eigenvector.  The
nontrivial multipliers are the spectrum of the map induced on
``ker(dF) / span(J grad F)``, which is the derivative of the Poincare map on
a level set of the integrals.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import IllConditionedSpectrum, NBRegError, NoConvergence, SameClassification
from .integrate import integrate_variational
from .orbits import ORBIT_CONFIG, SHOOT_TOL, family

__all__ = [
    "Classification",
    "StabilityReport",
    "SweepRow",
    "Boundary",
    "MODULUS_TOL",
    "monodromy",
    "reduce_monodromy",
    "classify",
    "stability_report",
    "orbit_stability",
    "sweep",
    "find_boundary",
]

MODULUS_TOL = 1e-3
CONDITION_LIMIT = 1e10
DET_TOL = 1e-6


class Classification(str, Enum):
    STABLE = "SpectrallyStable"
    UNSTABLE = "LinearlyUnstable"
    INDETERMINATE = "Indeterminate"


@dataclass
class StabilityReport:
    """Monodromy spectrum of one orbit.

    ``classification`` concerns spectral stability only: a spectrally stable
    orbit may still be nonlinearly unstable.
    """

    orbit: object = field(repr=False)
    monodromy: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray
    nontrivial: np.ndarray
    classification: Classification
    modulus_tolerance: float
    determinant: float
    condition: float
    rel_tol: float
    abs_tol: float

    @property
    def max_modulus(self):
        return float(np.max(np.abs(self.nontrivial))) if self.nontrivial.size else 1.0

    @property
    def trivial(self):
        """The ``len(eigenvalues) - len(nontrivial)`` eigenvalues closest to 1."""
        k = self.eigenvalues.size - self.nontrivial.size
        order = np.argsort(np.abs(self.eigenvalues - 1.0))
        return self.eigenvalues[np.sort(order[:k])]


def monodromy(orbit, config=None):
    """Deck-composed state-transition matrix on ``(Q, P)`` over one period."""
    problem = orbit.problem
    n = 2 * problem.ndof
    if orbit.period_s == 0:
        return np.eye(n)
    traj, phi = integrate_variational(problem.field, orbit.y0, (0.0, orbit.period_s),
                                      config or ORBIT_CONFIG)
    traj.raise_for_status()
    deck = np.ones(n) if orbit.deck is None else np.asarray(orbit.deck)
    return deck[:, None] * phi[:n, :n]


def _symplectic(n):
    h = n // 2
    return np.block([[np.zeros((h, h)), np.eye(h)], [-np.eye(h), np.zeros((h, h))]])


def reduce_monodromy(M, gradients):
    """Matrix of the map induced by ``M`` on ``ker(G^T) / span(J G)``.

    ``gradients`` are gradients of first integrals at the base point.  For
    ``k`` integrals the result has size ``n - 2k``.
    """
    n = M.shape[0]
    G = np.column_stack(gradients)
    k = G.shape[1]
    W = _symplectic(n) @ G
    kernel = scipy.linalg.null_space(G.T)
    Qw, _ = np.linalg.qr(W)
    # orthogonal complement of span(W) inside the kernel
    comp = kernel - Qw @ (Qw.T @ kernel)
    U, _, _ = np.linalg.svd(comp, full_matrices=False)
    B = U[:, : n - 2 * k]
    return B.T @ M @ B


def classify(eigenvalues, modulus_tolerance=MODULUS_TOL):
    """Spectral classification of nontrivial multipliers.

    Unstable when some modulus exceeds ``1 + tol``; stable when every modulus
    lies within ``tol / 2`` of 1; indeterminate in between.
    """
    mods = np.abs(np.asarray(eigenvalues, dtype=complex))
    if mods.size == 0:
        return Classification.STABLE
    tol = modulus_tolerance
    if mods.max() > 1 + tol:
        return Classification.UNSTABLE
    if mods.max() <= 1 + tol / 2 and mods.min() >= 1 - tol / 2:
        return Classification.STABLE
    return Classification.INDETERMINATE


def _condition(R):
    """Largest eigenvalue condition number ``1 / |y^H x|`` of ``R``."""
    if R.size == 0:
        return 1.0
    w, vl, vr = scipy.linalg.eig(R, left=True, right=True)
    s = np.abs(np.sum(vl.conj() * vr, axis=0))
    s /= np.linalg.norm(vl, axis=0) * np.linalg.norm(vr, axis=0)
    with np.errstate(divide="ignore"):
        return float(np.max(1.0 / s))


def stability_report(orbit, modulus_tolerance=MODULUS_TOL, config=None, retry=True):
    """Monodromy, multipliers and classification for ``orbit``.

    An ``Indeterminate`` result is recomputed once with a tenfold tighter
    integrator tolerance when ``retry`` is set.

    Raises
    ------
    ValueError
        If the orbit residual exceeds the shooting tolerance.
    IllConditionedSpectrum
        If the determinant is off by more than ``1e-6`` or an eigenvalue
        condition number exceeds ``1e10``.
    """
    if not orbit.residual <= SHOOT_TOL:
        raise ValueError(f"orbit residual {orbit.residual:.2e} exceeds {SHOOT_TOL:.0e}")
    config = config or ORBIT_CONFIG
    M = monodromy(orbit, config)
    det = float(np.linalg.det(M))
    if not abs(det - 1) <= DET_TOL:
        raise IllConditionedSpectrum(f"monodromy determinant {det!r} is not 1")
    R = reduce_monodromy(M, orbit.problem.integral_gradients(orbit.y0))
    cond = _condition(R)
    if cond > CONDITION_LIMIT:
        raise IllConditionedSpectrum(f"eigenvalue condition number {cond:.2e}")
    nontrivial = np.linalg.eigvals(R)
    cls = classify(nontrivial, modulus_tolerance)
    if cls == Classification.INDETERMINATE and retry:
        return stability_report(orbit, modulus_tolerance, config.tightened(10.0), retry=False)
    return StabilityReport(
        orbit, M, np.linalg.eigvals(M), _sorted(nontrivial), cls, modulus_tolerance,
        det, cond, config.rel_tol, config.abs_tol,
    )


def _sorted(ev):
    return ev[np.lexsort((ev.imag, ev.real, np.abs(ev)))]


def orbit_stability(family_name, m, energy=-1.0, modulus_tolerance=MODULUS_TOL, config=None):
    """Solve the family member at ``m`` and return its stability report."""
    orb = family(family_name, energy, config)(m)
    return stability_report(orb, modulus_tolerance, config)


@dataclass
class SweepRow:
    m: float
    classification: Optional[Classification]
    nontrivial: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    max_modulus: float = float("nan")
    reason: str = ""

    @property
    def present(self):
        return self.classification is not None


def _sweep_row(args):
    name, m, energy, tol, config = args
    try:
        rep = orbit_stability(name, m, energy, tol, config)
    except NBRegError as exc:
        return SweepRow(m, None, reason=f"{type(exc).__name__}: {exc}")
    return SweepRow(m, rep.classification, rep.nontrivial, rep.max_modulus)


def _chunks(values, jobs):
    # contiguous blocks so each worker continues along its own stretch
    return [list(c) for c in np.array_split(np.asarray(values, dtype=float), jobs) if len(c)]


def _sweep_chunk(args):
    name, ms, energy, tol, config = args
    return [_sweep_row((name, m, energy, tol, config)) for m in ms]


def sweep(family_name, masses, energy=-1.0, modulus_tolerance=MODULUS_TOL, config=None, jobs=1):
    """Classify the family over a grid of mass parameters.

    Rows whose orbit or monodromy could not be computed carry
    ``classification = None`` and a reason; they are never interpolated.
    Rows come back in increasing ``m`` whatever the number of jobs.
    """
    ms = sorted(float(m) for m in masses)
    if not ms:
        return []
    if jobs <= 1 or len(ms) == 1:
        rows = _sweep_chunk((family_name, ms, energy, modulus_tolerance, config))
    else:
        work = [(family_name, c, energy, modulus_tolerance, config) for c in _chunks(ms, jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = [r for chunk in pool.map(_sweep_chunk, work) for r in chunk]
    return sorted(rows, key=lambda r: r.m)


@dataclass
class Boundary:
    m: float
    bracket: tuple
    lower: Classification
    upper: Classification
    evaluations: list = field(default_factory=list)


def find_boundary(family_name, bracket, width=1e-3, energy=-1.0, modulus_tolerance=MODULUS_TOL,
                  config=None):
    """Bisect on linear instability until the bracket is narrower than ``width``.

    Raises
    ------
    SameClassification
        If both ends of the bracket are unstable or both are not.
    """
    lo, hi = sorted(float(b) for b in bracket)
    evals = []

    def unstable(m):
        rep = orbit_stability(family_name, m, energy, modulus_tolerance, config)
        evals.append((m, rep.classification, rep.max_modulus))
        return rep.classification == Classification.UNSTABLE, rep.classification

    u_lo, c_lo = unstable(lo)
    u_hi, c_hi = unstable(hi)
    if u_lo == u_hi:
        raise SameClassification(f"both ends classify as {c_lo.value} / {c_hi.value}")
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        u_mid, c_mid = unstable(mid)
        if u_mid == u_lo:
            lo, c_lo = mid, c_mid
        else:
            hi, c_hi = mid, c_mid
    return Boundary(0.5 * (lo + hi), (lo, hi), c_lo, c_hi, evals)
