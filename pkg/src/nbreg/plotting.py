"""Static figures written next to the delimited output (``--figure PATH``).

Only the Agg backend is used, so nothing here needs a display.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_trajectory", "plot_orbit", "plot_sweep", "plot_compare", "plot_col2bp", "plot_spectrum"]

_COLORS = {"SpectrallyStable": "tab:blue", "LinearlyUnstable": "tab:red", "Indeterminate": "tab:gray"}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_trajectory(t, positions, path, title=""):
    """Body positions against physical time; ``positions`` is ``(K, N, dim)``."""
    positions = np.asarray(positions, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    n, dim = positions.shape[1:]
    if dim == 1:
        for i in range(n):
            ax.plot(t, positions[:, i, 0], lw=1, label=f"q{i + 1}")
        ax.set_xlabel("t")
        ax.set_ylabel("position")
    else:
        for i in range(n):
            ax.plot(positions[:, i, 0], positions[:, i, 1], lw=1, label=f"body {i + 1}")
        ax.set_aspect("equal", adjustable="datalim")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    ax.legend(fontsize=8)
    ax.set_title(title)
    _save(fig, path)


def plot_orbit(t, positions, path, title=""):
    plot_trajectory(t, positions, path, title)


def plot_sweep(m, max_modulus, classes, path, tol=1e-3, title=""):
    """Largest nontrivial multiplier modulus against the mass parameter."""
    m = np.asarray(m, dtype=float)
    mod = np.asarray(max_modulus, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(m, mod, color="0.7", lw=1, zorder=1)
    for cls, color in _COLORS.items():
        sel = np.array([c == cls for c in classes], dtype=bool)
        if sel.any():
            ax.scatter(m[sel], mod[sel], s=14, color=color, label=cls, zorder=2)
    ax.axhline(1 + tol, color="k", ls=":", lw=0.8)
    if m.size and m.min() > 0 and m.max() / m.min() > 20:
        ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("m")
    ax.set_ylabel("max |multiplier|")
    ax.legend(fontsize=8)
    ax.set_title(title)
    _save(fig, path)


def plot_compare(rows, path):
    """Energy drift against closest approach for each method."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for method, marker in (("raw", "o"), ("regularized", "s")):
        pts = [(r.closest_approach, r.energy_drift) for r in rows if r.method == method]
        if pts:
            x, y = np.array(pts, dtype=float).T
            ax.scatter(x, np.maximum(y, 1e-17), marker=marker, label=method)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("closest approach")
    ax.set_ylabel("relative energy drift")
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_col2bp(s, w_numeric, w_exact, path):
    fig, (a1, a2) = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
    a1.plot(s, w_exact, lw=2, color="0.7", label="closed form")
    a1.plot(s, w_numeric, lw=1, ls="--", label="integrated")
    a1.set_ylabel("w")
    a1.legend(fontsize=8)
    a2.semilogy(s, np.maximum(np.abs(np.asarray(w_numeric) - w_exact), 1e-18), lw=1)
    a2.set_xlabel("s")
    a2.set_ylabel("|error|")
    _save(fig, path)


def plot_spectrum(eigenvalues, nontrivial, path, title=""):
    """Multipliers in the complex plane with the unit circle."""
    th = np.linspace(0, 2 * np.pi, 400)
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.plot(np.cos(th), np.sin(th), color="0.7", lw=1)
    ev = np.asarray(eigenvalues, dtype=complex)
    nt = np.asarray(nontrivial, dtype=complex)
    ax.scatter(ev.real, ev.imag, s=30, facecolors="none", edgecolors="k", label="all")
    ax.scatter(nt.real, nt.imag, s=12, color="tab:red", label="nontrivial")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.legend(fontsize=8)
    ax.set_title(title)
    _save(fig, path)
