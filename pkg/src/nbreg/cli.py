"""Command-line interface: ``nbreg <command> [options]``.

Exit codes: 0 success, 2 usage or validation error, 3 numerical failure
(step underflow, step limit, chart abort), 4 solver non-convergence.
"""

import argparse
import math
import sys

import numpy as np

from . import io
from .benchmark import compare as run_compare
from .errors import (ChartAbort, IllConditionedSpectrum, IntegrationError, NBRegError, NoConvergence,
                     NonNegativeEnergy, SameClassification)
from .integrate import Event, IntegratorConfig, Termination, integrate
from .nbody import PhaseState, integrals, simulate
from .orbits import (ORBIT_CONFIG, pps4bp_collinear_orbit, pps4bp_sbc_orbit, cols4bp_orbit,
                     schubart_orbit)
from .problems import RegularizedState, make_problem
from .regularize import col2bp_solve, bracket_series, verify_bracket_identities
from .stability import MODULUS_TOL, find_boundary, stability_report, sweep

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_USAGE", "EXIT_NUMERICAL", "EXIT_SOLVER"]

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_SOLVER = 0, 2, 3, 4

PROBLEMS = ("col2bp", "col3bp", "cols4bp", "pps4bp-collinear", "pps4bp-sbc", "pps4bp")
FAMILY_OF = {
    "col3bp": "schubart",
    "cols4bp": "cols4bp",
    "pps4bp-collinear": "pps4bp-collinear",
    "pps4bp-sbc": "pps4bp-sbc",
    "pps4bp": "pps4bp-sbc",
}


class UsageError(Exception):
    pass


class Failure(Exception):
    """Command failure carrying an exit code and a partial output record."""

    def __init__(self, code, reason, message, **payload):
        super().__init__(message)
        self.code, self.reason, self.payload = code, reason, payload


def _floats(text):
    text = str(text).strip()
    if not text:
        return ()
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


# -- parser ---------------------------------------------------------------------------

def _shared():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("shared options")
    g.add_argument("--problem", choices=PROBLEMS, help="problem tag (pps4bp is pps4bp-sbc)")
    g.add_argument("--masses", type=_floats, help="comma-separated masses (col2bp, col3bp)")
    g.add_argument("--m", type=float, help="mass parameter of the symmetric four-body problems")
    g.add_argument("--energy", type=float, default=-1.0, help="energy level (default -1)")
    g.add_argument("--rel-tol", type=float, help="integrator relative tolerance")
    g.add_argument("--abs-tol", type=float, help="integrator absolute tolerance")
    g.add_argument("--out", default="-", help="output path ('-' for stdout)")
    g.add_argument("--format", choices=("json", "csv"), help="output format")
    g.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    g.add_argument("--config", help="flat 'key = value' file; flags override it")
    g.add_argument("--figure", help="also render a PNG figure to this path")
    return p


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nbreg", description="Regularized few-body dynamics, periodic collision orbits and their stability.",
        epilog="exit codes: 0 success, 2 usage, 3 numerical failure, 4 no convergence")
    sub = parser.add_subparsers(dest="command", metavar="command")
    shared = _shared()
    cmds = {}

    def add(name, helptext):
        p = sub.add_parser(name, parents=[shared], help=helptext, description=helptext)
        cmds[name] = p
        return p

    p = add("simulate", "integrate a trajectory in regularized or physical coordinates")
    p.add_argument("--raw", action="store_true", help="integrate the physical equations")
    p.add_argument("--collisions", type=int, help="col2bp: integrate through this many collisions")
    p.add_argument("--span", type=float, help="physical time span")
    p.add_argument("--positions", type=_floats, help="initial positions, body-major, comma-separated")
    p.add_argument("--velocities", type=_floats, help="initial velocities, body-major")
    p.add_argument("--samples", type=int, default=201, help="number of output samples")
    p.add_argument("--max-steps", type=int, default=200_000)

    p = add("demo-col2bp", "closed-form versus integrated collinear two-body collisions")
    p.add_argument("--collisions", type=int, default=10)
    p.add_argument("--samples", type=int, default=2001)

    add("find-orbit", "compute a periodic collision orbit")

    p = add("stability", "monodromy spectrum of an orbit file")
    p.add_argument("--orbit", help="orbit JSON written by find-orbit")
    p.add_argument("--modulus-tol", type=float, default=MODULUS_TOL)

    p = add("sweep", "classify a family over a grid of m")
    p.add_argument("--m-range", type=_floats, help="lo,hi (inclusive)")
    p.add_argument("--step", type=float, help="grid spacing in m")
    p.add_argument("--m-values", type=_floats, help="explicit comma-separated m values")
    p.add_argument("--modulus-tol", type=float, default=MODULUS_TOL)

    p = add("boundary", "bisect a stability boundary in m")
    p.add_argument("--bracket", type=_floats, help="lo,hi with different classifications")
    p.add_argument("--width", type=float, default=1e-3)
    p.add_argument("--modulus-tol", type=float, default=MODULUS_TOL)

    p = add("compare", "raw versus regularized integration near a collision")
    p.add_argument("--closest", type=_floats, default="1e-6,1e-3,1",
                   help="closest-approach distances (empty for none)")
    p.add_argument("--tolerances", type=_floats, default="1e-10", help="relative tolerances")
    return parser, cmds


def _load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}")
    out = {}
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected 'key = value'")
        k, v = (x.strip() for x in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _apply_config(sub, values):
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    unknown = sorted(set(values) - set(actions))
    if unknown:
        raise UsageError(f"unknown configuration keys: {', '.join(unknown)}")
    defaults = {}
    for k, v in values.items():
        a = actions[k]
        if isinstance(a, argparse._StoreTrueAction):
            defaults[k] = _bool(v)
        else:
            # argparse runs string defaults through the option's type
            if a.choices is not None and v not in a.choices:
                raise UsageError(f"config {k}: {v!r} is not one of {list(a.choices)}")
            defaults[k] = v
    sub.set_defaults(**defaults)


def parse_args(argv):
    parser, cmds = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        raise UsageError("a command is required")
    if args.config:
        _apply_config(cmds[args.command], _load_config(args.config))
        args = parser.parse_args(argv)
    return args


def resolved(args, **extra):
    cfg = {k: v for k, v in vars(args).items() if k not in ("command",)}
    cfg.update(extra)
    return dict(sorted(cfg.items()))


# -- helpers --------------------------------------------------------------------------

def _problem_tag(args, allowed=PROBLEMS):
    if args.problem is None:
        raise UsageError("--problem is required")
    if args.problem not in allowed:
        raise UsageError(f"--problem {args.problem} is not supported here; use one of {', '.join(allowed)}")
    return "pps4bp-sbc" if args.problem == "pps4bp" else args.problem


def _make(tag, args, energy=None):
    energy = args.energy if energy is None else energy
    if tag in ("col2bp", "col3bp"):
        masses = args.masses
        if masses is not None and len(masses) != (2 if tag == "col2bp" else 3):
            raise UsageError(f"{tag} needs {2 if tag == 'col2bp' else 3} masses")
        return make_problem(tag, masses=masses, energy=energy)
    m = 1.0 if args.m is None else args.m
    if not m > 0:
        raise UsageError("--m must be positive")
    if tag == "cols4bp":
        return make_problem("cols4bp", m=m, energy=energy)
    return make_problem("pps4bp", m=m, energy=energy,
                        channels="collinear" if tag == "pps4bp-collinear" else "sbc")


def _orbit_config(args):
    if args.rel_tol is None and args.abs_tol is None:
        return ORBIT_CONFIG
    rel = args.rel_tol if args.rel_tol is not None else ORBIT_CONFIG.rel_tol
    abs_ = args.abs_tol if args.abs_tol is not None else ORBIT_CONFIG.abs_tol
    return IntegratorConfig(rel, abs_)


def _format(args, default, allowed=("json", "csv")):
    fmt = args.format or default
    if fmt not in allowed:
        raise UsageError(f"--format {fmt} is not available for {args.command}")
    return fmt


def _columns(n, dim):
    axes = [""] if dim == 1 else ["x", "y", "z"][:dim]
    q = [f"q{i + 1}{a}" for i in range(n) for a in axes]
    v = [f"v{i + 1}{a}" for i in range(n) for a in axes]
    return q, v


def _state_row(state, masses, E):
    q, v = state.positions, state.velocities
    qc, vc = _columns(*q.shape)
    row = dict(zip(qc, q.ravel()))
    row.update(zip(vc, v.ravel()))
    try:
        if not np.all(np.isfinite(v)):
            raise ValueError
        I = integrals(state, masses)
        row["energy"] = I.total_energy
        row["energy_error"] = abs(I.total_energy - E) / max(abs(E), 1e-300) if E is not None else None
        mom = np.atleast_1d(I.linear_momentum) * float(np.sum(masses))
        row.update({f"momentum{'' if q.shape[1] == 1 else 'xyz'[k]}": mom[k] for k in range(q.shape[1])})
        if q.shape[1] == 2:
            row["angular_momentum"] = float(I.angular_momentum)
    except (NBRegError, ValueError):
        pass
    return row


def _table_columns(n, dim, regularized):
    qc, vc = _columns(n, dim)
    cols = (["s"] if regularized else []) + ["t"] + qc + vc + ["energy", "energy_error"]
    cols += ["momentum"] if dim == 1 else [f"momentum{a}" for a in "xyz"[:dim]]
    if dim == 2:
        cols.append("angular_momentum")
    if regularized:
        cols.append("chart_residual")
    return cols


def _emit_table(args, command, cfg, columns, rows, fmt, **payload):
    if fmt == "csv":
        header = {"schema_version": io.SCHEMA_VERSION, "command": command, "config": cfg}
        header.update(payload)
        io.write_csv(columns, rows, header, args.out)
    else:
        io.write_json(io.envelope(command, cfg, columns=columns,
                                  rows=[[r.get(c) for c in columns] for r in rows], **payload), args.out)


def _drift(rows, scale_key="sep"):
    vals = [r["energy_error"] for r in rows if r.get("energy_error") is not None and r.get(scale_key, True)]
    return max(vals) if vals else 0.0


# -- commands ---------------------------------------------------------------------------

def cmd_simulate(args):
    tag = _problem_tag(args)
    fmt = _format(args, "json")
    problem = _make(tag, args)
    masses = np.array(problem.masses.masses)
    n, dim = problem.n_bodies, problem.dim
    rel = args.rel_tol if args.rel_tol is not None else 1e-12
    abs_ = args.abs_tol if args.abs_tol is not None else 1e-13
    config = IntegratorConfig(rel, abs_, max_steps=args.max_steps)
    if args.samples < 2:
        raise UsageError("--samples must be at least 2")
    if args.collisions is not None and tag != "col2bp":
        raise UsageError("--collisions applies to col2bp only")
    if args.collisions is not None and args.collisions < 0:
        raise UsageError("--collisions must be non-negative")
    if args.span is not None and args.span < 0:
        raise UsageError("--span must be non-negative")

    # initial physical state
    cf = None
    if args.positions is None and args.velocities is None:
        if tag != "col2bp":
            raise UsageError(f"{tag} needs --positions and --velocities")
        try:
            cf = col2bp_solve(masses[0], masses[1], args.energy)
        except (ValueError, NonNegativeEnergy) as exc:
            raise UsageError(str(exc))
        x = cf.w_max ** 2
        M = masses.sum()
        state = PhaseState([[-masses[1] * x / M], [masses[0] * x / M]], [[0.0], [0.0]])
    else:
        if args.positions is None or args.velocities is None:
            raise UsageError("--positions and --velocities go together")
        if len(args.positions) != n * dim or len(args.velocities) != n * dim:
            raise UsageError(f"{tag} needs {n * dim} position and velocity components")
        state = PhaseState(np.reshape(args.positions, (n, dim)), np.reshape(args.velocities, (n, dim)))
    try:
        E = integrals(state, masses).total_energy
    except NBRegError as exc:
        raise UsageError(str(exc))

    span = args.span
    if span is None:
        if tag == "col2bp":
            if cf is None and E < 0:
                cf = col2bp_solve(masses[0], masses[1], E)
            if cf is None:
                raise UsageError("--span is required for unbound col2bp states")
            span = (args.collisions if args.collisions is not None else 1) * cf.collision_period_t
        else:
            span = 1.0
    cfg = resolved(args, energy=E, span=span, rel_tol=rel, abs_tol=abs_)
    columns = _table_columns(n, dim, not args.raw)
    if span == 0 or args.collisions == 0:
        _emit_table(args, "simulate", cfg, columns, [], fmt, status=Termination.COMPLETED.value,
                    energy_drift=0.0, collisions=[])
        return EXIT_OK

    if args.raw:
        field, traj = simulate(state, masses, span, config)
        t_end = traj.t[-1]
        grid = np.linspace(0.0, t_end, args.samples) if t_end > 0 else np.zeros(1)
        rows = []
        for t in grid:
            y = traj(t) if traj.has_dense else traj.y[-1]
            row = {"t": t, **_state_row(field.state(y, t), masses, E)}
            rows.append(row)
        drift = _drift(rows)
        status = traj.termination.value
        payload = dict(status=status, energy_drift=drift, final_time=float(t_end), steps=len(traj.t) - 1)
        if not traj.completed:
            _emit_table(args, "simulate", cfg, columns, rows, fmt, reason=status, **payload)
            _plot_states(args, problem, rows, n, dim)
            raise Failure(EXIT_NUMERICAL, status, f"raw integration stopped at t={float(t_end)!r}: {status}")
        _emit_table(args, "simulate", cfg, columns, rows, fmt, **payload)
        _plot_states(args, problem, rows, n, dim)
        return EXIT_OK

    # regularized
    problem = _make(tag, args, energy=E)
    try:
        reg = problem.from_physical(state)
    except NBRegError as exc:
        raise UsageError(str(exc))
    f = problem.field
    y0 = reg.y
    events = [Event(lambda y: y[-1] - span, +1, terminal=True)]
    if tag == "col2bp":
        events.append(Event(lambda y: y[0], 0, terminal=False))
    s_max = 1e3 * max(span, 1.0) / max(float(np.min(problem.channel_norms(y0))) ** 2, 1e-12)
    try:
        traj = integrate(f, y0, (0.0, s_max), config, events, guard=f.check)
        reason = None if traj.completed else traj.termination.value
    except ChartAbort as exc:
        traj, reason = None, type(exc).__name__
        abort = exc
    if traj is None:
        _emit_table(args, "simulate", cfg, columns, [], fmt, status="ChartAbort", reason=reason,
                    message=str(abort))
        raise Failure(EXIT_NUMERICAL, reason, str(abort))
    s_end = traj.t[-1]
    hits = [(s, y) for s, y in traj.events if len(y) and abs(y[0]) < 1e-6] if tag == "col2bp" else []
    collisions = [{"s": float(s), "t": float(y[-1])} for s, y in hits]
    rows = []
    sep_max = 0.0
    for s in np.linspace(0.0, s_end, args.samples):
        y = traj(s)
        if s == s_end:
            y = traj.y[-1]
        ps = problem.to_physical(RegularizedState.from_y(y, s, E))
        row = {"s": s, "t": float(y[-1]), **_state_row(ps, masses, E), "chart_residual": f.residual(y)}
        row["_sep"] = float(np.min(problem.channel_norms(y))) ** 2
        sep_max = max(sep_max, row["_sep"])
        rows.append(row)
    for r in rows:
        # energy from physical variables loses digits next to a collision
        r["sep"] = r.pop("_sep") >= 1e-2 * sep_max
    drift = _drift(rows)
    payload = dict(status=Termination.COMPLETED.value if reason is None else reason, energy_drift=drift,
                   chart_residual=max(abs(r["chart_residual"]) for r in rows),
                   collisions=collisions, final_s=float(s_end), final_time=float(traj.y[-1][-1]),
                   steps=len(traj.t) - 1)
    _emit_table(args, "simulate", cfg, columns, rows, fmt, **payload)
    _plot_states(args, problem, rows, n, dim)
    if reason is not None:
        raise Failure(EXIT_NUMERICAL, reason, f"regularized integration stopped: {reason}")
    return EXIT_OK


def _plot_states(args, problem, rows, n, dim):
    if not args.figure or not rows:
        return
    from .plotting import plot_trajectory
    qc, _ = _columns(n, dim)
    t = [r["t"] for r in rows]
    pos = np.array([[r.get(c, np.nan) for c in qc] for r in rows], dtype=float).reshape(len(rows), n, dim)
    plot_trajectory(t, pos, args.figure, problem.tag)


def cmd_demo_col2bp(args):
    _format(args, "json", ("json",))
    if args.problem not in (None, "col2bp"):
        raise UsageError("demo-col2bp runs the col2bp problem only")
    masses = args.masses if args.masses is not None else (1.0, 1.0)
    if len(masses) != 2:
        raise UsageError("col2bp needs 2 masses")
    m1, m2 = masses
    try:
        cf = col2bp_solve(m1, m2, args.energy)
    except (ValueError, NonNegativeEnergy) as exc:
        raise UsageError(str(exc))
    rel = args.rel_tol if args.rel_tol is not None else 1e-12
    abs_ = args.abs_tol if args.abs_tol is not None else 1e-13
    problem = make_problem("col2bp", masses=(m1, m2), energy=args.energy)
    f = problem.field
    s_end = args.collisions * math.pi / cf.omega
    traj = integrate(f, cf.state(0.0), (0.0, s_end), IntegratorConfig(rel, abs_))
    traj.raise_for_status()
    s = np.linspace(0.0, s_end, args.samples)
    num = np.array([traj(x) for x in s])
    exact = np.array([cf.state(x) for x in s])
    err = float(np.max(np.abs(num - exact)))
    # bracket identities along a tolerance-1e-10 run
    traj10 = integrate(f, cf.state(0.0), (0.0, s_end), IntegratorConfig(1e-10, 1e-12))
    br = verify_bracket_identities(*bracket_series(f, traj10.y, m1, m2), m1, m2, args.energy)
    M = m1 + m2
    a = m1 * m2 / (2 * abs(args.energy))
    record = io.envelope(
        "demo-col2bp", resolved(args, masses=[m1, m2], rel_tol=rel, abs_tol=abs_),
        omega=cf.omega, w_max=cf.w_max,
        collision_speed=cf.collision_speed, collision_speed_oracle=math.sqrt(M / 2),
        collision_period_t=cf.collision_period_t,
        kepler_period_oracle=2 * math.pi * math.sqrt(a ** 3 / M),
        collisions=args.collisions, max_pointwise_error=err,
        bracket_residuals={"eq_motion": br.eq_motion, "eq_energy": br.eq_energy},
    )
    io.write_json(record, args.out)
    if args.figure:
        from .plotting import plot_col2bp
        plot_col2bp(s, num[:, 0], exact[:, 0], args.figure)
    return EXIT_OK


def _find(tag, args, config):
    if tag == "col3bp":
        masses = args.masses if args.masses is not None else (1 / 3, 1 / 3, 1 / 3)
        if len(masses) != 3:
            raise UsageError("col3bp needs 3 masses")
        return schubart_orbit(masses, args.energy, config)
    m = 1.0 if args.m is None else args.m
    if not m > 0:
        raise UsageError("--m must be positive")
    fn = {"cols4bp": cols4bp_orbit, "pps4bp-collinear": pps4bp_collinear_orbit,
          "pps4bp-sbc": pps4bp_sbc_orbit}[tag]
    return fn(m, args.energy, config)


def _orbit_figure(args, orbit, config):
    if not args.figure:
        return
    from .plotting import plot_orbit
    problem = orbit.problem
    traj = integrate(problem.field, orbit.y0, (0.0, orbit.period_s), config)
    ts, pos = [], []
    for s in np.linspace(0.0, orbit.period_s, 801):
        y = traj(s)
        ps = problem.to_physical(RegularizedState.from_y(y, s, orbit.energy))
        ts.append(y[-1])
        pos.append(ps.positions)
    plot_orbit(ts, np.array(pos), args.figure, f"{orbit.family} m={orbit.parameter:g}")


def cmd_find_orbit(args):
    tag = _problem_tag(args, ("col3bp", "cols4bp", "pps4bp-collinear", "pps4bp-sbc", "pps4bp"))
    _format(args, "json", ("json",))
    if not args.energy < 0:
        raise UsageError(f"periodic orbits require E < 0, got {args.energy}")
    config = _orbit_config(args)
    cfg = resolved(args, rel_tol=config.rel_tol, abs_tol=config.abs_tol)
    orbit = _find(tag, args, config)
    io.write_json(io.envelope("find-orbit", cfg, status="Converged", orbit=io.orbit_record(orbit)), args.out)
    _orbit_figure(args, orbit, config)
    return EXIT_OK


def cmd_stability(args):
    _format(args, "json", ("json",))
    if not args.orbit:
        raise UsageError("--orbit FILE is required")
    try:
        orbit = io.orbit_from_record(io.read_json(args.orbit))
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"cannot read orbit file {args.orbit}: {exc}")
    config = _orbit_config(args)
    cfg = resolved(args, rel_tol=config.rel_tol, abs_tol=config.abs_tol)
    try:
        report = stability_report(orbit, args.modulus_tol, config)
    except ValueError as exc:
        raise UsageError(f"refusing orbit: {exc}")
    io.write_json(io.envelope("stability", cfg, orbit=io.orbit_record(orbit),
                              report=io.report_record(report)), args.out)
    if args.figure:
        from .plotting import plot_spectrum
        plot_spectrum(report.eigenvalues, report.nontrivial, args.figure, report.classification.value)
    return EXIT_OK


def _grid(args):
    if args.m_values is not None:
        if args.m_range is not None or args.step is not None:
            raise UsageError("--m-values excludes --m-range/--step")
        return sorted(args.m_values)
    if args.m_range is None or args.step is None:
        raise UsageError("give --m-range lo,hi with --step, or --m-values")
    if len(args.m_range) != 2 or not args.step > 0:
        raise UsageError("--m-range needs two values and --step must be positive")
    lo, hi = sorted(args.m_range)
    k = int(math.floor((hi - lo) / args.step + 1e-9))
    return [round(lo + i * args.step, 12) for i in range(k + 1)]


def cmd_sweep(args):
    tag = _problem_tag(args, ("col3bp", "cols4bp", "pps4bp-collinear", "pps4bp-sbc", "pps4bp"))
    fmt = _format(args, "csv")
    if not args.energy < 0:
        raise UsageError(f"periodic orbits require E < 0, got {args.energy}")
    ms = _grid(args)
    if any(not m > 0 for m in ms):
        raise UsageError("mass parameters must be positive")
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    config = _orbit_config(args)
    cfg = resolved(args, rel_tol=config.rel_tol, abs_tol=config.abs_tol)
    rows = sweep(FAMILY_OF[tag], ms, args.energy, args.modulus_tol, config, args.jobs)
    k = max((r.nontrivial.size for r in rows), default=0)
    columns = ["m", "present", "classification", "max_modulus"]
    for i in range(k):
        columns += [f"ev{i + 1}_re", f"ev{i + 1}_im", f"ev{i + 1}_modulus"]
    columns.append("reason")
    table = []
    for r in rows:
        row = {"m": r.m, "present": int(r.present),
               "classification": r.classification.value if r.present else None,
               "max_modulus": r.max_modulus if r.present else None, "reason": r.reason}
        for i, z in enumerate(r.nontrivial):
            row.update({f"ev{i + 1}_re": z.real, f"ev{i + 1}_im": z.imag, f"ev{i + 1}_modulus": abs(z)})
        table.append(row)
    _emit_table(args, "sweep", cfg, columns, table, fmt, family=FAMILY_OF[tag],
                modulus_tolerance=args.modulus_tol)
    if args.figure:
        from .plotting import plot_sweep
        ok = [r for r in rows if r.present]
        plot_sweep([r.m for r in ok], [r.max_modulus for r in ok], [r.classification.value for r in ok],
                   args.figure, args.modulus_tol, FAMILY_OF[tag])
    if rows and not any(r.present for r in rows):
        raise Failure(EXIT_SOLVER, "NoConvergence", "no grid point could be computed")
    return EXIT_OK


def cmd_boundary(args):
    tag = _problem_tag(args, ("col3bp", "cols4bp", "pps4bp-collinear", "pps4bp-sbc", "pps4bp"))
    _format(args, "json", ("json",))
    if args.bracket is None or len(args.bracket) != 2:
        raise UsageError("--bracket lo,hi is required")
    if not args.width > 0:
        raise UsageError("--width must be positive")
    if not args.energy < 0:
        raise UsageError(f"periodic orbits require E < 0, got {args.energy}")
    config = _orbit_config(args)
    cfg = resolved(args, rel_tol=config.rel_tol, abs_tol=config.abs_tol)
    try:
        b = find_boundary(FAMILY_OF[tag], args.bracket, args.width, args.energy, args.modulus_tol, config)
    except SameClassification as exc:
        raise UsageError(str(exc))
    record = io.envelope(
        "boundary", cfg, family=FAMILY_OF[tag], m=b.m, bracket=list(b.bracket),
        lower=b.lower.value, upper=b.upper.value, width=args.width, modulus_tolerance=args.modulus_tol,
        evaluations=[{"m": m, "classification": c.value, "max_modulus": mod} for m, c, mod in b.evaluations],
    )
    io.write_json(record, args.out)
    if args.figure:
        from .plotting import plot_sweep
        ev = sorted(b.evaluations)
        plot_sweep([e[0] for e in ev], [e[2] for e in ev], [e[1].value for e in ev], args.figure,
                   args.modulus_tol, f"boundary near m = {b.m:.4g}")
    return EXIT_OK


def cmd_compare(args):
    if args.problem not in (None, "col2bp"):
        raise UsageError("compare runs the col2bp scenario only")
    fmt = _format(args, "csv")
    masses = args.masses if args.masses is not None else (1.0, 1.0)
    if len(masses) != 2:
        raise UsageError("col2bp needs 2 masses")
    if any(not (0 < c <= 1) for c in args.closest):
        raise UsageError("closest approaches must lie in (0, 1] (semi-major axis 1)")
    if any(not t > 0 for t in args.tolerances):
        raise UsageError("tolerances must be positive")
    cfg = resolved(args, masses=list(masses))
    rows = run_compare(args.closest, args.tolerances, *masses, abs_tol=args.abs_tol)
    columns = ["closest_approach", "method", "rel_tol", "status", "energy_drift", "steps", "wall_time",
               "final_x", "final_y"]
    _emit_table(args, "compare", cfg, columns, [vars(r) for r in rows], fmt,
                scenario="planar Kepler ellipse, semi-major axis 1, one period from apocentre")
    if args.figure and rows:
        from .plotting import plot_compare
        plot_compare(rows, args.figure)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "demo-col2bp": cmd_demo_col2bp,
    "find-orbit": cmd_find_orbit,
    "stability": cmd_stability,
    "sweep": cmd_sweep,
    "boundary": cmd_boundary,
    "compare": cmd_compare,
}


def _fail(args, code, reason, message, **payload):
    print(f"nbreg: {reason}: {message}", file=sys.stderr)
    if args is not None and code != EXIT_USAGE:
        cfg = resolved(args)
        try:
            io.write_json(io.envelope(args.command, cfg, status=reason, reason=reason, message=message,
                                      **payload), args.out)
        except OSError:
            pass
    return code


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = None
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"nbreg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Failure as exc:
        # output already written by the command
        print(f"nbreg: {exc.reason}: {exc}", file=sys.stderr)
        return exc.code
    except NonNegativeEnergy as exc:
        print(f"nbreg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NoConvergence as exc:
        return _fail(args, EXIT_SOLVER, type(exc).__name__, str(exc), residual=exc.residual)
    except (IntegrationError, ChartAbort, IllConditionedSpectrum) as exc:
        return _fail(args, EXIT_NUMERICAL, type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
