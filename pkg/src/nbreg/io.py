"""JSON and CSV records for orbits, stability reports and tables.

Every record is an envelope ``{"schema_version", "command", "config", ...}``
so that the resolved run configuration travels with the data.  Floats are
written with Python's shortest round-trip representation, which is
deterministic and exact; non-finite floats become ``null``.
"""

import csv
import io
import json
import math
import sys
from dataclasses import asdict, is_dataclass
from enum import Enum

import numpy as np

from .orbits import CollisionItinerary, PeriodicOrbit
from .problems import CollisionEvent, RegularizedState, make_problem

__all__ = [
    "SCHEMA_VERSION",
    "jsonable",
    "envelope",
    "dumps",
    "write_text",
    "write_json",
    "read_json",
    "write_csv",
    "complex_record",
    "problem_record",
    "orbit_record",
    "orbit_from_record",
    "report_record",
]

SCHEMA_VERSION = 1


def complex_record(z):
    z = complex(z)
    return {"re": z.real, "im": z.imag, "modulus": abs(z)}


def jsonable(obj):
    """Convert nested numpy / dataclass / enum values to JSON-ready objects."""
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (bool, str)) or obj is None:
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return jsonable(complex_record(obj))
    if isinstance(obj, np.ndarray):
        return [jsonable(x) for x in obj.tolist()] if obj.dtype.kind != "c" else \
            [jsonable(complex(x)) for x in obj.ravel()]
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(x) for x in obj]
    if is_dataclass(obj):
        return jsonable(asdict(obj))
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def envelope(command, config, **payload):
    rec = {"schema_version": SCHEMA_VERSION, "command": command, "config": dict(config)}
    rec.update(payload)
    return rec


def dumps(record):
    return json.dumps(jsonable(record), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_text(text, path=None):
    if path in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_json(record, path=None):
    write_text(dumps(record), path)


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _cell(v):
    if isinstance(v, Enum):
        return v.value
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if math.isfinite(v) else ""
    return str(v)


def write_csv(columns, rows, header, path=None):
    """CSV table preceded by ``# key = value`` lines carrying ``header``.

    ``header`` values that are not strings are written as compact JSON.
    """
    buf = io.StringIO()
    for k, v in header.items():
        text = v if isinstance(v, str) else json.dumps(jsonable(v), sort_keys=True, separators=(",", ":"))
        buf.write(f"# {k} = {text}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in columns])
    write_text(buf.getvalue(), path)


# -- domain records -----------------------------------------------------------------

def problem_record(problem):
    rec = {
        "tag": problem.tag,
        "masses": list(problem.masses.masses),
        "energy": problem.energy,
        "regularized_dimension": 2 * problem.ndof,
    }
    if getattr(problem, "channels", None):
        rec["channels"] = problem.channels
    return rec


def orbit_record(orbit):
    problem = orbit.problem
    y0 = orbit.y0
    return {
        "problem": problem_record(problem),
        "family": orbit.family,
        "parameter": orbit.parameter,
        "initial": {"Q": orbit.initial.Q, "P": orbit.initial.P, "s": orbit.initial.s,
                    "t": orbit.initial.t, "E": orbit.initial.E},
        "period_s": orbit.period_s,
        "period_t": orbit.period_t,
        "residual": orbit.residual,
        "deck": orbit.deck,
        "unknowns": orbit.unknowns,
        "angular_momentum": problem.angular_momentum(y0),
        "itinerary": [
            {"kind": e.kind, "detail": e.detail, "s": e.s, "t": e.t, "channel": e.channel}
            for e in orbit.itinerary.events
        ],
    }


def _problem_from_record(rec):
    tag = rec["tag"]
    masses = rec["masses"]
    if tag in ("col2bp", "col3bp"):
        return make_problem(tag, masses=tuple(masses), energy=rec["energy"])
    return make_problem(tag, m=masses[1], energy=rec["energy"], channels=rec.get("channels"))


def orbit_from_record(rec):
    """Rebuild a :class:`PeriodicOrbit` from :func:`orbit_record` output
    (or a full envelope containing an ``orbit`` key)."""
    rec = rec.get("orbit", rec)
    problem = _problem_from_record(rec["problem"])
    ini = rec["initial"]
    state = RegularizedState(np.array(ini["Q"], float), np.array(ini["P"], float),
                             ini["s"], ini["t"], ini["E"])
    events = tuple(CollisionEvent(e["kind"], e["detail"], e["s"], e["t"], e["channel"])
                   for e in rec["itinerary"])
    residual = rec["residual"]
    return PeriodicOrbit(
        problem.spec, state, rec["period_s"], rec["period_t"], CollisionItinerary(events),
        float("inf") if residual is None else residual,
        None if rec.get("unknowns") is None else np.array(rec["unknowns"], float),
        None if rec.get("deck") is None else np.array(rec["deck"], float),
        rec.get("family", ""), rec.get("parameter") or float("nan"), problem,
    )


def report_record(report):
    return {
        "classification": report.classification,
        "modulus_tolerance": report.modulus_tolerance,
        "determinant": report.determinant,
        "condition": report.condition,
        "max_modulus": report.max_modulus,
        "eigenvalues": [complex_record(z) for z in report.eigenvalues],
        "nontrivial": [complex_record(z) for z in report.nontrivial],
        "monodromy": report.monodromy,
        "integrator": {"rel_tol": report.rel_tol, "abs_tol": report.abs_tol},
    }
