"""JSON problem/design documents and canonical artifact writing.

The document schema is described in docs/schema.md.
"""

import csv
import dataclasses
import io
import json
import math
import os
import tempfile

import numpy as np

from .criteria import (
    a_criterion,
    c_criterion,
    d_criterion,
    imse_criterion,
    l_criterion,
)
from .model import CompoundProblem, Design, GridPoint, GroupSpec, monomial_points
from .solver import SolverConfig

FLOAT_DIGITS = 12


class DocumentError(ValueError):
    """Malformed input document."""


def _points(grid):
    if isinstance(grid, dict):
        if grid.get("basis") != "monomial":
            raise DocumentError(f"unknown grid basis {grid.get('basis')!r}")
        return monomial_points(grid["points"], int(grid["degree"]))
    pts = []
    for t, entry in enumerate(grid):
        label = entry.get("label", entry.get("x", t))
        label = f"{label:.12g}" if isinstance(label, (int, float)) else str(label)
        pts.append(GridPoint(t, label, np.atleast_2d(np.asarray(entry["G"], dtype=float))))
    return tuple(pts)


def _matrix(value, size):
    a = np.asarray(value, dtype=float)
    if a.ndim == 0:
        return a * np.eye(size)
    if a.ndim == 1:
        return np.diag(a)
    return a


def parse_group(doc):
    points = _points(doc["grid"])
    l, p = points[0].gmat.shape
    sigma = _matrix(doc.get("sigma", 1.0), l)
    dmat = _matrix(doc.get("D", 0.0), p)
    return GroupSpec(points, sigma, dmat, int(doc["m"]), int(doc["n"]))


def parse_criterion(doc, groups):
    kind = str(doc.get("type", "")).upper()
    p = groups[0].p
    if kind == "D":
        return d_criterion()
    if kind == "A":
        return a_criterion(p)
    if kind == "C":
        return c_criterion(doc["c"])
    if kind == "IMSE":
        return imse_criterion(groups[0], doc.get("nu", "uniform"))
    if kind == "L":
        return l_criterion(np.asarray(doc["V"], dtype=float))
    raise DocumentError(f"unknown criterion type {doc.get('type')!r}")


def parse_solver(doc):
    if not doc:
        return SolverConfig()
    names = {f.name for f in dataclasses.fields(SolverConfig)}
    unknown = set(doc) - names
    if unknown:
        raise DocumentError(f"unknown solver fields {sorted(unknown)}")
    return SolverConfig(**doc)


def parse_problem(doc):
    """(CompoundProblem, SolverConfig) from a decoded problem document."""
    try:
        groups = tuple(parse_group(g) for g in doc["groups"])
        if not groups:
            raise DocumentError("a problem needs at least one group")
        crit = parse_criterion(doc.get("criterion", {"type": "D"}), groups)
        return CompoundProblem(groups, crit, doc.get("meta")), parse_solver(doc.get("solver"))
    except KeyError as exc:
        raise DocumentError(f"missing field {exc.args[0]!r}") from None


def parse_designs(doc):
    """Designs from a list of weight lists, a list of {weights}, or {designs: ...}."""
    if isinstance(doc, dict):
        if "designs" not in doc:
            raise DocumentError("design document needs a 'designs' field")
        doc = doc["designs"]
    out = []
    for d in doc:
        w = d["weights"] if isinstance(d, dict) else d
        out.append(Design(np.asarray(w, dtype=float)))
    return out


def load_json(path):
    with open(path) as fh:
        return json.load(fh)


def load_problem(path):
    return parse_problem(load_json(path))


def load_designs(path):
    return parse_designs(load_json(path))


def problem_document(prob, config=None):
    """Inverse of parse_problem, with tabulated grids."""
    groups = []
    for g in prob.groups:
        groups.append({
            "n": g.n,
            "m": g.m,
            "sigma": g.sigma,
            "D": g.dmat,
            "grid": [{"label": pt.label, "G": pt.gmat} for pt in g.points],
        })
    crit = prob.criterion
    cdoc = {"type": "D"} if crit.kind == "D" else {"type": "L", "V": crit.vmat}
    doc = {"groups": groups, "criterion": cdoc}
    if config is not None:
        doc["solver"] = dataclasses.asdict(config)
    return doc


def design_document(prob, designs):
    return {
        "designs": [
            {"labels": list(g.labels), "weights": np.asarray(d.weights if hasattr(d, "weights") else d)}
            for g, d in zip(prob.groups, designs)
        ]
    }


def canonical(obj):
    """Plain JSON-able structure with floats fixed at 12 significant digits."""
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return canonical(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        x = float(format(x, f".{FLOAT_DIGITS}g"))
        return 0.0 if x == 0 else x
    return obj


def dumps(obj):
    return json.dumps(canonical(obj), sort_keys=True, indent=2) + "\n"


def write_atomic(path, text):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    write_atomic(path, dumps(obj))


def report_document(report):
    return {
        "status": report.status,
        "converged": report.converged,
        "value": report.value,
        "gap": report.gap,
        "support_gap": report.support_gap,
        "iterations": report.iterations,
        "designs": [{"weights": d.weights} for d in report.designs],
        "history": [{"iteration": it, "value": v, "gap": g} for it, v, g in report.history],
    }


def verification_document(rep):
    groups = []
    for gv in rep.per_group:
        groups.append({
            "labels": list(gv.labels),
            "weights": gv.weights,
            "lhs": gv.lhs,
            "rhs": gv.rhs,
            "slack": gv.slack,
            "normalized_slack": gv.normalized_slack,
            "support": gv.support,
        })
    return {
        "certified": rep.certified,
        "tolerance": rep.tolerance,
        "value": rep.value,
        "max_violation": rep.max_violation,
        "max_support_residual": rep.max_support_residual,
        "groups": groups,
    }


def table_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{v:.3f}" if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def table_document(rows, header):
    return {"header": header, "rows": [dict(zip(header, r)) for r in rows]}

