"""Command-line front end.

Exit status: 0 on success, 2 when the result is inconclusive, 1 on input
errors.  ``--json`` emits a schema-versioned report whose floats carry 17
significant digits; otherwise an aligned table rounded to 6 digits.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import analytic, critical, dual, solver, tree, walk
from .errors import ModTreeError, ValidationError

REPORT_SCHEMA_VERSION = 1
TABLE_DENSITY_LIMIT = 64
DEFAULT_DENSITY_TERMS = 32

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INCONCLUSIVE = 2


@dataclass
class Report:
    command: str
    inputs: dict
    classification: Optional[str] = None
    values: dict = field(default_factory=dict)
    density: Optional[list] = None
    diagnostics: dict = field(default_factory=dict)
    wall_time: float = 0.0
    schema_version: int = REPORT_SCHEMA_VERSION

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "Report":
        if doc.get("schema_version") != REPORT_SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema_version {doc.get('schema_version')!r}")
        return cls(**{k: doc[k] for k in cls.__dataclass_fields__ if k in doc})

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Report":
        return cls.from_dict(json.loads(text))


# -- serialization --------------------------------------------------------------


def _float17(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    text = format(x, ".17g")
    if not any(c in text for c in ".en"):
        text += ".0"
    return text


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, tuple):
        return [_plain(v) for v in obj]
    return obj


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float written to 17 significant digits."""
    obj = _plain(obj)
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return _float17(obj)
    if isinstance(obj, (int, str)):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(isinstance(_plain(v), (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _fmt6(v) -> str:
    if isinstance(v, bool) or v is None:
        return str(v)
    if isinstance(v, float):
        return format(v, ".6g")
    if isinstance(v, list):
        shown = v if len(v) <= TABLE_DENSITY_LIMIT else v[:TABLE_DENSITY_LIMIT]
        text = ", ".join(_fmt6(x) for x in shown)
        if len(v) > TABLE_DENSITY_LIMIT:
            text += f", ... ({len(v) - TABLE_DENSITY_LIMIT} more)"
        return "[" + text + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {_fmt6(x)}" for k, x in v.items()) + "}"
    return str(v)


def render_table(report: Report) -> str:
    rows = [("command", report.command)]
    rows += [(f"input.{k}", _fmt6(v)) for k, v in report.inputs.items()]
    if report.classification is not None:
        rows.append(("classification", report.classification))
    rows += [(k, _fmt6(v)) for k, v in report.values.items()]
    if report.density is not None:
        rows.append(("density", _fmt6(report.density)))
    rows += [(f"diag.{k}", _fmt6(v)) for k, v in report.diagnostics.items()]
    rows.append(("wall_time_s", _fmt6(report.wall_time)))
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows)


# -- commands -----------------------------------------------------------------


def _exponent(text: str) -> float:
    try:
        p = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not p >= 1:
        raise argparse.ArgumentTypeError("p must be >= 1 or inf")
    return p


def _positive_int(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def _load(path: str):
    return tree.load(path)


def _require_radial(obj, path):
    if not isinstance(obj, tree.RadialTreeSpec):
        raise ValidationError(f"{path}: expected a radial spec", "kind")
    return obj


def _outcome_report(report: Report, outcome: analytic.ModulusOutcome, density_terms: int):
    report.classification = outcome.classification
    report.values = {"value": outcome.value, "lower": outcome.bounds[0], "upper": outcome.bounds[1]}
    report.diagnostics = {"witness": outcome.witness, "terms_used": outcome.terms_used, **outcome.diagnostics}
    if outcome.optimal_density is not None:
        report.density = outcome.optimal_density.head(density_terms).tolist()
        report.diagnostics["density_generations"] = density_terms


def cmd_modulus(args) -> Report:
    obj = _load(args.spec)
    p = args.p
    report = Report("modulus", {"spec": args.spec, "p": p, "truncate": args.truncate})
    if isinstance(obj, tree.FiniteTree):
        rep = solver.solve_finite_modulus(obj, solver.SolveOptions(p=p))
        report.classification = "positive"
        report.values = {"value": rep.value, "lower_bound": rep.lower_bound}
        report.density = rep.density.tolist()
        return report
    if args.truncate is not None:
        n = args.truncate
        report.classification = "positive"
        if p == 1:
            report.values = {"value": analytic.mod_1_truncated(obj, n)}
        elif math.isinf(p):
            report.values = {"value": analytic.mod_infty_truncated(obj, n)}
        else:
            tm = analytic.mod_p_truncated(obj, p, n)
            report.values = {"value": tm.value}
            report.density = tm.density.tolist()
        return report
    if p == 1:
        outcome = analytic.mod_1_infinite(obj)
    elif math.isinf(p):
        outcome = analytic.mod_infty_infinite(obj)
    else:
        outcome = analytic.mod_p_infinite(obj, p)
    _outcome_report(report, outcome, args.density_terms)
    return report


def cmd_sweep(args) -> Report:
    spec = _require_radial(_load(args.spec), args.spec)
    values = analytic.sweep(spec, args.p, args.n_max)
    report = Report("sweep", {"spec": args.spec, "p": args.p, "n_max": args.n_max})
    report.classification = "positive"
    report.values = {"n": list(range(1, args.n_max + 1)), "modulus": values.tolist()}
    report.diagnostics = {"nonincreasing": bool(np.all(np.diff(values) <= 0))}
    return report


def cmd_critical(args) -> Report:
    if args.construct_r is not None:
        source = critical.construct_tree_with_pc(args.construct_r)
        label = {"construct_r": args.construct_r}
    elif args.spec is not None:
        source = _require_radial(_load(args.spec), args.spec)
        label = {"spec": args.spec}
    else:
        raise ValidationError("critical needs a spec file or --construct-r", "argv")
    est = critical.estimate_pc(source, args.resolution)
    report = Report("critical", {**label, "resolution": args.resolution})
    report.classification = "consistent" if est.consistent else "inconsistent"
    report.values = {
        "p_lo": est.p_lo,
        "p_hi": est.p_hi,
        "estimate": est.estimate,
        "pc_is_one": est.pc_is_one,
        "pc_is_infinite": est.pc_is_infinite,
        "walk": critical.pc_walk_rule(est),
    }
    report.diagnostics = {"analytic": est.analytic, "bisection_steps": est.bisection_steps, "trace": list(est.trace)}
    return report


def cmd_dual_bound(args) -> Report:
    spec = _require_radial(_load(args.spec), args.spec)
    t = tree.truncate(spec, args.n)
    flow = dual.uniform_flow(t)
    bound = dual.lower_bound(t, flow, args.p)
    if args.p == 1:
        closed = analytic.mod_1_truncated(spec, args.n)
    elif math.isinf(args.p):
        closed = analytic.mod_infty_truncated(spec, args.n)
    else:
        closed = analytic.mod_p_truncated(spec, args.p, args.n).value
    report = Report("dual-bound", {"spec": args.spec, "p": args.p, "n": args.n})
    report.classification = "positive"
    report.values = {"lower_bound": bound, "modulus": closed, "relative_gap": (closed - bound) / closed}
    return report


def cmd_solve(args) -> Report:
    obj = _load(args.tree)
    if isinstance(obj, tree.RadialTreeSpec):
        if args.truncate is None:
            raise ValidationError("radial spec needs --truncate to be solved numerically", "truncate")
        obj = tree.truncate(obj, args.truncate)
    rep = solver.solve_finite_modulus(obj, solver.SolveOptions(p=args.p, rel_tol=args.tol))
    report = Report("solve", {"tree": args.tree, "p": args.p, "truncate": args.truncate, "tol": args.tol})
    report.classification = "positive" if rep.converged else "inconclusive"
    report.values = {
        "value": rep.value,
        "lower_bound": rep.lower_bound,
        "relative_gap": rep.relative_gap,
        "max_violation": rep.max_violation,
        "series_parallel": solver.series_parallel_modulus(obj, args.p) if args.p > 1 else None,
    }
    report.density = rep.density.tolist()
    report.diagnostics = {"iterations": rep.iterations, "canonical": rep.canonical, **rep.diagnostics}
    return report


def cmd_walk(args) -> Report:
    spec = _require_radial(_load(args.spec), args.spec)
    stats = walk.simulate_escape(walk.WalkConfig(spec, args.depth, args.walks, args.seed))
    predicted = walk.predicted_escape(spec, args.depth)
    report = Report("walk", {"spec": args.spec, "depth": args.depth, "walks": args.walks, "seed": args.seed})
    report.classification = critical.classify_walk(spec)
    report.values = {
        "escape": stats.escape,
        "half_width": stats.half_width,
        "predicted": predicted,
        "within_3_half_widths": abs(stats.escape - predicted) <= 3 * stats.half_width,
    }
    return report


def cmd_validate(args) -> Report:
    obj = _load(args.file)
    tree.validate(obj)
    report = Report("validate", {"file": args.file})
    report.classification = "ok"
    kind = "radial" if isinstance(obj, tree.RadialTreeSpec) else "finite"
    report.values = {"kind": kind}
    if kind == "finite":
        report.values.update({"edges": obj.n_edges, "depth": obj.depth, "leaves": int(obj.leaves.size)})
    return report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modtree", description="p-modulus of descending paths on rooted trees")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--json", action="store_true", help="emit the JSON report")
        sp.set_defaults(func=func)
        return sp

    sp = add("modulus", cmd_modulus, "modulus of the infinite or truncated family")
    sp.add_argument("spec")
    sp.add_argument("-p", type=_exponent, required=True)
    sp.add_argument("--truncate", type=_positive_int)
    sp.add_argument("--density-terms", type=_positive_int, default=DEFAULT_DENSITY_TERMS)

    sp = add("sweep", cmd_sweep, "truncated modulus for n = 1..n_max")
    sp.add_argument("spec")
    sp.add_argument("-p", type=_exponent, required=True)
    sp.add_argument("--n-max", type=_positive_int, required=True)

    sp = add("critical", cmd_critical, "critical exponent bracket")
    sp.add_argument("spec", nargs="?")
    sp.add_argument("--construct-r", type=float)
    sp.add_argument("--resolution", type=float, default=0.05)

    sp = add("dual-bound", cmd_dual_bound, "uniform-flow lower bound on a truncation")
    sp.add_argument("spec")
    sp.add_argument("-p", type=_exponent, required=True)
    sp.add_argument("-n", type=_positive_int, required=True)

    sp = add("solve", cmd_solve, "numeric modulus of an explicit finite tree")
    sp.add_argument("tree")
    sp.add_argument("-p", type=_exponent, required=True)
    sp.add_argument("--truncate", type=_positive_int)
    sp.add_argument("--tol", type=float, default=1e-10)

    sp = add("walk", cmd_walk, "Monte-Carlo escape probability")
    sp.add_argument("spec")
    sp.add_argument("--depth", type=_positive_int, required=True)
    sp.add_argument("--walks", type=_positive_int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("validate", cmd_validate, "check a tree-spec document")
    sp.add_argument("file")
    return parser


def run(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    start = time.perf_counter()
    try:
        report = args.func(args)
    except (ModTreeError, ValueError, OSError) as exc:
        report = Report(args.command, {k: v for k, v in vars(args).items() if k not in ("func", "json", "command")})
        report.classification = "error"
        report.diagnostics = {"error": type(exc).__name__, "message": str(exc)}
        loc = getattr(exc, "location", None)
        if loc is not None:
            report.diagnostics["location"] = list(loc) if isinstance(loc, tuple) else loc
        report.wall_time = time.perf_counter() - start
        _emit(report, args.json, out)
        return EXIT_INPUT
    report.wall_time = time.perf_counter() - start
    _emit(report, args.json, out)
    return EXIT_INCONCLUSIVE if report.classification == "inconclusive" else EXIT_OK


def _emit(report: Report, as_json: bool, out) -> None:
    out.write((report.to_json() if as_json else render_table(report)) + "\n")


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
