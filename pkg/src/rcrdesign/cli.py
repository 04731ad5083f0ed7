"""Command-line entry point: ``rcrdesign <command> [flags]``.

Exit codes: 0 success, 1 certification failed (verify), 2 input error,
3 numerical infeasibility (singular moment matrix, no feasible start, or an
optimum that is not attained).
"""

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import io as dio
from .criteria import Evaluation
from .errors import DesignError, Infeasible, NoFeasibleStart
from .estimate import covariance_check
from .solver import equivalence_gap, round_to_exact, solve
from .straight_line import TABLE_HEADER, TABLES, reproduce_table
from .verify import verify

EXIT_OK, EXIT_UNCERTIFIED, EXIT_INPUT, EXIT_INFEASIBLE = 0, 1, 2, 3


def _emit(text, out=None):
    if out:
        dio.write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _fmt(x):
    return f"{x: .6e}"


def cmd_solve(args):
    prob, config = dio.load_problem(args.problem)
    overrides = {}
    if args.algorithm:
        overrides["algorithm"] = args.algorithm
    if args.tol is not None:
        overrides["gap_tol"] = args.tol
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.max_iters is not None:
        overrides["max_iters"] = args.max_iters
    config = dataclasses.replace(config, **overrides)
    report = solve(prob, config)
    doc = dio.report_document(report)
    doc["labels"] = [list(g.labels) for g in prob.groups]
    _emit(dio.dumps(doc), args.out)
    if report.status == "not_attained":
        print("optimum not attained: the criterion decreases towards a singular design",
              file=sys.stderr)
        return EXIT_INFEASIBLE
    if report.status == "max_iters":
        print(f"warning: iteration budget exhausted, gap {report.gap:.3e}", file=sys.stderr)
    if report.status == "stalled":
        print(f"warning: no further progress at working precision, gap {report.gap:.3e}",
              file=sys.stderr)
    return EXIT_OK


def _verification_table(rep):
    lines = [f"value {rep.value:.12g}  max violation {rep.max_violation:.3e}  "
             f"max support residual {rep.max_support_residual:.3e}  tol {rep.tolerance:g}"]
    for i, gv in enumerate(rep.per_group):
        lines.append(f"group {i}  rhs {gv.rhs:.10g}")
        lines.append(f"  {'point':>12} {'weight':>14} {'lhs':>14} {'slack':>14} {'norm slack':>14}")
        for t, label in enumerate(gv.labels):
            mark = "*" if gv.support[t] else " "
            lines.append(
                f"{mark} {label:>12} {_fmt(gv.weights[t]):>14} {_fmt(gv.lhs[t]):>14} "
                f"{_fmt(gv.slack[t]):>14} {_fmt(gv.normalized_slack[t]):>14}"
            )
    lines.append("certified" if rep.certified else "NOT certified")
    return "\n".join(lines) + "\n"


def cmd_verify(args):
    prob, _ = dio.load_problem(args.problem)
    designs = dio.load_designs(args.design)
    rep = verify(prob, designs, args.tol)
    sys.stdout.write(_verification_table(rep))
    if args.out:
        dio.write_json(args.out, dio.verification_document(rep))
    return EXIT_OK if rep.certified else EXIT_UNCERTIFIED


def cmd_eval(args):
    prob, _ = dio.load_problem(args.problem)
    designs = dio.load_designs(args.design)
    ev = Evaluation(prob, designs)
    doc = {
        "criterion": prob.criterion.label,
        "value": ev.value,
        "covariance": ev.cov,
        "sensitivity": [
            {"labels": list(g.labels), "lhs": ev.lhs(i), "rhs": ev.rhs(i)}
            for i, g in enumerate(prob.groups)
        ],
    }
    if args.json:
        _emit(dio.dumps(doc), args.out)
        return EXIT_OK
    lines = [f"criterion {prob.criterion.label}  value {ev.value:.12g}", "covariance"]
    lines += ["  " + " ".join(_fmt(v) for v in row) for row in ev.cov]
    for i, g in enumerate(prob.groups):
        lines.append(f"group {i}  rhs {ev.rhs(i):.10g}")
        for label, v in zip(g.labels, ev.lhs(i)):
            lines.append(f"  {label:>12} {_fmt(v)}")
    sys.stdout.write("\n".join(lines) + "\n")
    if args.out:
        dio.write_json(args.out, doc)
    return EXIT_OK


def cmd_gap(args):
    prob, _ = dio.load_problem(args.problem)
    designs = dio.load_designs(args.design)
    print(f"{equivalence_gap(prob, designs):.12g}")
    return EXIT_OK


def cmd_tables(args):
    ids = sorted(TABLES) if args.which == "all" else [int(args.which)]
    for table_id in ids:
        rows = reproduce_table(table_id)
        cols = [r.columns() for r in rows]
        text = dio.table_csv(TABLE_HEADER, cols)
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            base = os.path.join(args.out, f"table{table_id}")
            dio.write_atomic(base + ".csv", text)
            doc = dio.table_document(cols, TABLE_HEADER)
            doc["status"] = [r.status for r in rows]
            dio.write_json(base + ".json", doc)
        if len(ids) > 1:
            sys.stdout.write(f"# table {table_id}\n")
        sys.stdout.write(text)
    return EXIT_OK


def cmd_simulate(args):
    prob, _ = dio.load_problem(args.problem)
    designs = dio.load_designs(args.design)
    counts = [round_to_exact(d, g.m) for g, d in zip(prob.groups, designs)]
    beta0 = None if args.beta0 is None else np.asarray(args.beta0, dtype=float)
    chk = covariance_check(list(prob.groups), counts, args.reps, args.seed, beta0)
    doc = chk.as_dict()
    doc["counts"] = [c.tolist() for c in counts]
    doc["seed"] = args.seed
    _emit(dio.dumps(doc), args.out)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rcrdesign",
        description="Optimal designs for multiple-group random coefficient regression models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def problem_and_design(p):
        p.add_argument("--problem", required=True, help="problem document (JSON)")
        p.add_argument("--design", required=True, help="design document (JSON)")

    p = sub.add_parser("solve", help="compute an optimal design tuple")
    p.add_argument("--problem", required=True, help="problem document (JSON)")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--algorithm", choices=["vertex-direction", "multiplicative", "projected-gradient"],
                   help="weight update rule (default from the problem document)")
    p.add_argument("--tol", type=float, help="equivalence-gap tolerance")
    p.add_argument("--seed", type=int, help="seed for random feasible restarts")
    p.add_argument("--max-iters", type=int, help="sweep budget")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="certify a design tuple via the equivalence theorem")
    problem_and_design(p)
    p.add_argument("--tol", type=float, default=1e-6, help="normalized slack tolerance")
    p.add_argument("--out", help="also write the JSON report here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("eval", help="criterion value, covariance and sensitivities")
    problem_and_design(p)
    p.add_argument("--json", action="store_true", help="print JSON instead of a table")
    p.add_argument("--out", help="write JSON here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("tables", help="reproduce the two-group straight-line tables")
    p.add_argument("--which", choices=["1", "2", "all"], default="all", help="table to reproduce")
    p.add_argument("--out", help="directory for tableN.csv and tableN.json")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("simulate", help="Monte Carlo check of the estimator covariance")
    problem_and_design(p)
    p.add_argument("--reps", type=int, default=100_000, help="replications")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beta0", type=float, nargs="+", help="true mean parameters (default 0)")
    p.add_argument("--out", help="write the summary here instead of stdout")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gap", help="print the equivalence gap of a design tuple")
    problem_and_design(p)
    p.set_defaults(func=cmd_gap)
    return parser


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except (Infeasible, NoFeasibleStart) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INFEASIBLE
    except (DesignError, ValueError, KeyError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
