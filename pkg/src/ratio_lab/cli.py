"""``ratio-lab`` command line: solve, sweep, verify, optimize, plotdata.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .construction import (
    ConstructionParams,
    DomainError,
    in_parameter_triangle,
    interior_triangle_point,
    make_resource_profile,
    ratio_lower_bound,
    sub_solution_value,
    super_solution_value,
)
from .grid import GridError, build_grid, default_grid
from .optimizer import FamilySpec, maximize_ratio, sweep_ratio, SweepRow, FAILURE_FRACTION, _rule_d
from .records import (
    RunRecord,
    cache_get,
    cache_put,
    load_record,
    read_csv,
    record_id,
    resolve_out_dir,
    save_record,
    write_csv,
    write_json,
)
from .solver import SolveOptions, SolverError, l1_norm, ratio, solve_construction, solve_steady
from .verification import (
    check_energy_identity,
    check_gas,
    check_grid,
    check_growth_order,
    check_one_dim_ceiling,
    check_sandwich,
    check_scaling,
    check_sub_inequality,
    check_super_inequality,
    scaling_fit,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3

SUITES = ("sub", "super", "sandwich", "identity", "growth", "scaling", "ceiling", "gas", "all")
NEEDS_TRIANGLE = ("sub", "super", "sandwich", "scaling")
DEFAULT_EPS_LISTS = {
    ("growth", 1): (1e-3, 1e-4, 1e-5),
    ("growth", 2): (0.2, 0.1, 0.05),
    ("scaling", 2): (0.2, 0.1, 0.05, 0.02, 0.01),
    ("ceiling", 1): (1e-2, 1e-3, 1e-4),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_globals(p, suppress):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--out-dir", default=default(None), help="run directory root (default ./runs; RATIO_LAB_OUT_DIR wins)")
    p.add_argument("--threads", type=int, default=default(1), help="parallel solves in sweeps and scans")
    p.add_argument("--resume", action="store_true", default=default(False), help="reuse cached sweep points")
    p.add_argument("--seed", type=int, default=default(None), help="reserved; every algorithm is deterministic")


def _add_construction(p):
    p.add_argument("--n", type=int, default=2, help="dimension")
    p.add_argument("--c1", type=float, default=None)
    p.add_argument("--c2", type=float, default=None)
    p.add_argument("--refine", type=int, default=1, help="grid refinement factor")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ratio-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_globals(parser, suppress=False)
    common = _Parser(add_help=False)
    _add_globals(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="one steady solve on the concentration profile")
    _add_construction(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--d-rule", choices=("paper", "sqrt", "fixed"), default="paper")
    p.add_argument("--d", type=float, default=None, help="diffusion rate for --d-rule fixed")
    p.add_argument("--inner", type=int, default=None, help="cells on [0, eps]")
    p.add_argument("--outer", type=int, default=None, help="cells on [eps, 1]")

    p = sub.add_parser("sweep", parents=[common], help="ratio against eps")
    _add_construction(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--eps-list", help="comma separated eps values")
    g.add_argument("--log-range", help="LO,HI,COUNT: COUNT log-spaced eps in [LO, HI]")
    p.add_argument("--d-rule", choices=("paper", "sqrt", "fixed"), default="paper")
    p.add_argument("--d", type=float, default=None)

    p = sub.add_parser("verify", parents=[common], help="run verification checks")
    _add_construction(p)
    p.add_argument("--suite", choices=SUITES, default="all")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--eps-list", default=None, help="eps values for growth, scaling and ceiling")

    p = sub.add_parser("optimize", parents=[common], help="maximise the ratio over (eps, d)")
    _add_construction(p)
    p.add_argument("--family", choices=("free-d", "paper-construction"), default="free-d")
    p.add_argument("--eps-min", type=float, default=None)
    p.add_argument("--eps-max", type=float, default=0.5)
    p.add_argument("--d-min", type=float, default=None)
    p.add_argument("--d-max", type=float, default=None)
    p.add_argument("--budget", type=int, default=200)

    p = sub.add_parser("plotdata", parents=[common], help="plot-ready CSV from a stored record")
    p.add_argument("--record", required=True, help="record id, run directory or record.json path")
    p.add_argument("--kind", choices=("profile", "scaling", "trace"), required=True)
    p.add_argument("--output", default="-", help="output CSV path (default stdout)")
    return parser


# -- argument helpers -------------------------------------------------------


def _check_eps(eps):
    if not (0.0 < eps < 1.0):
        raise UsageError("eps must be in (0,1)")


def _parse_floats(text, what):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"{what} must be comma separated numbers") from None
    if not vals:
        raise UsageError(f"{what} is empty")
    for v in vals:
        _check_eps(v)
    return vals


def _log_range(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError("log-range must be LO,HI,COUNT")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError("log-range must be LO,HI,COUNT") from None
    _check_eps(lo)
    _check_eps(hi)
    if count < 1 or lo > hi:
        raise UsageError("log-range needs LO <= HI and COUNT >= 1")
    return [float(v) for v in np.logspace(math.log10(lo), math.log10(hi), count)]


def _constants(args):
    """Resolved ``(c1, c2)``; the interior triangle point fills in missing values."""
    if args.n < 1:
        raise UsageError("n must be >= 1")
    if args.refine < 1:
        raise UsageError("refine must be >= 1")
    if args.n == 1:
        return None, None
    c = interior_triangle_point(args.n, 0.9)
    c1 = c.c1 if args.c1 is None else args.c1
    c2 = c.c2 if args.c2 is None else args.c2
    if c1 <= 0 or c2 <= 0:
        raise UsageError("c1 and c2 must be positive")
    return c1, c2


def _params(n, eps, c1, c2):
    return ConstructionParams(n, eps, c1 or 0.0, c2 or 0.0)


def _fmt(x):
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.10g}"


# -- subcommands ------------------------------------------------------------


def cmd_solve(args, out_dir):
    _check_eps(args.eps)
    c1, c2 = _constants(args)
    if args.d_rule == "fixed" and (args.d is None or not args.d > 0):
        raise UsageError("--d-rule fixed needs a positive --d")
    if (args.inner is None) != (args.outer is None):
        raise UsageError("--inner and --outer go together")
    params = _params(args.n, args.eps, c1, c2)
    d = _rule_d(args.n, args.eps, args.d_rule, params, args.d)
    m = make_resource_profile(args.n, args.eps)
    inputs = {
        "n": args.n, "eps": args.eps, "c1": c1, "c2": c2, "d_rule": args.d_rule, "d": d,
        "inner": args.inner, "outer": args.outer, "refine": args.refine,
    }
    if args.inner is not None:
        grid = build_grid(args.n, m, args.inner * args.refine, args.outer * args.refine)
    else:
        grid = default_grid(args.n, m, d, refine=args.refine)
    opts = SolveOptions(initial_guess="sub-solution", params=params) if args.n >= 2 else SolveOptions()
    try:
        sol = solve_steady(args.n, d, m, grid, opts)
    except SolverError as exc:
        print(f"solve failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    value = ratio(sol, m)
    lower = ratio_lower_bound(args.n, args.eps, c2) if args.n >= 2 else None
    r = sol.r
    if args.n >= 2:
        sub_vals = sub_solution_value(params, r)
        sup_vals = np.full_like(r, super_solution_value(params))
    else:
        sub_vals = sup_vals = [None] * len(r)
    outputs = {
        "ratio": value,
        "d": d,
        "residual_inf": sol.residual_inf,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "l1_norm": l1_norm(sol),
        "lower_bound": lower,
        "u0": float(sol.u[0]),
        "grid_size": sol.grid.size,
        "in_triangle": in_parameter_triangle(args.n, c1, c2) if args.n >= 2 else None,
    }
    rec = RunRecord("solve", inputs, outputs)
    solution = {
        "n": args.n, "eps": args.eps, "d": d, "ratio": value,
        "residual_inf": sol.residual_inf, "r": r, "u": sol.u,
    }
    m_vals = m(r)
    target = save_record(out_dir, rec, {
        "solution.json": lambda p: write_json(p, solution),
        "profile.csv": lambda p: write_csv(p, ("r", "u", "sub", "super", "m"), zip(r.tolist(), sol.u.tolist(), list(sub_vals), list(sup_vals), m_vals.tolist())),
    })
    print(f"ratio = {value:.10g}")
    if lower is not None:
        print(f"lower_bound = {lower:.10g}")
    print(f"d = {d:.10g}  u(0) = {sol.u[0]:.10g}  residual = {sol.residual_inf:.3e}")
    print(f"record {target / 'record.json'}")
    return EXIT_OK


def _sweep_rows(args, out_dir, eps_list, params, c1):
    """Sweep with a per-point cache keyed by the point's inputs."""
    def key(eps):
        return record_id("sweep-point", {
            "n": args.n, "eps": eps, "d_rule": args.d_rule, "d": args.d,
            "c1": c1, "c2": params.c2 if params else None, "refine": args.refine,
        })

    cached, todo = {}, []
    for eps in eps_list:
        hit = cache_get(out_dir, key(eps)) if args.resume else None
        if hit is not None:
            cached[eps] = SweepRow(**{k: (math.nan if v is None and k != "error" else v) for k, v in hit.items()})
        else:
            todo.append(eps)
    fresh = sweep_ratio(args.n, todo, args.d_rule, params, args.d, args.refine, args.threads) if todo else []
    for row in fresh:
        if row.ok:
            cache_put(out_dir, key(row.eps), {"eps": row.eps, "d": row.d, "ratio": row.ratio, "lower_bound": row.lower_bound, "error": None})
        cached[row.eps] = row
    if args.resume and len(cached) > len(fresh):
        print(f"resumed {len(cached) - len(fresh)} cached point(s)", file=sys.stderr)
    return [cached[e] for e in sorted(cached, reverse=True)]


def cmd_sweep(args, out_dir):
    c1, c2 = _constants(args)
    eps_list = _parse_floats(args.eps_list, "eps-list") if args.eps_list else _log_range(args.log_range)
    eps_list = sorted(set(eps_list), reverse=True)
    if args.d_rule == "fixed" and (args.d is None or not args.d > 0):
        raise UsageError("--d-rule fixed needs a positive --d")
    params = _params(args.n, eps_list[0], c1, c2) if args.n >= 2 else None
    rows = _sweep_rows(args, out_dir, eps_list, params, c1)

    def as_dict(r):
        gap = r.ratio - r.lower_bound if r.ok and args.n >= 2 else math.nan
        return {
            "eps": r.eps, "log_eps_abs": r.log_eps_abs, "d": r.d, "ratio": r.ratio,
            "lower_bound": r.lower_bound, "ratio_minus_bound": gap, "error": r.error,
        }

    table = [as_dict(r) for r in rows]
    failed = sum(1 for r in rows if not r.ok)
    ok_ratios = [r.ratio for r in rows if r.ok]
    monotone = bool(np.all(np.diff(ok_ratios) > 0)) if len(ok_ratios) > 1 else True
    inputs = {
        "n": args.n, "eps_list": eps_list, "d_rule": args.d_rule, "d": args.d,
        "c1": c1, "c2": c2, "refine": args.refine,
    }
    rec = RunRecord("sweep", inputs, {"rows": table, "failed": failed, "monotone": monotone})
    header = ("eps", "log_eps_abs", "d", "ratio", "lower_bound", "ratio_minus_bound", "error")
    target = save_record(out_dir, rec, {
        "sweep.csv": lambda p: write_csv(p, header, ([row[h] if not (isinstance(row[h], float) and math.isnan(row[h])) else None for h in header] for row in table)),
    })
    print("eps,ratio,lower_bound,ratio_minus_bound")
    for row in table:
        print(f"{row['eps']:.6g},{_fmt(row['ratio'])},{_fmt(row['lower_bound'])},{_fmt(row['ratio_minus_bound'])}"
              + (f"  [{row['error']}]" if row["error"] else ""))
    if not monotone:
        print("warning: ratio column is not increasing as eps decreases", file=sys.stderr)
    print(f"record {target / 'record.json'}")
    if failed > FAILURE_FRACTION * len(rows):
        print(f"{failed} of {len(rows)} solves failed", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _suite_eps(args, suite):
    if args.eps_list:
        return _parse_floats(args.eps_list, "eps-list")
    n_key = 1 if (suite == "ceiling" or args.n == 1) else 2
    return DEFAULT_EPS_LISTS[(suite, n_key)]


def _run_suite(name, args, params, c1, c2):
    n = args.n
    if name == "sub":
        return check_sub_inequality(params, check_grid(n, params.eps))
    if name == "super":
        return check_super_inequality(params, check_grid(n, params.eps))
    if name == "sandwich":
        return check_sandwich(solve_construction(params, refine_grid(params, args.refine)), params)
    if name == "identity":
        return check_energy_identity(params, refine_grid(params, args.refine))
    if name == "growth":
        sols = [solve_construction(params.with_eps(e), refine_grid(params.with_eps(e), args.refine)) for e in _suite_eps(args, name)]
        return check_growth_order(n, sols, params)
    if name == "scaling":
        fit = scaling_fit(n, _suite_eps(args, name), params, args.refine, args.threads)
        return check_scaling(fit, n, c2)
    if name == "ceiling":
        return check_one_dim_ceiling(_suite_eps(args, name), args.refine, args.threads)
    if name == "gas":
        return check_gas(params, grid=refine_grid(params, args.refine))
    raise UsageError(f"unknown suite {name!r}")


def refine_grid(params, refine):
    return default_grid(params.n, params.profile, params.d, refine=refine)


def cmd_verify(args, out_dir):
    _check_eps(args.eps)
    c1, c2 = _constants(args)
    if args.suite == "all":
        names = [s for s in SUITES[:-1] if args.n >= 2 or s not in NEEDS_TRIANGLE]
    else:
        if args.n == 1 and args.suite in NEEDS_TRIANGLE:
            raise UsageError(f"suite {args.suite} needs n >= 2")
        names = [args.suite]
    params = _params(args.n, args.eps, c1, c2)
    inputs = {
        "suite": args.suite, "n": args.n, "eps": args.eps, "c1": c1, "c2": c2,
        "eps_list": args.eps_list, "refine": args.refine,
    }
    reports = []
    for name in names:
        try:
            reports.append(_run_suite(name, args, params, c1, c2))
        except (SolverError, RuntimeError) as exc:
            print(f"{name}: numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
    passed = all(r.passed for r in reports)
    payload = {"passed": passed, "reports": [r.to_dict() for r in reports]}
    rec = RunRecord("verify", inputs, payload)
    target = save_record(out_dir, rec, {"report.json": lambda p: write_json(p, payload)})
    for rep in reports:
        print(rep.summary())
        if rep.check_name in ("one_dim_ceiling", "growth_order", "scaling"):
            for row in rep.details:
                print("    " + "  ".join(f"{k}={_fmt(v) if isinstance(v, float) else v}" for k, v in row.items()))
    print(("PASS" if passed else "FAIL") + f" ({sum(r.passed for r in reports)}/{len(reports)} checks)")
    print(f"record {target / 'record.json'}")
    return EXIT_OK if passed else EXIT_VERIFY


def cmd_optimize(args, out_dir):
    c1, c2 = _constants(args)
    eps_min = args.eps_min if args.eps_min is not None else (1e-4 if args.n == 1 else 1e-3)
    d_min = args.d_min if args.d_min is not None else (1e-4 if args.n == 1 else 1e-3)
    d_max = args.d_max if args.d_max is not None else (10.0 if args.n == 1 else 1.0)
    _check_eps(eps_min)
    _check_eps(args.eps_max)
    spec = FamilySpec(
        args.n, args.family, (eps_min, args.eps_max), (d_min, d_max), args.budget, c1, c2, args.refine,
    )
    result = maximize_ratio(spec, threads=args.threads)
    inputs = {
        "n": args.n, "family": args.family, "eps_bounds": [eps_min, args.eps_max],
        "d_bounds": [d_min, d_max], "budget": args.budget, "c1": c1, "c2": c2, "refine": args.refine,
    }
    outputs = {
        "best_params": result.best_params,
        "best_ratio": result.best_ratio,
        "evaluations": len(result.trace),
        "failures": result.failures,
        "exhausted_budget": result.exhausted_budget,
    }
    rec = RunRecord("optimize", inputs, outputs)
    trace_rows = [(i, e.phase, e.eps, e.d, None if e.error else e.ratio, e.error) for i, e in enumerate(result.trace)]
    target = save_record(out_dir, rec, {
        "result.json": lambda p: write_json(p, {**outputs, "trace": [vars(e) for e in result.trace]}),
        "trace.csv": lambda p: write_csv(p, ("evaluation", "phase", "eps", "d", "ratio", "error"), trace_rows),
    })
    best = result.best_params
    print(f"best_ratio = {_fmt(result.best_ratio)}")
    if best:
        print(f"at eps = {best['eps']:.6g}, d = {best['d']:.6g}")
    print(f"{len(result.trace)} evaluations, {result.failures} failed")
    print(f"record {target / 'record.json'}")
    if result.failed:
        print("too many solver failures; result is partial", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


PLOT_SOURCES = {
    "profile": ("profile.csv", "r", ("u", "sub", "super")),
    "scaling": ("sweep.csv", "log_eps_abs", ("ratio", "lower_bound")),
    "trace": ("trace.csv", "evaluation", ("ratio",)),
}


def cmd_plotdata(args, out_dir):
    try:
        record, folder = load_record(args.record, out_dir)
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from None
    name, x, ys = PLOT_SOURCES[args.kind]
    path = Path(folder) / name
    if not path.is_file():
        raise UsageError(f"record {record.get('id')} has no {name} ({record.get('command')} run)")
    header, rows = read_csv(path)
    cols = [header.index(c) for c in (x, *ys)]
    out_rows = [[row[i] for i in cols] for row in rows]
    if args.output == "-":
        w = csv.writer(sys.stdout)
        w.writerow((x, *ys))
        w.writerows(out_rows)
    else:
        write_csv(Path(args.output), (x, *ys), out_rows)
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "optimize": cmd_optimize,
    "plotdata": cmd_plotdata,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("ratio-lab: error: threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    out_dir = resolve_out_dir(args.out_dir)
    try:
        return COMMANDS[args.command](args, out_dir)
    except (UsageError, DomainError, GridError, ValueError) as exc:
        print(f"ratio-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
