"""``lipp`` command-line entry point.

Exit status: 0 success, 1 infeasible (or failed validation), 2 usage or
input error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments as ex
from .baselines import DISTANCE_MODE, ENERGY_MODE, CippQuery, GreedyQuery, solve_cipp, solve_greedy
from .errors import InfeasiblePlanError, InputError, ScenarioError
from .graph_world import Scenario
from .miqp import (
    assignment_from_plan,
    build_miqp,
    export_model,
    load_assignment,
    read_model,
    save_assignment,
    validate_assignment,
)
from .scenarios import ScenarioSpec, make_scenario
from .solver import PlanQuery, solve_exact

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _emit(doc, output):
    text = json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n"
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8")


# output locations are left out so identical runs write identical files
_NOT_ECHOED = {"func", "output", "out_dir", "assignment_out"}


def _invocation(args, argv):
    flags = {k: v for k, v in vars(args).items() if k not in _NOT_ECHOED}
    return {"command": args.command, "flags": flags}


def _energy_flags(p, budget_default=None):
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="mass per unit sample")
    p.add_argument("--r0", type=float, default=None, help="robot base mass")
    p.add_argument("--smax", type=int, default=None, help="max samples per vertex")
    p.add_argument("--lmax", type=float, default=None, help="payload capacity")
    p.add_argument("--budget", type=float, default=budget_default, help="energy budget B")
    p.add_argument("--distance-cap", type=float, default=None, help="optional distance cap for LIPP")


def _resolve_energy(scenario, args):
    changes = {}
    for flag, key in (("lam", "lam"), ("r0", "base_mass"), ("smax", "s_max"), ("lmax", "l_max"),
                      ("budget", "budget"), ("distance_cap", "distance_cap")):
        value = getattr(args, flag, None)
        if value is not None:
            changes[key] = value
    return scenario.energy.replace(**changes)


# -- commands -----------------------------------------------------------------


def cmd_gen(args, argv):
    spec = ScenarioSpec(
        n=args.n, density=args.density, seed=args.seed, area=args.area,
        height_amplitude=args.height_amplitude, alpha=args.alpha,
        signal_variance=args.signal_variance, lengthscale=args.lengthscale,
        noise_variance=args.noise_variance, test_point_count=args.test_points,
    )
    sc = make_scenario(spec)
    sc = sc.with_energy(lam=args.lam if args.lam is not None else 1.0,
                        base_mass=args.r0 if args.r0 is not None else 1.0,
                        s_max=args.smax if args.smax is not None else 3,
                        l_max=args.lmax,
                        budget=args.budget,
                        distance_cap=args.distance_cap)
    sc.metadata["invocation"] = _invocation(args, argv)
    text = sc.dumps()
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.output).write_text(text, encoding="utf-8")
    return EXIT_OK


def cmd_plan(args, argv):
    sc = Scenario.load(args.scenario)
    params = _resolve_energy(sc, args)
    world, field = sc.world, sc.field
    if args.method == "lipp":
        query = PlanQuery(world, field, params, args.gap, args.node_limit, args.strict)
        report = solve_exact(query)
    elif args.method == "cipp":
        S = args.s if args.s is not None else params.s_max
        b = args.distance_budget if args.distance_budget is not None else 2.0
        report = solve_cipp(CippQuery(world, field, b, S, params.replace(s_max=max(S, params.s_max)),
                                      args.gap, args.node_limit))
    else:
        report = solve_greedy(GreedyQuery(world, field, params, args.greedy_mode, args.distance_budget))
    doc = report.to_dict()
    doc["metadata"]["invocation"] = _invocation(args, argv)
    doc["metadata"]["scenario_seed"] = sc.seed
    _emit(doc, args.output)
    if args.assignment_out:
        if args.method != "lipp" or report.plan is None:
            raise InputError("--assignment-out needs a feasible lipp plan")
        model = build_miqp(query)
        save_assignment(assignment_from_plan(query, model, report.plan), args.assignment_out)
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


def _specs(args):
    return ex.desk_specs(args.count, args.n_low, args.n_high, args.first_seed, density=args.density)


def _write_table(rows, args, argv, name, extra=None):
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ex.write_csv(rows, out / f"{name}.csv")
    ex.write_summary(rows, out / f"{name}.json", _invocation(args, argv), extra)
    sys.stdout.write(f"wrote {out / (name + '.csv')} and {out / (name + '.json')}\n")


def cmd_sweep_lambda(args, argv):
    rows = ex.lambda_sweep(
        _specs(args), args.lambdas, args.budget, args.distance_budget, args.r0, args.smax,
        args.gap, not args.no_greedy, args.strict, args.workers,
    )
    _write_table(rows, args, argv, "lambda_sweep", {"bound_audit": ex.bound_audit(rows, args.smax)})
    return EXIT_OK


def cmd_sweep_budget(args, argv):
    rows = ex.budget_sweep(
        _specs(args), args.kappas, args.smax, args.lam, args.distance_budget, args.r0,
        args.gap, args.strict, args.workers,
    )
    _write_table(rows, args, argv, "budget_sweep", {"bound_audit": ex.bound_audit(rows, args.smax)})
    return EXIT_OK


def cmd_audit_bound(args, argv):
    rows = [r for path in args.tables for r in ex.read_csv(path)]
    report = ex.bound_audit(rows, args.smax)
    report["invocation"] = _invocation(args, argv)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ex.write_csv([r for r in rows if r.bound_ratio is not None], out / "bound_audit.csv")
    _emit(report, out / "bound_audit.json")
    _emit(report, None)
    return EXIT_OK


def cmd_profile(args, argv):
    specs = [
        ScenarioSpec(n=n, density=args.density, seed=args.first_seed + k)
        for n in args.sizes for k in range(args.seeds)
    ]
    rows = ex.runtime_profile(specs, args.lam, args.budget, args.distance_budget, args.r0,
                              args.smax, args.gap, args.node_limit, args.workers)
    medians = {f"{m}|n={n}": t for (m, n), t in ex.median_times(rows).items()}
    _write_table(rows, args, argv, "runtime_profile", {"median_wall_time": medians})
    return EXIT_OK


def cmd_export_miqp(args, argv):
    sc = Scenario.load(args.scenario)
    params = _resolve_energy(sc, args)
    model = build_miqp(PlanQuery(sc.world, sc.field, params))
    export_model(model, args.output)
    sys.stdout.write(f"wrote {args.output}: {len(model.variables)} variables, "
                     f"{len(model.constraints)} constraints\n")
    return EXIT_OK


def cmd_validate(args, argv):
    model = read_model(args.model)
    report = validate_assignment(model, load_assignment(args.assignment))
    doc = report.to_dict()
    doc["invocation"] = _invocation(args, argv)
    _emit(doc, args.output)
    return EXIT_OK if report.all_pass else EXIT_INFEASIBLE


# -- parser -------------------------------------------------------------------


def _sweep_flags(p):
    p.add_argument("--count", type=int, default=50, help="instances (seeds)")
    p.add_argument("--first-seed", type=int, default=0)
    p.add_argument("--n-low", type=int, default=6)
    p.add_argument("--n-high", type=int, default=10)
    p.add_argument("--density", type=float, default=0.4)
    p.add_argument("--r0", type=float, default=1.0)
    p.add_argument("--smax", type=int, default=3)
    p.add_argument("--distance-budget", type=float, default=2.0)
    p.add_argument("--gap", type=float, default=0.0)
    p.add_argument("--strict", action="store_true", help="visited vertices take >= 1 sample")
    p.add_argument("--workers", type=int, default=None, help=f"processes (default ${ex.THREADS_ENV} or 1)")
    p.add_argument("--out-dir", default=".")


def build_parser():
    parser = argparse.ArgumentParser(prog="lipp", description="Load-aware informative path planning.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a scenario JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--density", type=float, default=0.4)
    p.add_argument("--area", type=float, default=1.0)
    p.add_argument("--height-amplitude", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.2)
    p.add_argument("--signal-variance", type=float, default=1.0)
    p.add_argument("--lengthscale", type=float, default=0.25)
    p.add_argument("--noise-variance", type=float, default=1.0)
    p.add_argument("--test-points", type=int, default=8)
    _energy_flags(p, budget_default=2.0)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("plan", help="solve a scenario")
    p.add_argument("scenario")
    p.add_argument("--method", choices=("lipp", "cipp", "greedy"), default="lipp")
    _energy_flags(p)
    p.add_argument("--gap", type=float, default=0.0)
    p.add_argument("--node-limit", type=int, default=None)
    p.add_argument("--strict", action="store_true", help="visited vertices take >= 1 sample")
    p.add_argument("--distance-budget", type=float, default=None, help="distance budget b (cipp, greedy)")
    p.add_argument("--s", type=int, default=None, help="samples per vertex for cipp")
    p.add_argument("--greedy-mode", choices=(DISTANCE_MODE, ENERGY_MODE), default=DISTANCE_MODE)
    p.add_argument("--assignment-out", default=None, help="also write the MIQP assignment (lipp only)")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("sweep-lambda", help="LIPP vs C-IPP vs greedy over lambda")
    _sweep_flags(p)
    p.add_argument("--lambdas", type=_floats, default=[0.0, 0.25, 0.5, 0.75, 1.0])
    p.add_argument("--budget", type=float, default=2.0)
    p.add_argument("--no-greedy", action="store_true")
    p.set_defaults(func=cmd_sweep_lambda)

    p = sub.add_parser("sweep-budget", help="LIPP at fractions of the C-IPP energy")
    _sweep_flags(p)
    p.add_argument("--kappas", type=_floats, default=[1.0, 0.5, 0.35])
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.set_defaults(func=cmd_sweep_budget)

    p = sub.add_parser("audit-bound", help="distance-bound audit over sweep CSVs")
    p.add_argument("tables", nargs="+")
    p.add_argument("--smax", type=int, default=3)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_audit_bound)

    p = sub.add_parser("profile", help="solver wall time versus graph size")
    p.add_argument("--sizes", type=_ints, default=[6, 8, 10])
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--first-seed", type=int, default=0)
    p.add_argument("--density", type=float, default=0.15)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--budget", type=float, default=2.0)
    p.add_argument("--distance-budget", type=float, default=2.0)
    p.add_argument("--r0", type=float, default=1.0)
    p.add_argument("--smax", type=int, default=3)
    p.add_argument("--gap", type=float, default=0.05)
    p.add_argument("--node-limit", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("export-miqp", help="write the MIQP in LP format")
    p.add_argument("scenario")
    _energy_flags(p)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_export_miqp)

    p = sub.add_parser("validate", help="check an assignment against an exported model")
    p.add_argument("--model", required=True)
    p.add_argument("--assignment", required=True)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args, argv)
    except InfeasiblePlanError as exc:
        sys.stderr.write(f"infeasible: {exc}\n")
        return EXIT_INFEASIBLE
    except (InputError, ScenarioError, ValueError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        sys.stderr.write(f"internal error: {type(exc).__name__}: {exc}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
