"""Experiment harness: lambda sweep, budget regimes, distance-bound audit, runtime profile.

Every study works on a list of :class:`~lipp.scenarios.ScenarioSpec` and
returns a flat list of :class:`MetricsRow`. Instances are independent jobs;
set ``LIPP_THREADS`` (or pass ``workers``) to fan them out over processes.
Rows are always returned in (seed, method, lambda, kappa) order so results do
not depend on scheduling. ``wall_time`` is the only nondeterministic column.
"""

from __future__ import annotations

import csv
import json
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from itertools import product
from pathlib import Path

from .baselines import CippQuery, GreedyQuery, solve_cipp, solve_greedy
from .errors import LippError
from .gp_field import VarianceEvaluator
from .graph_world import EnergyParams, make_plan
from .scenarios import ScenarioSpec, generate_scenario
from .solver import PlanQuery, distance_bound, simple_paths, solve_exact

THREADS_ENV = "LIPP_THREADS"


@dataclass
class MetricsRow:
    seed: int
    n: int
    method: str
    lam: float
    budget: float
    kappa: float | None = None
    objective: float = math.nan
    prior: float = math.nan
    variance_reduction: float = math.nan
    energy: float = math.nan
    distance: float = math.nan
    efficiency: float = math.nan
    path_len: int = 0
    total_samples: int = 0
    status: str = ""
    wall_time: float = 0.0
    bound_ratio: float | None = None
    bound_value: float | None = None
    bound_premises: bool | None = None
    bound_violated: bool | None = None
    bound_equal_length: bool | None = None
    bound_violated_without_sampling_premise: bool | None = None

    def attach_bound(self, check):
        self.bound_ratio = check.ratio
        self.bound_value = check.bound
        self.bound_premises = check.premises_hold
        self.bound_violated = check.violated
        self.bound_equal_length = check.equal_length
        self.bound_violated_without_sampling_premise = check.violated_without_sampling_premise


COLUMNS = [f.name for f in fields(MetricsRow)]


def desk_specs(count=50, n_low=6, n_high=10, first_seed=0, **overrides):
    """``count`` specs with seeds ``first_seed..`` and ``n`` cycling over ``[n_low, n_high]``."""
    span = n_high - n_low + 1
    return [
        ScenarioSpec(n=n_low + (seed - first_seed) % span, seed=seed, **overrides)
        for seed in range(first_seed, first_seed + count)
    ]


def _row(spec, method, lam, budget, report, prior, kappa=None):
    row = MetricsRow(spec.seed, spec.n, method, lam, budget, kappa, prior=prior)
    row.status = report.status
    row.wall_time = report.wall_time
    plan = report.plan
    if plan is not None:
        row.objective = plan.objective
        row.variance_reduction = prior - plan.objective
        row.energy = plan.energy
        row.distance = plan.distance
        row.efficiency = row.variance_reduction / plan.energy if plan.energy > 0 else math.nan
        row.path_len = len(plan.steps)
        row.total_samples = plan.total_samples
    return row


def _error_row(spec, method, lam, budget, exc, kappa=None):
    return MetricsRow(spec.seed, spec.n, method, lam, budget, kappa, status=f"error: {exc}")


def _reprice(report, world, params, ev):
    """Re-evaluate a plan's energy under ``params`` without changing its route."""
    if report.plan is None:
        return report
    plan = make_plan(report.plan.steps, world, params, ev, load_check=False)
    return type(report)(plan, report.lower_bound, report.nodes_explored, report.wall_time,
                        report.status, dict(report.metadata))


def _lambda_job(args):
    spec, lams, settings = args
    world, field = generate_scenario(spec)
    ev = VarianceEvaluator(field, world.positions)
    prior = ev.prior
    S, b, B = settings["s_max"], settings["distance_budget"], settings["budget"]
    r0, gap, strict = settings["base_mass"], settings["gap"], settings["strict"]
    rows = []
    cipp = {}
    for k in range(1, S + 1):
        try:
            cipp[k] = solve_cipp(CippQuery(world, field, b, k, optimality_gap=gap))
        except LippError as exc:
            cipp[k] = exc
    for lam in lams:
        params = EnergyParams(lam=lam, base_mass=r0, s_max=S, budget=B)
        try:
            lipp = solve_exact(PlanQuery(world, field, params, optimality_gap=gap, strict_sampling=strict))
            lrow = _row(spec, "lipp", lam, B, lipp, prior)
        except LippError as exc:
            lipp, lrow = None, _error_row(spec, "lipp", lam, B, exc)
        rows.append(lrow)
        for k in range(1, S + 1):
            label = f"cipp_S{k}"
            if isinstance(cipp[k], Exception):
                rows.append(_error_row(spec, label, lam, b, cipp[k]))
                continue
            priced = _reprice(cipp[k], world, params, ev)
            rows.append(_row(spec, label, lam, b, priced, prior))
            if k == S and lipp is not None and lipp.plan is not None and priced.plan is not None:
                lrow.attach_bound(distance_bound(lipp.plan, priced.plan, params))
        if settings["greedy"]:
            label = f"greedy_S{S}"
            try:
                g = solve_greedy(GreedyQuery(world, field, params, distance_budget=b))
                rows.append(_row(spec, label, lam, b, g, prior))
            except LippError as exc:
                rows.append(_error_row(spec, label, lam, b, exc))
    return rows


def _budget_job(args):
    spec, kappas, settings = args
    world, field = generate_scenario(spec)
    ev = VarianceEvaluator(field, world.positions)
    prior = ev.prior
    S, b, lam, r0 = settings["s_max"], settings["distance_budget"], settings["lam"], settings["base_mass"]
    params = EnergyParams(lam=lam, base_mass=r0, s_max=S, budget=1.0)
    label = f"cipp_S{S}"
    try:
        cipp = _reprice(solve_cipp(CippQuery(world, field, b, S, optimality_gap=settings["gap"])), world, params, ev)
    except LippError as exc:
        return [_error_row(spec, label, lam, b, exc)]
    rows = [_row(spec, label, lam, b, cipp, prior)]
    if cipp.plan is None:
        return rows
    reference = cipp.plan.energy
    for kappa in kappas:
        B = kappa * reference
        lparams = params.replace(budget=B)
        try:
            rep = solve_exact(PlanQuery(world, field, lparams, optimality_gap=settings["gap"],
                                        strict_sampling=settings["strict"]))
        except LippError as exc:
            rows.append(_error_row(spec, "lipp", lam, B, exc, kappa))
            continue
        row = _row(spec, "lipp", lam, B, rep, prior, kappa)
        if rep.plan is not None:
            row.attach_bound(distance_bound(rep.plan, cipp.plan, lparams))
        rows.append(row)
    return rows


def _workers(workers):
    if workers is None:
        workers = int(os.environ.get(THREADS_ENV, "1") or 1)
    return max(1, workers)


def _run(job, tasks, workers):
    workers = _workers(workers)
    if workers == 1 or len(tasks) <= 1:
        results = [job(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, tasks))
    rows = [r for chunk in results for r in chunk]
    return sort_rows(rows)


def sort_rows(rows):
    def key(r):
        return (r.seed, r.n, r.method, r.lam, -1.0 if r.kappa is None else r.kappa)

    return sorted(rows, key=key)


def lambda_sweep(specs, lams=(0.0, 0.25, 0.5, 0.75, 1.0), budget=2.0, distance_budget=2.0,
                 base_mass=1.0, s_max=3, gap=0.0, greedy=True, strict=False, workers=None):
    """LIPP under energy budget ``budget`` versus C-IPP_S1..S_max and greedy under ``distance_budget``.

    C-IPP routes do not depend on lambda, so each is solved once per instance
    and re-priced at every lambda. LIPP rows carry the distance-bound audit
    fields against the C-IPP_S_max plan.
    """
    lams = tuple(float(x) for x in lams)
    if 0.0 not in lams:
        raise ValueError("lambda values must include 0")
    settings = dict(budget=budget, distance_budget=distance_budget, base_mass=base_mass,
                    s_max=s_max, gap=gap, greedy=greedy, strict=strict)
    return _run(_lambda_job, [(spec, lams, settings) for spec in specs], workers)


def budget_sweep(specs, kappas=(1.0, 0.5, 0.35), s_max=3, lam=1.0, distance_budget=2.0,
                 base_mass=1.0, gap=0.0, strict=False, workers=None):
    """LIPP with ``B = kappa * B_CIPP``, where ``B_CIPP`` is the energy of the C-IPP_S_max plan at ``lam``."""
    kappas = tuple(float(k) for k in kappas)
    if any(not 0 < k <= 1 for k in kappas):
        raise ValueError("kappa values must lie in (0, 1]")
    settings = dict(s_max=s_max, lam=lam, distance_budget=distance_budget,
                    base_mass=base_mass, gap=gap, strict=strict)
    return _run(_budget_job, [(spec, kappas, settings) for spec in specs], workers)


def bound_audit(rows, s_max=None):
    """Summarize the distance-bound fields carried by LIPP rows."""
    audited = [r for r in rows if r.bound_ratio is not None]
    premise = [r for r in audited if r.bound_premises]
    equal = [r for r in premise if r.bound_equal_length]
    quotients = [r.bound_ratio / r.bound_value for r in premise]
    report = {
        "rows_audited": len(audited),
        "n_premise": len(premise),
        "violations": sum(bool(r.bound_violated) for r in audited),
        "violations_without_sampling_premise": sum(
            bool(r.bound_violated_without_sampling_premise) for r in audited
        ),
        "max_ratio": max((r.bound_ratio for r in premise), default=None),
        "max_ratio_over_bound": max(quotients, default=None),
        "equal_length_rows": len(equal),
    }
    if s_max is not None:
        report["equal_length_violations"] = sum(r.bound_ratio > s_max + 1e-9 for r in equal)
        zero = [r for r in audited if r.lam == 0]
        report["lambda_zero_bound_exact"] = all(abs(r.bound_value - s_max) <= 1e-12 for r in zero)
    return report


def equal_length_audit(spec, lam=1.0, base_mass=1.0, s_max=3, max_paths=2000):
    """Exhaustively pair equal-length plans on one scenario and test the simplified bound.

    For every pair of simple s-t paths with the same vertex count, the
    distance-side plan samples ``s_max`` everywhere and the energy-side plan
    takes a uniform count ``c`` in ``1..s_max``. Pairs satisfying the energy
    and distance premises must have length ratio at most ``s_max``.
    """
    world, field = generate_scenario(spec)
    ev = VarianceEvaluator(field, world.positions)
    params = EnergyParams(lam=lam, base_mass=base_mass, s_max=s_max, budget=1.0)
    paths = []
    for path in simple_paths(world):
        paths.append(path)
        if len(paths) >= max_paths:
            break
    checked = violations = 0
    worst = 0.0
    for pd, pe in product(paths, repeat=2):
        if len(pd) != len(pe) or pd == pe:
            continue
        plan_d = make_plan([(v, s_max) for v in pd], world, params, ev, load_check=False)
        for c in range(1, s_max + 1):
            plan_e = make_plan([(v, c) for v in pe], world, params, ev, load_check=False)
            check = distance_bound(plan_e, plan_d, params)
            if not check.premises_hold:
                continue
            checked += 1
            worst = max(worst, check.ratio)
            violations += check.ratio > s_max + 1e-9
    return {"seed": spec.seed, "pairs_checked": checked, "violations": violations, "max_ratio": worst}


def _profile_job(args):
    spec, settings = args
    world, field = generate_scenario(spec)
    ev = VarianceEvaluator(field, world.positions)
    S, gap = settings["s_max"], settings["gap"]
    params = EnergyParams(lam=settings["lam"], base_mass=settings["base_mass"], s_max=S, budget=settings["budget"])
    rows = []
    for label, solve in (
        ("lipp", lambda: solve_exact(PlanQuery(world, field, params, optimality_gap=gap,
                                               node_limit=settings["node_limit"]))),
        (f"cipp_S{S}", lambda: solve_cipp(CippQuery(world, field, settings["distance_budget"], S,
                                                    optimality_gap=gap, node_limit=settings["node_limit"]))),
    ):
        try:
            rows.append(_row(spec, label, params.lam, params.budget, solve(), ev.prior))
        except LippError as exc:
            rows.append(_error_row(spec, label, params.lam, params.budget, exc))
    return rows


def runtime_profile(specs, lam=1.0, budget=2.0, distance_budget=2.0, base_mass=1.0, s_max=3,
                    gap=0.05, node_limit=None, workers=None):
    """Per-instance wall times for LIPP and C-IPP_S_max; see :func:`median_times`."""
    settings = dict(lam=lam, budget=budget, distance_budget=distance_budget, base_mass=base_mass,
                    s_max=s_max, gap=gap, node_limit=node_limit)
    return _run(_profile_job, [(spec, settings) for spec in specs], workers)


def median_times(rows):
    """``{(method, n): median wall time}`` over seeds."""
    groups = {}
    for r in rows:
        groups.setdefault((r.method, r.n), []).append(r.wall_time)
    return {k: statistics.median(v) for k, v in sorted(groups.items())}


# -- aggregation and output ---------------------------------------------------

SUMMARY_METRICS = ("objective", "variance_reduction", "energy", "distance", "efficiency", "wall_time")


def _mean_se(values):
    vals = [v for v in values if v is not None and not math.isnan(v)]
    if not vals:
        return None, None
    mean = statistics.fmean(vals)
    se = statistics.stdev(vals) / math.sqrt(len(vals)) if len(vals) > 1 else 0.0
    return mean, se


def summarize(rows):
    """Per-(method, lambda, kappa) means and standard errors, keyed by a readable label."""
    groups = {}
    for r in rows:
        groups.setdefault((r.method, r.lam, r.kappa), []).append(r)
    out = {}
    for (method, lam, kappa), members in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2] or 0)):
        label = f"{method}|lam={lam:g}" + ("" if kappa is None else f"|kappa={kappa:g}")
        entry = {
            "method": method,
            "lam": lam,
            "kappa": kappa,
            "count": len(members),
            "solved": sum(not math.isnan(m.objective) for m in members),
        }
        for metric in SUMMARY_METRICS:
            mean, se = _mean_se(getattr(m, metric) for m in members)
            entry[metric] = {"mean": mean, "se": se}
        out[label] = entry
    return out


def mean_of(rows, method, metric, lam=None, kappa=None):
    vals = [
        getattr(r, metric) for r in rows
        if r.method == method and (lam is None or r.lam == lam) and (kappa is None or r.kappa == kappa)
    ]
    vals = [v for v in vals if not math.isnan(v)]
    return statistics.fmean(vals) if vals else math.nan


def write_csv(rows, path):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=COLUMNS)
        writer.writeheader()
        for r in rows:
            writer.writerow({k: ("" if v is None else v) for k, v in asdict(r).items()})
    return path


def read_csv(path):
    casts = {f.name: f.type for f in fields(MetricsRow)}
    rows = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for raw in csv.DictReader(fh):
            data = {}
            for k, v in raw.items():
                kind = casts[k]
                if v == "":
                    data[k] = None
                elif "bool" in kind:
                    data[k] = v == "True"
                elif kind.startswith("int"):
                    data[k] = int(v)
                elif kind == "str":
                    data[k] = v
                else:
                    data[k] = float(v)
            rows.append(MetricsRow(**data))
    return rows


def write_summary(rows, path, metadata=None, extra=None):
    doc = {"metadata": metadata or {}, "groups": summarize(rows)}
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
    return Path(path)


def deterministic_view(rows):
    """Rows as dicts without ``wall_time``, for reproducibility comparisons."""
    out = []
    for r in rows:
        d = asdict(r)
        d.pop("wall_time")
        out.append(d)
    return out
