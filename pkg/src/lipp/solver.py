"""Exact load-aware planning by depth-first branch-and-bound.

The search walks simple start-to-target paths. At every vertex it first fixes
the number of samples taken there (largest first), then branches on the next
vertex (cheapest edge first). A prefix is discarded when

* its energy plus the cheapest way of hauling the current mass to the target
  exceeds the budget, or
* the posterior variance obtained by also sampling every still-reachable
  vertex as heavily as the budget allows is no better than the incumbent.

The same core, with the energy check swapped for a distance check and a fixed
per-vertex sample count, drives the distance-budgeted baseline in
:mod:`lipp.baselines`.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .gp_field import FieldModel, VarianceEvaluator
from .graph_world import EnergyParams, Plan, World, make_plan

OPTIMAL = "optimal"
GAP_REACHED = "gap-reached"
NODE_LIMIT = "node-limit"
INFEASIBLE = "infeasible"

FEAS_TOL = 1e-9
TIE_TOL = 1e-12


@dataclass(frozen=True)
class PlanQuery:
    world: World
    field: FieldModel
    energy: EnergyParams
    optimality_gap: float = 0.0
    node_limit: int | None = None
    # visited vertices must take >= 1 sample, as in the MIQP
    strict_sampling: bool = False

    def __post_init__(self):
        if not 0 <= self.optimality_gap < 1:
            raise InputError("optimality_gap must lie in [0, 1)")
        if self.node_limit is not None and self.node_limit < 1:
            raise InputError("node_limit must be positive")


@dataclass
class SolveReport:
    plan: Plan | None
    lower_bound: float
    nodes_explored: int
    wall_time: float
    status: str
    metadata: dict = field(default_factory=dict)

    @property
    def objective(self):
        return self.plan.objective if self.plan is not None else math.inf

    @property
    def feasible(self):
        return self.plan is not None

    def to_dict(self):
        return {
            "status": self.status,
            "objective": None if self.plan is None else self.plan.objective,
            "lower_bound": None if math.isinf(self.lower_bound) else self.lower_bound,
            "nodes_explored": self.nodes_explored,
            "wall_time": self.wall_time,
            "plan": None if self.plan is None else self.plan.to_dict(),
            "metadata": self.metadata,
        }


def _ties(a, b):
    return abs(a - b) <= TIE_TOL * max(1.0, abs(a), abs(b))


class BranchAndBound:
    """Shared DFS core for the energy-budgeted and distance-budgeted planners.

    ``counts_at(v)`` lists the admissible sample counts at ``v`` in branching
    order (largest first). ``budget`` is an energy budget (``None`` to ignore
    energy); ``distance_cap`` an optional cap on geometric length.
    """

    def __init__(
        self,
        world,
        evaluator,
        params,
        counts_at,
        *,
        budget=None,
        distance_cap=None,
        load_cap=None,
        gap=0.0,
        node_limit=None,
        tie_key=None,
        load_check=True,
    ):
        self.world = world
        self.ev = evaluator
        self.params = params
        self.counts_at = counts_at
        self.budget = budget
        self.distance_cap = distance_cap
        self.load_cap = load_cap
        self.gap = gap
        self.node_limit = node_limit
        # last resort: more samples, so weightless samples are always taken
        self.tie_key = tie_key or (lambda p: (p.energy, p.distance, p.vertices, tuple(-c for c in p.counts)))
        self.load_check = load_check

        self.n = world.n
        self.t = world.target
        self.sp = world.shortest
        self.sp_to_t = self.sp[:, self.t]
        self.max_count = np.array([max(counts_at(v), default=0) for v in range(self.n)])
        self.lam = params.lam
        self.r0 = params.base_mass

        self.best = None
        self.best_key = None
        self.nodes = 0
        self.truncated = False
        self.gap_pruned_lb = math.inf

    # -- bounding -----------------------------------------------------------

    def candidate_counts(self, u, visited, energy, dist, mass, load):
        """Most samples each unvisited vertex could still receive on a completion."""
        reach = self.sp[u] + self.sp_to_t
        ok = ~visited & np.isfinite(reach)
        caps = self.max_count.copy()
        if self.budget is not None:
            slack = self.budget - (energy + mass * reach)
            ok &= slack >= -FEAS_TOL
            if self.lam > 0:
                haul = self.lam * self.sp_to_t
                with np.errstate(divide="ignore", invalid="ignore"):
                    affordable = np.floor(np.where(haul > 0, slack / haul, np.inf) + FEAS_TOL)
                affordable = np.where(ok, np.maximum(affordable, 0), 0)
                caps = np.minimum(caps, affordable).astype(int)
        if self.distance_cap is not None:
            ok &= dist + reach <= self.distance_cap + FEAS_TOL
        if self.load_cap is not None and self.lam > 0:
            room = math.floor((self.load_cap - load) / self.lam + FEAS_TOL)
            caps = np.minimum(caps, max(room, 0))
        return np.where(ok, caps, 0)

    def lower_bound(self, counts, u, visited, energy, dist, mass, load):
        extra = self.candidate_counts(u, visited, energy, dist, mass, load)
        bound = np.asarray(counts).copy()
        mask = extra > 0
        bound[mask] = extra[mask]
        return self.ev(bound)

    def _prunable(self, lb):
        if self.best is None:
            return False
        inc = self.best.objective
        if lb > inc and not _ties(lb, inc):
            return True
        if self.gap > 0 and lb >= inc * (1.0 - self.gap):
            self.gap_pruned_lb = min(self.gap_pruned_lb, lb)
            return True
        return False

    # -- search -------------------------------------------------------------

    def _offer(self, steps):
        plan = make_plan(steps, self.world, self.params, self.ev, load_check=self.load_check)
        key = self.tie_key(plan)
        if self.best is None:
            better = True
        elif _ties(plan.objective, self.best.objective):
            better = key < self.best_key
        else:
            better = plan.objective < self.best.objective
        if better:
            self.best, self.best_key = plan, key

    def _visit(self, u, steps, counts, visited, energy, dist, load):
        if self.distance_cap is not None and dist + self.sp_to_t[u] > self.distance_cap + FEAS_TOL:
            return
        for count in self.counts_at(u):
            if self.node_limit is not None and self.nodes >= self.node_limit:
                self.truncated = True
                return
            self.nodes += 1
            new_load = load + self.lam * count
            if self.load_cap is not None and new_load > self.load_cap + FEAS_TOL:
                continue
            mass = self.r0 + new_load
            steps.append((u, count))
            counts[u] = count
            if u == self.t:
                self._offer(steps)
            elif self.budget is None or energy + mass * self.sp_to_t[u] <= self.budget + FEAS_TOL:
                lb = self.lower_bound(counts, u, visited, energy, dist, mass, new_load)
                if not self._prunable(lb):
                    self._expand(u, steps, counts, visited, energy, dist, new_load, mass)
            counts[u] = 0
            steps.pop()

    def _expand(self, u, steps, counts, visited, energy, dist, load, mass):
        for v, cost in self.world.out_edges[u]:
            if visited[v]:
                continue
            e2 = energy + mass * cost
            if self.budget is not None and e2 + mass * self.sp_to_t[v] > self.budget + FEAS_TOL:
                continue
            visited[v] = True
            self._visit(v, steps, counts, visited, e2, dist + cost, load)
            visited[v] = False
            if self.truncated:
                return

    def run(self):
        s = self.world.start
        visited = np.zeros(self.n, dtype=bool)
        visited[s] = True
        counts = np.zeros(self.n, dtype=int)
        self.root_bound = self.lower_bound(
            counts, s, visited, 0.0, 0.0, self.r0, 0.0
        ) if self.n > 1 else self.ev(counts)
        start = time.perf_counter()
        self._visit(s, [], counts, visited, 0.0, 0.0, 0.0)
        elapsed = time.perf_counter() - start
        if self.truncated:
            status = NODE_LIMIT
            lb = min(self.root_bound, self.best.objective) if self.best else self.root_bound
        elif self.best is None:
            status, lb = INFEASIBLE, math.inf
        else:
            lb = min(self.best.objective, self.gap_pruned_lb)
            status = OPTIMAL if _ties(lb, self.best.objective) or lb >= self.best.objective else GAP_REACHED
        return SolveReport(self.best, lb, self.nodes, elapsed, status)


def _lipp_counts(params, strict):
    low = 1 if strict else 0
    levels = tuple(range(params.s_max, low - 1, -1))
    return lambda v: levels


def solve_exact(query: PlanQuery) -> SolveReport:
    """Minimum-posterior-variance plan under the load-dependent energy budget."""
    world, params = query.world, query.energy
    ev = VarianceEvaluator(query.field, world.positions)
    core = BranchAndBound(
        world,
        ev,
        params,
        _lipp_counts(params, query.strict_sampling),
        budget=params.budget,
        distance_cap=params.distance_cap,
        load_cap=params.l_max,
        gap=query.optimality_gap,
        node_limit=query.node_limit,
    )
    report = core.run()
    report.metadata.update(
        method="lipp",
        strict_sampling=query.strict_sampling,
        optimality_gap=query.optimality_gap,
        energy=params.to_dict(),
        prior_variance=ev.prior,
    )
    return report


def variance_lower_bound(query: PlanQuery, prefix, visited, evaluator=None):
    """Posterior variance if every vertex outside ``visited`` were sampled at S_max.

    ``prefix`` holds the ``(vertex, count)`` steps already fixed. Because extra
    samples never raise posterior variance, no completion of the prefix can
    score below this value.
    """
    ev = evaluator or VarianceEvaluator(query.field, query.world.positions)
    counts = np.zeros(query.world.n, dtype=int)
    excluded = set(int(v) for v in visited)
    for v, c in prefix:
        counts[v] = c
        excluded.add(int(v))
    for v in range(query.world.n):
        if v not in excluded:
            counts[v] = query.energy.s_max
    return ev(counts)


def simple_paths(world: World):
    """Every simple start-to-target path, as vertex tuples in DFS order."""
    t = world.target
    out = []

    def walk(path, seen):
        u = path[-1]
        if u == t:
            out.append(tuple(path))
            return
        for v, _ in world.out_edges[u]:
            if v not in seen:
                seen.add(v)
                path.append(v)
                walk(path, seen)
                path.pop()
                seen.discard(v)

    walk([world.start], {world.start})
    return out


def enumerate_bruteforce(query: PlanQuery, max_vertices: int = 8) -> SolveReport:
    """Exhaustive reference solver for small worlds.

    Enumerates all simple paths and all sample allocations. Energy is computed
    from the per-sample haul distance (``R0 * D + lam * sum l_i * remaining_i``)
    and posterior variance from the batched precision form, both independent of
    the formulas :func:`solve_exact` relies on. Ties go to the lexicographically
    smallest vertex sequence, then the most samples.
    """
    world, params = query.world, query.energy
    if world.n > max_vertices:
        raise InputError(f"brute force limited to {max_vertices} vertices, got {world.n}")
    start = time.perf_counter()
    ev = VarianceEvaluator(query.field, world.positions)
    low = 1 if query.strict_sampling else 0
    levels = np.arange(low, params.s_max + 1)
    radix = params.s_max + 1
    tables = {}
    best = None
    examined = 0

    def table_for(subset):
        if subset not in tables:
            grid = np.array(list(itertools.product(range(radix), repeat=len(subset))))
            counts = np.zeros((len(grid), world.n))
            counts[:, list(subset)] = grid
            tables[subset] = ev.batch(counts)
        return tables[subset]

    for path in simple_paths(world):
        legs = np.array([world.cost[(a, b)] for a, b in zip(path, path[1:])])
        dist = float(legs.sum())
        if params.distance_cap is not None and dist > params.distance_cap + FEAS_TOL:
            continue
        remaining = np.append(np.cumsum(legs[::-1])[::-1], 0.0)
        alloc = np.array(list(itertools.product(levels, repeat=len(path))))
        examined += len(alloc)
        energy = params.base_mass * dist + params.lam * alloc @ remaining
        carried = params.lam * alloc.sum(axis=1)
        ok = energy <= params.budget + FEAS_TOL
        if params.l_max is not None:
            ok &= carried <= params.l_max + FEAS_TOL
        if not ok.any():
            continue
        subset = tuple(sorted(path))
        pos = np.array([subset.index(v) for v in path])
        index = alloc @ (radix ** (len(subset) - 1 - pos))
        values = table_for(subset)[index]
        values = np.where(ok, values, np.inf)
        i_best = int(np.argmin(values))
        obj = float(values[i_best])
        ties = np.flatnonzero(np.abs(values - obj) <= TIE_TOL * max(1.0, abs(obj)))
        i_best = int(ties[np.argmax(alloc[ties].sum(axis=1))])
        key = (path, -int(alloc[i_best].sum()))
        cand = (obj, key, path, alloc[i_best], float(energy[i_best]), dist)
        if best is None or (obj < best[0] and not _ties(obj, best[0])):
            best = cand
        elif _ties(obj, best[0]) and key < best[1]:
            best = cand
    elapsed = time.perf_counter() - start
    meta = {"method": "bruteforce", "allocations_examined": examined}
    if best is None:
        return SolveReport(None, math.inf, examined, elapsed, INFEASIBLE, meta)
    obj, _, path, alloc, energy, dist = best
    plan = Plan(tuple(zip(path, alloc.tolist())), obj, energy, dist)
    return SolveReport(plan, obj, examined, elapsed, OPTIMAL, meta)


@dataclass(frozen=True)
class BoundCheck:
    ratio: float
    bound: float
    premises_hold: bool
    violated: bool
    equal_length: bool
    # energy/distance premises only, ignoring the >= 1 sample per vertex one
    violated_without_sampling_premise: bool = False

    def to_dict(self):
        return {
            "ratio": self.ratio,
            "bound": self.bound,
            "premises_hold": self.premises_hold,
            "violated": self.violated,
            "equal_length": self.equal_length,
            "violated_without_sampling_premise": self.violated_without_sampling_premise,
        }


def distance_bound(plan_e: Plan, plan_d: Plan, params: EnergyParams) -> BoundCheck:
    """Audit the worst-case path-length ratio of a load-aware plan.

    ``plan_e`` is the energy-budgeted plan, ``plan_d`` the distance-optimal
    one. The bound ``S_max (R0 + lam p_D / 2) / (R0 + lam p_E / 2)`` is only
    claimed when ``E(P_E) <= E(P_D)``, ``D(P_D) <= D(P_E)`` and every vertex
    of ``plan_e`` takes at least one sample (its derivation lower-bounds the
    mass after ``j`` vertices by ``R0 + lam j``).
    """
    if plan_d.distance <= 0:
        raise InputError("reference plan has zero length")
    p_e, p_d = len(plan_e.steps), len(plan_d.steps)
    r0, lam = params.base_mass, params.lam
    ratio = plan_e.distance / plan_d.distance
    bound = params.s_max * (r0 + lam * p_d / 2.0) / (r0 + lam * p_e / 2.0)
    budget_premises = (
        plan_e.energy <= plan_d.energy + FEAS_TOL
        and plan_d.distance <= plan_e.distance + FEAS_TOL
    )
    premises = budget_premises and min(plan_e.counts) >= 1
    exceeded = ratio > bound + 1e-9
    return BoundCheck(
        ratio, bound, premises, premises and exceeded, p_e == p_d,
        budget_premises and exceeded,
    )
