"""Comparison planners: distance-budgeted exact IPP and a myopic greedy walk."""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .gp_field import FieldModel, VarianceEvaluator
from .graph_world import EnergyParams, World, make_plan
from .solver import INFEASIBLE, BranchAndBound, SolveReport

DISTANCE_MODE = "distance-budget"
ENERGY_MODE = "energy-budget"
HEURISTIC = "heuristic"


@dataclass(frozen=True)
class CippQuery:
    world: World
    field: FieldModel
    distance_budget: float
    samples_per_vertex: int = 3
    # only used to report energy after the fact
    energy: EnergyParams | None = None
    optimality_gap: float = 0.0
    node_limit: int | None = None

    def __post_init__(self):
        if not self.distance_budget > 0:
            raise InputError("distance_budget must be > 0")
        if self.samples_per_vertex < 1:
            raise InputError("samples_per_vertex must be >= 1")
        if self.energy is not None and self.samples_per_vertex > self.energy.s_max:
            raise InputError("samples_per_vertex exceeds S_max")


def solve_cipp(query: CippQuery) -> SolveReport:
    """Exact classical IPP: shortest-budget path, every visited vertex sampled ``S`` times.

    Energy never constrains the search; it is evaluated on the final plan with
    ``query.energy`` (``lambda = 0`` if absent) so results can be compared with
    the load-aware planner.
    """
    S = query.samples_per_vertex
    params = query.energy or EnergyParams(lam=0.0, s_max=S)
    ev = VarianceEvaluator(query.field, query.world.positions)
    core = BranchAndBound(
        query.world,
        ev,
        params,
        lambda v: (S,),
        distance_cap=query.distance_budget,
        gap=query.optimality_gap,
        node_limit=query.node_limit,
        tie_key=lambda p: (p.distance, p.vertices),
        load_check=False,
    )
    report = core.run()
    report.metadata.update(
        method=f"cipp_S{S}",
        distance_budget=query.distance_budget,
        samples_per_vertex=S,
        energy=params.to_dict(),
        prior_variance=ev.prior,
    )
    return report


@dataclass(frozen=True)
class GreedyQuery:
    world: World
    field: FieldModel
    energy: EnergyParams
    mode: str = DISTANCE_MODE
    # defaults to energy.distance_cap, then energy.budget
    distance_budget: float | None = None

    def __post_init__(self):
        if self.mode not in (DISTANCE_MODE, ENERGY_MODE):
            raise InputError(f"unknown greedy mode {self.mode!r}")
        if self.budget <= 0:
            raise InputError("greedy budget must be positive")

    @property
    def budget(self):
        if self.mode == ENERGY_MODE:
            return self.energy.budget
        if self.distance_budget is not None:
            return self.distance_budget
        return self.energy.distance_cap or self.energy.budget


def _dijkstra(world, src, blocked):
    """Costs and predecessors from ``src`` avoiding ``blocked`` vertices."""
    dist = np.full(world.n, np.inf)
    pred = [-1] * world.n
    dist[src] = 0.0
    heap = [(0.0, src)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, c in world.out_edges[u]:
            if v in blocked:
                continue
            if d + c < dist[v]:
                dist[v] = d + c
                pred[v] = u
                heapq.heappush(heap, (d + c, v))
    return dist, pred


def _route(pred, src, dst):
    hops = [dst]
    while hops[-1] != src:
        hops.append(pred[hops[-1]])
    return hops[::-1][1:]


def solve_greedy(query: GreedyQuery) -> SolveReport:
    """Repeatedly hop to the vertex with the best variance drop per unit distance.

    Each chosen vertex is sampled ``S_max`` times; vertices passed through on
    the way (shortest route over unvisited vertices) take no samples. A hop is
    only admissible if the target stays reachable within the remaining budget.
    """
    world, params = query.world, query.energy
    S, lam, r0 = params.s_max, params.lam, params.base_mass
    energy_mode = query.mode == ENERGY_MODE
    budget = query.budget
    l_cap = params.l_max
    ev = VarianceEvaluator(query.field, world.positions)
    s, t = world.start, world.target
    start = time.perf_counter()
    meta = {"method": f"greedy_{'energy' if energy_mode else 'distance'}", "budget": budget}

    def spend(mass, length):
        return mass * length if energy_mode else length

    def load_ok(load):
        return l_cap is None or load <= l_cap + 1e-9

    base = world.shortest[s, t]
    first = S
    if energy_mode:
        while first > 0 and ((r0 + lam * first) * base > budget + 1e-9 or not load_ok(lam * first)):
            first -= 1
    if spend(r0 + lam * first, base) > budget + 1e-9:
        return SolveReport(None, math.inf, 0, time.perf_counter() - start, INFEASIBLE, meta)

    counts = np.zeros(world.n, dtype=int)
    counts[s] = first
    steps = [(s, first)]
    visited = {s}
    used = 0.0
    load = lam * first
    hops = 0
    while True:
        cur = steps[-1][0]
        mass = r0 + load
        reach, pred = _dijkstra(world, cur, visited - {cur})
        current = ev(counts)
        best = None
        for v in range(world.n):
            if v in visited or v == t or not np.isfinite(reach[v]):
                continue
            if not load_ok(load + lam * S):
                continue
            path = _route(pred, cur, v)
            if t in path:
                continue
            onward, _ = _dijkstra(world, v, visited | set(path[:-1]))
            if not np.isfinite(onward[t]):
                continue
            cost = used + spend(mass, reach[v]) + spend(mass + lam * S, onward[t])
            if cost > budget + 1e-9:
                continue
            trial = counts.copy()
            trial[v] = S
            score = (current - ev(trial)) / reach[v]
            if best is None or score > best[0]:
                best = (score, v, path)
        if best is None:
            break
        _, v, path = best
        used += spend(mass, reach[v])
        for w in path[:-1]:
            steps.append((w, 0))
            visited.add(w)
        steps.append((v, S))
        visited.add(v)
        counts[v] = S
        load += lam * S
        hops += 1

    cur = steps[-1][0]
    reach, pred = _dijkstra(world, cur, visited - {cur})
    for w in _route(pred, cur, t)[:-1]:
        steps.append((w, 0))
    last = S
    while last > 0 and not load_ok(load + lam * last):
        last -= 1
    steps.append((t, last))
    plan = make_plan(steps, world, params, ev, load_check=False)
    meta.update(hops=hops, prior_variance=ev.prior)
    lb = ev(np.full(world.n, S))
    return SolveReport(plan, lb, hops, time.perf_counter() - start, HEURISTIC, meta)
