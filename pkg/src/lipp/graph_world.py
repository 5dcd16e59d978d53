"""Mission environment: sampling graph, terrain costs and load/energy accounting."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .errors import InfeasiblePlanError, InputError, ScenarioError
from .gp_field import FieldModel, Kernel

SCHEMA_VERSION = 1
TOL = 1e-9


@dataclass(frozen=True)
class Vertex:
    id: int
    x: float
    y: float
    height: float = 0.0

    @property
    def position(self):
        return (self.x, self.y)


def terrain_cost(u: Vertex, v: Vertex, alpha: float) -> float:
    """Euclidean distance scaled by ``1 + alpha * (height_v - height_u)``."""
    d = math.hypot(v.x - u.x, v.y - u.y)
    cost = d * (1.0 + alpha * (v.height - u.height))
    if not (math.isfinite(cost) and cost > 0):
        raise ScenarioError(
            f"terrain cost {u.id}->{v.id} is {cost}; reduce alpha or height range"
        )
    return cost


@dataclass(frozen=True)
class World:
    """Directed weighted graph of sampling vertices with start and target."""

    vertices: tuple
    edges: tuple
    start: int
    target: int
    test_points: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(
            self, "edges", tuple((int(u), int(v), float(c)) for u, v, c in self.edges)
        )
        object.__setattr__(self, "test_points", tuple(tuple(p) for p in self.test_points))
        n = len(self.vertices)
        if [v.id for v in self.vertices] != list(range(n)):
            raise InputError("vertex ids must be dense 0..n-1 in order")
        seen = set()
        for u, v, c in self.edges:
            if not (0 <= u < n and 0 <= v < n):
                raise InputError(f"edge ({u}, {v}) refers to an unknown vertex")
            if u == v:
                raise InputError(f"self-loop at vertex {u}")
            if not (math.isfinite(c) and c > 0):
                raise InputError(f"edge ({u}, {v}) has nonpositive cost {c}")
            if (u, v) in seen:
                raise InputError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))
        if self.start == self.target:
            raise InputError("start and target must differ")
        for name in ("start", "target"):
            if not 0 <= getattr(self, name) < n:
                raise InputError(f"{name} is not a valid vertex id")
        if not np.isfinite(self.shortest[self.start, self.target]):
            raise InputError("target is not reachable from start")

    @property
    def n(self):
        return len(self.vertices)

    @cached_property
    def positions(self):
        return np.array([v.position for v in self.vertices], dtype=float)

    @cached_property
    def cost(self):
        """``{(u, v): d_uv}`` lookup."""
        return {(u, v): c for u, v, c in self.edges}

    @cached_property
    def out_edges(self):
        """Per-vertex outgoing ``(v, cost)`` lists, cheapest first."""
        out = [[] for _ in range(self.n)]
        for u, v, c in self.edges:
            out[u].append((v, c))
        return tuple(tuple(sorted(lst, key=lambda e: (e[1], e[0]))) for lst in out)

    @cached_property
    def shortest(self):
        return all_pairs_cost_lower_bounds(self)

    def edge_cost(self, u, v):
        try:
            return self.cost[(u, v)]
        except KeyError:
            raise InputError(f"no edge {u}->{v}") from None


def all_pairs_cost_lower_bounds(world: World):
    """Shortest-path cost between every ordered vertex pair (``inf`` if none)."""
    dense = np.full((world.n, world.n), np.inf)
    for u, v, c in world.edges:
        dense[u, v] = c
    np.fill_diagonal(dense, 0.0)
    return shortest_path(dense, method="FW", directed=True)


@dataclass(frozen=True)
class EnergyParams:
    lam: float
    base_mass: float = 1.0
    s_max: int = 3
    l_max: float | None = None
    budget: float = 2.0
    distance_cap: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise InputError("lambda must be finite and >= 0")
        if not self.base_mass > 0:
            raise InputError("base_mass must be > 0")
        if int(self.s_max) != self.s_max or self.s_max < 1:
            raise InputError("s_max must be an integer >= 1")
        object.__setattr__(self, "s_max", int(self.s_max))
        if self.l_max is not None:
            if not self.l_max > 0:
                raise InputError("l_max must be > 0")
            # one fully sampled vertex must always be carryable
            if self.l_max < self.lam * self.s_max - TOL:
                raise InputError("l_max must be at least lambda * s_max")
        if not self.budget > 0:
            raise InputError("budget must be > 0")
        if self.distance_cap is not None and not self.distance_cap > 0:
            raise InputError("distance_cap must be > 0 when given")

    def load_cap(self, n):
        """``L_max``, or the heaviest load ``n`` vertices can produce when unset."""
        if self.l_max is not None:
            return float(self.l_max)
        return self.lam * self.s_max * n

    def r_max(self, n):
        return self.base_mass + self.load_cap(n)

    def replace(self, **changes):
        data = {k: getattr(self, k) for k in self.__dataclass_fields__}
        data.update(changes)
        return EnergyParams(**data)

    def to_dict(self):
        return {
            "lambda": self.lam,
            "base_mass": self.base_mass,
            "s_max": self.s_max,
            "l_max": self.l_max,
            "budget": self.budget,
            "distance_cap": self.distance_cap,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            lam=float(data["lambda"]),
            base_mass=float(data.get("base_mass", 1.0)),
            s_max=int(data.get("s_max", 3)),
            l_max=data.get("l_max"),
            budget=float(data.get("budget", 2.0)),
            distance_cap=data.get("distance_cap"),
        )


def load_profile(steps, params: EnergyParams, check=True):
    """Carried load ``L`` and total mass ``R`` after sampling at each step."""
    out = []
    load = 0.0
    for _, count in steps:
        if not 0 <= count <= params.s_max:
            raise InputError(f"sample count {count} outside [0, {params.s_max}]")
        load += params.lam * count
        if check and params.l_max is not None and load > params.l_max + TOL:
            raise InfeasiblePlanError(f"load {load} exceeds L_max={params.l_max}")
        out.append((load, params.base_mass + load))
    return out


def path_distance(steps, world: World):
    return float(sum(world.edge_cost(u, v) for (u, _), (v, _) in zip(steps, steps[1:])))


def path_energy(steps, world: World, params: EnergyParams, check=True):
    """Sum of edge cost times the mass carried when leaving the edge's source."""
    profile = load_profile(steps, params, check=check)
    total = 0.0
    for j in range(len(steps) - 1):
        total += world.edge_cost(steps[j][0], steps[j + 1][0]) * profile[j][1]
    return float(total)


@dataclass(frozen=True)
class Plan:
    """Ordered ``(vertex, samples)`` visits plus their evaluated metrics."""

    steps: tuple
    objective: float
    energy: float
    distance: float

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple((int(v), int(c)) for v, c in self.steps))

    @property
    def vertices(self):
        return tuple(v for v, _ in self.steps)

    @property
    def counts(self):
        return tuple(c for _, c in self.steps)

    @property
    def total_samples(self):
        return sum(self.counts)

    def allocation(self):
        return {v: c for v, c in self.steps if c > 0}

    def count_vector(self, n):
        vec = [0] * n
        for v, c in self.steps:
            vec[v] = c
        return vec

    def check(self, world: World, params: EnergyParams | None = None, load_check=True):
        """Raise if the plan is not a simple start-to-target path or its metrics drifted."""
        verts = self.vertices
        if not verts or verts[0] != world.start or verts[-1] != world.target:
            raise InputError("plan must start at s and end at t")
        if len(set(verts)) != len(verts):
            raise InputError("plan revisits a vertex")
        dist = path_distance(self.steps, world)
        if abs(dist - self.distance) > TOL * max(1.0, dist):
            raise InputError(f"stored distance {self.distance} != {dist}")
        if params is not None:
            energy = path_energy(self.steps, world, params, check=load_check)
            if abs(energy - self.energy) > TOL * max(1.0, energy):
                raise InputError(f"stored energy {self.energy} != {energy}")

    def to_dict(self):
        return {
            "steps": [list(s) for s in self.steps],
            "objective": self.objective,
            "energy": self.energy,
            "distance": self.distance,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            tuple(tuple(s) for s in data["steps"]),
            float(data["objective"]),
            float(data["energy"]),
            float(data["distance"]),
        )


def make_plan(steps, world, params, evaluator, load_check=True):
    """Build a :class:`Plan`, evaluating objective, energy and distance."""
    steps = tuple((int(v), int(c)) for v, c in steps)
    counts = [0] * world.n
    for v, c in steps:
        counts[v] = c
    return Plan(
        steps,
        evaluator(counts),
        path_energy(steps, world, params, check=load_check),
        path_distance(steps, world),
    )


@dataclass(frozen=True)
class Scenario:
    """A world together with its field model and energy parameters."""

    world: World
    field: FieldModel
    energy: EnergyParams
    alpha: float = 0.0
    seed: int | None = None
    metadata: dict = field(default_factory=dict, compare=False)

    def to_dict(self):
        w = self.world
        return {
            "schema_version": SCHEMA_VERSION,
            "seed": self.seed,
            "alpha": self.alpha,
            "start": w.start,
            "target": w.target,
            "vertices": [
                {"id": v.id, "x": v.x, "y": v.y, "height": v.height} for v in w.vertices
            ],
            "edges": [{"u": u, "v": v, "cost": c} for u, v, c in w.edges],
            "test_points": [
                {"x": x, "y": y, "weight": wt}
                for (x, y), wt in zip(self.field.test_points, self.field.test_weights)
            ],
            "kernel": {
                "signal_variance": self.field.kernel.signal_variance,
                "lengthscale": self.field.kernel.lengthscale,
            },
            "noise_variance": self.field.noise_variance,
            "energy": self.energy.to_dict(),
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data):
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise InputError(
                f"scenario schema_version {version!r} not supported (expected {SCHEMA_VERSION})"
            )
        try:
            alpha = float(data.get("alpha", 0.0))
            verts = tuple(
                Vertex(int(v["id"]), float(v["x"]), float(v["y"]), float(v.get("height", 0.0)))
                for v in sorted(data["vertices"], key=lambda v: int(v["id"]))
            )
            edges = []
            for e in data["edges"]:
                u, v = int(e["u"]), int(e["v"])
                if not (0 <= u < len(verts) and 0 <= v < len(verts)):
                    raise InputError(f"edge ({u}, {v}) refers to an unknown vertex")
                cost = e.get("cost")
                if cost is None:
                    cost = terrain_cost(verts[u], verts[v], alpha)
                edges.append((u, v, float(cost)))
            tests = data["test_points"]
            pts = tuple((float(p["x"]), float(p["y"])) for p in tests)
            weights = tuple(float(p.get("weight", 1.0)) for p in tests)
            kern = data.get("kernel", {})
            fm = FieldModel(
                Kernel(
                    float(kern.get("signal_variance", 1.0)),
                    float(kern.get("lengthscale", 1.0)),
                ),
                float(data["noise_variance"]),
                pts,
                weights,
            )
            world = World(verts, tuple(edges), int(data["start"]), int(data["target"]), pts)
            energy = EnergyParams.from_dict(data["energy"])
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed scenario: {exc}") from exc
        return cls(world, fm, energy, alpha, data.get("seed"), dict(data.get("metadata", {})))

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def save(self, path):
        Path(path).write_text(self.dumps(), encoding="utf-8")
        return Path(path)

    @classmethod
    def load(cls, path):
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(data)

    def with_energy(self, **changes):
        return Scenario(
            self.world, self.field, self.energy.replace(**changes), self.alpha,
            self.seed, self.metadata,
        )
