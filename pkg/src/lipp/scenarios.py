"""Random mission generator for the experiment harness."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import InputError, ScenarioError
from .gp_field import FieldModel, Kernel
from .graph_world import EnergyParams, Scenario, Vertex, World, terrain_cost


@dataclass(frozen=True)
class ScenarioSpec:
    n: int = 8
    density: float = 0.4
    seed: int = 0
    area: float = 1.0
    height_amplitude: float = 1.0
    alpha: float = 0.2
    signal_variance: float = 1.0
    lengthscale: float = 0.25
    noise_variance: float = 1.0
    test_point_count: int = 8

    def __post_init__(self):
        if self.n < 3:
            raise InputError("scenarios need at least 3 vertices")
        if not 0 < self.density <= 1:
            raise InputError("density must lie in (0, 1]")
        if self.area <= 0 or self.test_point_count < 1:
            raise InputError("area and test_point_count must be positive")
        if abs(self.alpha) * self.height_amplitude >= 1:
            # keeps every terrain cost strictly positive
            raise InputError("|alpha| * height_amplitude must be < 1")

    def replace(self, **changes):
        data = asdict(self)
        data.update(changes)
        return ScenarioSpec(**data)


def _smooth_heights(rng, xy, area, amplitude, waves=3):
    """Sum of a few long-wavelength plane waves, rescaled to ``[0, amplitude]``."""
    freq = rng.uniform(-1.5, 1.5, size=(waves, 2)) * (2 * np.pi / area)
    phase = rng.uniform(0, 2 * np.pi, size=waves)
    raw = np.cos(xy @ freq.T + phase).sum(axis=1)
    span = raw.max() - raw.min()
    if span <= 0:
        return np.zeros(len(xy))
    return amplitude * (raw - raw.min()) / span


def _reachable(n, edges, src):
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
    seen = {src}
    stack = [src]
    while stack:
        for v in adj[stack.pop()]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def _layout(spec):
    rng = np.random.default_rng(spec.seed)
    xy = rng.uniform(0, spec.area, size=(spec.n, 2))
    heights = _smooth_heights(rng, xy, spec.area, spec.height_amplitude)
    mask = rng.random((spec.n, spec.n)) < spec.density
    np.fill_diagonal(mask, False)
    tests = rng.uniform(0, spec.area, size=(spec.test_point_count, 2))
    return xy, heights, mask, tests


def generate_scenario(spec: ScenarioSpec):
    """Build ``(World, FieldModel)`` deterministically from ``spec``."""
    world, field, _ = generate_with_metadata(spec)
    return world, field


def generate_with_metadata(spec: ScenarioSpec):
    """As :func:`generate_scenario`, plus a metadata dict.

    Vertices are uniform in the square, start/target are the farthest-apart
    pair, and ordered pairs become edges with probability ``density``. If the
    target is unreachable, the cheapest bridging edges (reachable -> unreachable,
    closest pair first) are added until it is; these are listed in the metadata.
    """
    xy, heights, mask, tests = _layout(spec)
    n = spec.n
    verts = tuple(Vertex(i, float(x), float(y), float(h)) for i, ((x, y), h) in enumerate(zip(xy, heights)))
    gap = np.linalg.norm(xy[:, None] - xy[None], axis=-1)
    s, t = np.unravel_index(np.argmax(gap), gap.shape)
    s, t = int(min(s, t)), int(max(s, t))
    pairs = [(int(u), int(v)) for u, v in zip(*np.nonzero(mask))]
    sampled = len(pairs)
    repaired = []
    while t not in (reach := _reachable(n, pairs, s)):
        inside = sorted(reach)
        outside = [v for v in range(n) if v not in reach]
        u, v = min(((a, b) for a in inside for b in outside), key=lambda p: (gap[p], p))
        pairs.append((u, v))
        repaired.append([u, v])
        if len(repaired) > n:
            raise ScenarioError("could not connect start to target")
    pairs.sort()
    edges = tuple((u, v, terrain_cost(verts[u], verts[v], spec.alpha)) for u, v in pairs)
    pts = tuple(map(tuple, tests.tolist()))
    world = World(verts, edges, s, t, pts)
    field = FieldModel(Kernel(spec.signal_variance, spec.lengthscale), spec.noise_variance, pts)
    meta = {"generator": asdict(spec), "edges_sampled": sampled, "repaired_edges": repaired}
    return world, field, meta


def make_scenario(spec: ScenarioSpec, energy: EnergyParams | None = None) -> Scenario:
    world, field, meta = generate_with_metadata(spec)
    energy = energy or EnergyParams(lam=1.0, base_mass=1.0, s_max=3, budget=2.0)
    return Scenario(world, field, energy, spec.alpha, spec.seed, meta)
