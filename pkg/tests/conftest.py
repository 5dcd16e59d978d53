import math
from pathlib import Path

import numpy as np
import pytest

from lipp.gp_field import FieldModel, Kernel
from lipp.graph_world import EnergyParams, Vertex, World

FIXTURES = Path(__file__).parent / "fixtures"

# filled by test_acceptance, printed at the end of the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


def oracle_posterior_variance(signal, lengthscale, noise, vertices, tests, counts, weights=None):
    """Textbook GP predictive variance, written out with explicit loops."""
    sampled = [i for i, c in enumerate(counts) if c > 0]
    weights = [1.0] * len(tests) if weights is None else weights

    def k(a, b):
        d2 = (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2
        return signal * math.exp(-d2 / (2 * lengthscale**2))

    total = 0.0
    for w, x in zip(weights, tests):
        prior = k(x, x)
        if sampled:
            K = np.array([[k(vertices[i], vertices[j]) for j in sampled] for i in sampled])
            K += np.diag([noise / counts[i] for i in sampled])
            kx = np.array([k(x, vertices[i]) for i in sampled])
            prior -= kx @ np.linalg.solve(K, kx)
        total += w * prior
    return total


def line_world(costs, positions=None):
    """Chain 0 -> 1 -> ... -> n-1 with the given edge costs."""
    n = len(costs) + 1
    positions = positions or [(float(i), 0.0) for i in range(n)]
    verts = [Vertex(i, *positions[i]) for i in range(n)]
    edges = [(i, i + 1, c) for i, c in enumerate(costs)]
    return World(verts, edges, 0, n - 1)


@pytest.fixture
def two_vertex():
    world = line_world([1.0])
    field = FieldModel(Kernel(1.0, 1.0), 1.0, [(0.0, 0.0), (1.0, 0.0)])
    return world, field


@pytest.fixture
def unit_params():
    return EnergyParams(lam=1.0, base_mass=1.0, s_max=3, budget=10.0)
