import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import line_world
from lipp.errors import InfeasiblePlanError, InputError, ScenarioError
from lipp.gp_field import FieldModel, Kernel, VarianceEvaluator
from lipp.graph_world import (
    SCHEMA_VERSION,
    EnergyParams,
    Plan,
    Scenario,
    Vertex,
    World,
    all_pairs_cost_lower_bounds,
    load_profile,
    make_plan,
    path_distance,
    path_energy,
    terrain_cost,
)
from lipp.scenarios import ScenarioSpec, make_scenario


def test_terrain_cost_hand_values():
    assert terrain_cost(Vertex(0, 0, 0, 1.0), Vertex(1, 3, 0, 1.0), 0.9) == pytest.approx(3.0)
    assert terrain_cost(Vertex(0, 0, 0, 0.0), Vertex(1, 2, 0, 1.0), 0.5) == pytest.approx(3.0)
    assert terrain_cost(Vertex(0, 0, 0, 1.0), Vertex(1, 2, 0, 0.0), 0.5) == pytest.approx(1.0)


def test_terrain_cost_nonpositive_is_error():
    with pytest.raises(ScenarioError):
        terrain_cost(Vertex(0, 0, 0, 2.0), Vertex(1, 1, 0, 0.0), 0.5)


def test_world_validation():
    v = [Vertex(0, 0, 0), Vertex(1, 1, 0), Vertex(2, 2, 0)]
    with pytest.raises(InputError):
        World(v, [(0, 0, 1.0), (0, 2, 1.0)], 0, 2)
    with pytest.raises(InputError):
        World(v, [(0, 1, -1.0), (1, 2, 1.0)], 0, 2)
    with pytest.raises(InputError):
        World(v, [(0, 1, 1.0)], 0, 2)
    with pytest.raises(InputError):
        World(v, [(0, 1, 1.0)], 1, 1)


def test_load_profile_hand_values():
    params = EnergyParams(lam=1.0, base_mass=1.0)
    assert [r for _, r in load_profile([(0, 0), (1, 2), (2, 1)], params)] == [1.0, 3.0, 4.0]
    assert [r for _, r in load_profile([(0, 0), (1, 0)], params)] == [1.0, 1.0]
    massless = params.replace(lam=0.0)
    assert [r for _, r in load_profile([(0, 3), (1, 2)], massless)] == [1.0, 1.0]


def test_load_cap_exceeded():
    params = EnergyParams(lam=1.0, s_max=3, l_max=3.0)
    with pytest.raises(InfeasiblePlanError):
        load_profile([(0, 2), (1, 2)], params)


def test_path_energy_hand_value():
    world = line_world([1.0, 1.0])
    params = EnergyParams(lam=1.0, base_mass=1.0)
    assert path_energy([(0, 0), (1, 2), (2, 0)], world, params) == pytest.approx(4.0)


def test_path_energy_scales_with_costs_and_reduces_to_distance():
    steps = [(0, 1), (1, 3), (2, 2)]
    params = EnergyParams(lam=0.7, base_mass=1.0)
    e1 = path_energy(steps, line_world([0.4, 1.1]), params)
    e2 = path_energy(steps, line_world([0.8, 2.2]), params)
    assert e2 == pytest.approx(2 * e1)
    world = line_world([0.4, 1.1])
    flat = params.replace(lam=0.0)
    assert path_energy(steps, world, flat) == pytest.approx(path_distance(steps, world))


def test_path_energy_missing_edge():
    with pytest.raises(InputError):
        path_energy([(0, 0), (2, 0)], line_world([1.0, 1.0]), EnergyParams(lam=1.0))


def test_path_distance_single_edge():
    assert path_distance([(0, 3), (1, 1)], line_world([2.5])) == 2.5


def test_shortest_paths():
    v = [Vertex(i, i, 0) for i in range(3)]
    tri = World(v, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 3.0)], 0, 2)
    sp = all_pairs_cost_lower_bounds(tri)
    assert np.all(np.diag(sp) == 0)
    assert sp[0, 2] == 2.0
    assert all_pairs_cost_lower_bounds(line_world([3.0]))[0, 1] == 3.0


def test_plan_check_and_round_trip():
    world = line_world([1.0, 2.0])
    fm = FieldModel(Kernel(), 1.0, [(0.0, 0.0)])
    params = EnergyParams(lam=0.5)
    plan = make_plan([(0, 1), (1, 0), (2, 2)], world, params, VarianceEvaluator(fm, world.positions))
    plan.check(world, params)
    assert Plan.from_dict(json.loads(json.dumps(plan.to_dict()))) == plan
    broken = Plan(plan.steps, plan.objective, plan.energy + 1, plan.distance)
    with pytest.raises(InputError):
        broken.check(world, params)
    with pytest.raises(InputError):
        Plan(((0, 1), (0, 1)), 0.0, 0.0, 0.0).check(world)


def test_scenario_json_round_trip(tmp_path):
    sc = make_scenario(ScenarioSpec(n=6, seed=4))
    path = sc.save(tmp_path / "s.json")
    again = Scenario.load(path)
    assert again.dumps() == sc.dumps()
    data = json.loads(sc.dumps())
    assert data["schema_version"] == SCHEMA_VERSION
    data["schema_version"] = SCHEMA_VERSION + 1
    with pytest.raises(InputError):
        Scenario.from_dict(data)


def test_scenario_missing_costs_use_terrain():
    sc = make_scenario(ScenarioSpec(n=5, seed=1))
    data = json.loads(sc.dumps())
    for e in data["edges"]:
        e.pop("cost")
    again = Scenario.from_dict(data)
    for (u, v, c), (_, _, c2) in zip(sc.world.edges, again.world.edges):
        assert c2 == pytest.approx(c)


counts3 = st.lists(st.integers(0, 3), min_size=4, max_size=4)
costs3 = st.lists(st.floats(0.05, 3.0), min_size=3, max_size=3)


@given(costs3, counts3, st.floats(0.0, 2.0), st.floats(0.2, 3.0))
def test_energy_dominates_base_mass_distance(costs, counts, lam, r0):
    world = line_world(costs)
    params = EnergyParams(lam=lam, base_mass=r0)
    steps = list(enumerate(counts))
    energy = path_energy(steps, world, params)
    dist = path_distance(steps, world)
    assert energy >= r0 * dist - 1e-9
    carried = lam * sum(counts[:-1]) > 0
    assert (energy > r0 * dist + 1e-12) == carried or abs(energy - r0 * dist) < 1e-9


@given(costs3, counts3, st.floats(0.0, 2.0))
def test_mass_nondecreasing(costs, counts, lam):
    profile = load_profile(list(enumerate(counts)), EnergyParams(lam=lam))
    masses = [r for _, r in profile]
    assert masses == sorted(masses)


@settings(max_examples=50)
@given(costs3, counts3, st.floats(0.01, 2.0))
def test_later_samples_never_cost_more(costs, counts, lam):
    # every permutation of the count vector, compared with its fully back-loaded ordering
    world = line_world(costs)
    params = EnergyParams(lam=lam)
    latest = path_energy(list(enumerate(sorted(counts))), world, params)
    for perm in set(itertools.permutations(counts)):
        assert latest <= path_energy(list(enumerate(perm)), world, params) + 1e-9
