import json
import math
import statistics

import pytest

from lipp.errors import InputError
from lipp.experiments import (
    COLUMNS,
    bound_audit,
    budget_sweep,
    desk_specs,
    deterministic_view,
    equal_length_audit,
    lambda_sweep,
    mean_of,
    median_times,
    read_csv,
    runtime_profile,
    summarize,
    write_csv,
    write_summary,
)
from lipp.graph_world import all_pairs_cost_lower_bounds
from lipp.scenarios import ScenarioSpec, generate_scenario, generate_with_metadata, make_scenario


def test_same_seed_same_json():
    assert make_scenario(ScenarioSpec(seed=7)).dumps() == make_scenario(ScenarioSpec(seed=7)).dumps()
    assert make_scenario(ScenarioSpec(seed=7)).dumps() != make_scenario(ScenarioSpec(seed=8)).dumps()


def test_full_density_is_complete():
    world, _ = generate_scenario(ScenarioSpec(n=6, density=1.0, seed=1))
    assert len(world.edges) == 30


def test_sparse_edge_count_matches_binomial_mean():
    counts = [generate_with_metadata(ScenarioSpec(n=10, density=0.15, seed=s))[2]["edges_sampled"]
              for s in range(400)]
    # 90 ordered pairs at 15%: mean 13.5, standard error about 0.17 over 400 seeds
    assert statistics.fmean(counts) == pytest.approx(13.5, abs=0.6)


def test_generated_worlds_reach_target():
    repaired = 0
    for seed in range(60):
        world, _, meta = generate_with_metadata(ScenarioSpec(n=8, density=0.1, seed=seed))
        assert math.isfinite(all_pairs_cost_lower_bounds(world)[world.start, world.target])
        repaired += bool(meta["repaired_edges"])
    assert repaired > 0


def test_spec_validation():
    with pytest.raises(InputError):
        ScenarioSpec(n=2)
    with pytest.raises(InputError):
        ScenarioSpec(density=0.0)
    with pytest.raises(InputError):
        ScenarioSpec(alpha=1.0, height_amplitude=1.0)


@pytest.fixture(scope="module")
def small_sweep():
    return lambda_sweep(desk_specs(6), lams=(0.0, 0.5, 1.0))


def test_sweep_is_deterministic(small_sweep):
    again = lambda_sweep(desk_specs(6), lams=(0.0, 0.5, 1.0), workers=2)
    assert deterministic_view(again) == deterministic_view(small_sweep)


def test_sweep_rows_are_sane(small_sweep):
    methods = {r.method for r in small_sweep}
    assert methods == {"lipp", "cipp_S1", "cipp_S2", "cipp_S3", "greedy_S3"}
    for r in small_sweep:
        if not math.isnan(r.objective):
            assert r.variance_reduction >= -1e-12
            assert math.isfinite(r.efficiency)
        if r.method == "lipp":
            assert r.energy <= 2.0 + 1e-9


def test_cipp_reduction_flat_in_lambda(small_sweep):
    for seed in range(6):
        values = {r.variance_reduction for r in small_sweep if r.seed == seed and r.method == "cipp_S3"}
        assert len(values) == 1


def test_sweep_needs_zero_lambda():
    with pytest.raises(ValueError):
        lambda_sweep(desk_specs(1), lams=(0.5,))


def test_budget_sweep_respects_fractional_budget():
    rows = budget_sweep(desk_specs(5), kappas=(1.0, 0.5))
    reference = {r.seed: r.energy for r in rows if r.method == "cipp_S3"}
    lipp = [r for r in rows if r.method == "lipp"]
    assert len(lipp) == 10
    for r in lipp:
        assert r.budget == pytest.approx(r.kappa * reference[r.seed])
        if not math.isnan(r.energy):
            assert r.energy <= r.budget + 1e-9
    with pytest.raises(ValueError):
        budget_sweep(desk_specs(1), kappas=(1.5,))


def test_bound_audit_on_sweep(small_sweep):
    report = bound_audit(small_sweep, s_max=3)
    assert report["rows_audited"] == 18
    assert report["violations"] == 0
    assert report["lambda_zero_bound_exact"]


def test_equal_length_audit_single_scenario():
    out = equal_length_audit(ScenarioSpec(n=9, seed=3))
    assert out["pairs_checked"] > 0 and out["violations"] == 0


def test_csv_and_summary(tmp_path, small_sweep):
    path = write_csv(small_sweep, tmp_path / "rows.csv")
    assert path.read_text().splitlines()[0].split(",") == COLUMNS
    back = read_csv(path)
    assert len(back) == len(small_sweep)
    for a, b in zip(back, small_sweep):
        assert a.method == b.method and a.seed == b.seed and a.kappa == b.kappa
        assert (math.isnan(a.objective) and math.isnan(b.objective)) or a.objective == b.objective
    summary = summarize(small_sweep)
    entry = summary["lipp|lam=1"]
    assert entry["count"] == 6
    assert entry["energy"]["mean"] == pytest.approx(mean_of(small_sweep, "lipp", "energy", lam=1.0))
    doc = json.loads(write_summary(small_sweep, tmp_path / "s.json", {"seed": 0}).read_text())
    assert doc["metadata"] == {"seed": 0}


def test_runtime_profile_tiny_complete_graph():
    rows = runtime_profile([ScenarioSpec(n=4, density=1.0, seed=s) for s in range(3)])
    medians = median_times(rows)
    assert set(medians) == {("lipp", 4), ("cipp_S3", 4)}
    assert all(t < 1.0 for t in medians.values())


def test_runtime_medians_grow_with_size():
    specs = [ScenarioSpec(n=n, density=0.4, seed=s) for n in (6, 9, 12) for s in range(9)]
    medians = median_times(runtime_profile(specs, budget=4.0, distance_budget=4.0, gap=0.0))
    for method in ("lipp", "cipp_S3"):
        times = [medians[(method, n)] for n in (6, 9, 12)]
        assert times == sorted(times)
    assert all(medians[("lipp", n)] >= medians[("cipp_S3", n)] for n in (6, 9, 12))
