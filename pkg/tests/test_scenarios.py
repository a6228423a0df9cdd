import json

import numpy as np
import pytest

from rashomon_detect.errors import UnknownScenario
from rashomon_detect.measures import MeasureKind, MeasureSpec, measure
from rashomon_detect.scenarios import (
    ScenarioSpec, evaluate_scenarios, generate_pair, median_ranks, scenario_grid, write_long_csv,
    write_summary_json,
)


def test_negated_pair_without_noise():
    a, b = generate_pair(ScenarioSpec(8, sigma=0.0), 0)
    assert np.array_equal(b.values, -a.values)


def test_identical_pair_without_noise():
    a, b = generate_pair(ScenarioSpec(3, sigma=0.0), 5)
    assert np.array_equal(a.values, b.values)
    for kind in MeasureKind:
        assert measure(a, b, MeasureSpec(kind)) == 0.0


@pytest.mark.parametrize("sid", range(1, 9))
def test_pairs_deterministic_and_bounded(sid):
    spec = ScenarioSpec(sid, seed=3)
    a1, b1 = generate_pair(spec, 7)
    a2, b2 = generate_pair(spec, 7)
    assert np.array_equal(a1.values, a2.values) and np.array_equal(b1.values, b2.values)
    for p in (a1, b1):
        assert p.values.min() >= -1 and p.values.max() <= 1 and p.values.shape == (101,)
    assert not np.array_equal(generate_pair(spec, 8)[0].values, a1.values)


def test_grid_spans_normal_sample():
    g = scenario_grid(0, 101)
    assert g.m == 101 and -4.5 < g.points[0] < -2 and 2 < g.points[-1] < 4.5


def test_unknown_scenario():
    with pytest.raises(UnknownScenario):
        ScenarioSpec(9)


def test_evaluate_shapes_and_outputs(tmp_path):
    specs = [ScenarioSpec(s, n_pairs=10) for s in (1, 7, 8)]
    results = evaluate_scenarios(specs)
    for r in results:
        assert set(r.values) == {k.value for k in MeasureKind}
        assert all(len(v) == 10 for v in r.values.values())
        assert r.summary["pdi"]["q1"] <= r.median("pdi") <= r.summary["pdi"]["q3"]
    ranks = median_ranks(results, "pdi")
    assert sorted(ranks.values()) == [1, 2, 3]
    write_long_csv(results, tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "scenario,pair,measure,value" and len(lines) == 1 + 3 * 3 * 10
    write_summary_json(results, specs, tmp_path / "s.json")
    doc = json.loads((tmp_path / "s.json").read_text())
    assert set(doc["scenarios"]) == {"1", "7", "8"}


def test_slope_difference_visible_to_derivative_distance():
    results = {r.scenario: r for r in evaluate_scenarios([ScenarioSpec(s) for s in (1, 2, 3)])}
    assert results[1].median("l2der") > 0.05 and results[2].median("l2der") > 0.05
    assert results[1].median("l2der") > results[3].median("l2der")
