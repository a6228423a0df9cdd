import json
import time

import numpy as np
import pytest

from rashomon_detect.data import VariableKind, VariableMeta
from rashomon_detect.errors import (
    CategoricalVariable, DegenerateDomain, GridMismatch, SchemaMismatch, UnknownVariable,
)
from rashomon_detect.learners import train
from rashomon_detect.profiles import (
    Grid, Profile, bundle_from_dict, make_grid, pdp, pdp_categorical, profile_bundle, read_exchange,
    write_exchange,
)
from rashomon_detect.synthetic import load_hlh_like

from conftest import FunctionModel, mixed_dataset, naive_pdp, numeric_dataset


def test_uniform_grid():
    meta = VariableMeta("x", VariableKind.NUMERIC, (0.0, 10.0))
    assert make_grid(meta, 5).points.tolist() == [0, 2.5, 5, 7.5, 10]


def test_quantile_grid_deduplicates():
    ds = numeric_dataset([1.0, 1.0, 1.0, 9.0], [0, 1, 0, 1])
    assert make_grid(ds.variable("x1"), 2, "quantile", ds).points.tolist() == [1.0, 9.0]
    g = make_grid(ds.variable("x1"), 11, "quantile", ds)
    assert np.all(np.diff(g.points) > 0)


def test_grid_errors():
    with pytest.raises(DegenerateDomain):
        make_grid(VariableMeta("x", VariableKind.NUMERIC, (3.0, 3.0)), 5)
    with pytest.raises(CategoricalVariable):
        make_grid(VariableMeta("c", VariableKind.CATEGORICAL, None, ("a",)), 5)
    with pytest.raises(Exception):
        Grid("x", [0.0, 0.0, 1.0])


def test_pdp_of_additive_function():
    X = np.column_stack([np.linspace(0, 1, 6), np.array([0, 2, 0, 2, 0, 2.0])])
    ds = numeric_dataset(X, [0, 1] * 3)
    model = FunctionModel("sum", ds.feature_names, lambda A: A[:, 0] + A[:, 1])
    prof = pdp(model, ds, make_grid(ds.variable("x1"), 11))
    assert np.allclose(prof.values, prof.grid.points + 1.0, atol=1e-15)


def test_pdp_of_unused_variable_is_mean_prediction():
    ds = mixed_dataset()
    model = FunctionModel("f", ds.feature_names, lambda A: 1 / (1 + np.exp(-A[:, 0])))
    prof = pdp(model, ds, make_grid(ds.variable("x2"), 7))
    assert np.all(prof.values == prof.values[0])
    assert prof.values[0] == pytest.approx(model.predict(ds.rows).mean(), abs=1e-15)


def test_pdp_tree_matches_naive_loop_bitwise():
    ds = mixed_dataset(n=50)
    m = train("decision_tree", {"max_depth": 2}, ds, seed=0)
    grid = make_grid(ds.variable("x1"), 11)
    assert np.array_equal(pdp(m, ds, grid).values, naive_pdp(m, ds.rows, 0, grid.points))


def test_pdp_categorical():
    ds = mixed_dataset(n=50)
    meta = ds.variable("c")
    ignore = FunctionModel("f", ds.feature_names, lambda A: np.full(len(A), 0.25))
    assert pdp_categorical(ignore, ds, meta).values.tolist() == [0.25] * 3
    indicator = FunctionModel("g", ds.feature_names, lambda A: (A[:, 2] == 0).astype(float))
    assert pdp_categorical(indicator, ds, meta).values.tolist() == [1.0, 0.0, 0.0]
    forest = train("random_forest", {"n_trees": 10}, ds, seed=2)
    assert np.array_equal(pdp_categorical(forest, ds, meta).values,
                          naive_pdp(forest, ds.rows, 2, np.arange(3.0)))
    with pytest.raises(UnknownVariable):
        pdp(forest, ds, Grid("nope", [0.0, 1.0]))


def _three_models():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(60, 4))
    y = (X[:, 0] - X[:, 1] > 0).astype(int)
    ds = numeric_dataset(X, y)
    models = [train(f, {"n_trees": 5} if f != "logistic_regression" else None, ds, seed=1, model_id=mid)
              for f, mid in [("random_forest", "a"), ("gradient_boosting", "b"), ("logistic_regression", "c")]]
    return ds, models


def test_bundle_shape_and_determinism():
    ds, models = _three_models()
    b1 = profile_bundle(models, ds, 101)
    b2 = profile_bundle(models, ds, 101)
    assert len(b1.profiles) == 12
    for (mid, var), prof in b1.profiles.items():
        assert prof.values.shape == (101,)
        assert prof.grid.same_as(b1.variable(var).grid)
        assert np.array_equal(prof.values, b2.profiles[(mid, var)].values)


def test_bundle_background_and_centering():
    ds, models = _three_models()
    b = profile_bundle(models, ds, 21, background_rows=20, seed=3, center=True)
    for prof in b.profiles.values():
        assert abs(prof.values.mean()) < 1e-12


def test_bundle_speed_at_clinical_scale():
    ds = load_hlh_like()
    models = [train("random_forest", {"n_trees": 50, "max_depth": 4}, ds, seed=s, model_id=f"rf{s}")
              for s in range(9)]
    start = time.perf_counter()
    b = profile_bundle(models, ds, 101)
    assert time.perf_counter() - start < 5
    assert len(b.profiles) == 9 * 13


def test_exchange_round_trip(tmp_path):
    ds = mixed_dataset()
    models = [train("decision_tree", None, ds, seed=0, model_id="t1"),
              train("logistic_regression", None, ds, seed=0, model_id="l1")]
    b = profile_bundle(models, ds, 15)
    path = tmp_path / "p.json"
    write_exchange(b, {"t1": 0.7, "l1": 0.8}, path)
    back, scores = read_exchange(path)
    assert scores == {"t1": 0.7, "l1": 0.8}
    assert back.model_ids == b.model_ids and back.variable_names == b.variable_names
    for key, prof in b.profiles.items():
        assert np.array_equal(back.profiles[key].values, prof.values)


MINIMAL = {
    "format_version": 1,
    "models": [{"id": "m1", "auc": 0.8}, {"id": "m2", "auc": 0.79}],
    "variables": [{"name": "x", "kind": "numeric", "grid": [0.0, 0.5, 1.0]}],
    "profiles": [{"model_id": "m1", "variable": "x", "values": [0.1, 0.2, 0.3]},
                 {"model_id": "m2", "variable": "x", "values": [0.3, 0.2, 0.1]}],
}


def test_minimal_exchange_document_accepted():
    b = bundle_from_dict(MINIMAL)
    assert b.values("m2", "x").tolist() == [0.3, 0.2, 0.1]
    assert b.scores == {"m1": 0.8, "m2": 0.79}


def test_exchange_grid_conflicts(tmp_path):
    doc = json.loads(json.dumps(MINIMAL))
    doc["variables"].append({"name": "x", "kind": "numeric", "grid": [0.0, 0.4, 1.0]})
    with pytest.raises(GridMismatch):
        bundle_from_dict(doc)
    doc = json.loads(json.dumps(MINIMAL))
    doc["profiles"][0]["grid"] = [0.0, 0.6, 1.0]
    with pytest.raises(GridMismatch):
        bundle_from_dict(doc)
    doc = json.loads(json.dumps(MINIMAL))
    doc["format_version"] = 9
    with pytest.raises(SchemaMismatch):
        bundle_from_dict(doc)
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(SchemaMismatch):
        read_exchange(bad)


def test_missing_profile_reads_as_zero():
    doc = json.loads(json.dumps(MINIMAL))
    doc["profiles"].pop()
    b = bundle_from_dict(doc)
    assert b.missing() == [("m2", "x")]
    assert b.values("m2", "x").tolist() == [0.0, 0.0, 0.0]


def test_profile_is_read_only():
    p = Profile("m", "x", Grid("x", [0.0, 1.0]), [1.0, 2.0])
    with pytest.raises(ValueError):
        p.values[0] = 5.0
