import itertools
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rashomon_detect.errors import BundleIncomplete, InputError, UnknownExplicitId
from rashomon_detect.learners import ModelRecord
from rashomon_detect.measures import DisparityMatrix, MeasureSpec
from rashomon_detect.profiles import BundleVariable, Grid, Profile, ProfileBundle
from rashomon_detect.rashomon import (
    RashomonConfig, Variant, build_rashomon_set, default_k, rashomon_detect, rashomon_detect_greedy,
    reference_model, select_most_different,
)


def matrix(ids, D):
    D = np.asarray(D, dtype=float)
    return DisparityMatrix(tuple(ids), D, {"v": D})


def random_matrix(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.uniform(size=(n, n))
    D = np.maximum(A, A.T)
    np.fill_diagonal(D, 0.0)
    return [f"m{i:02d}" for i in range(n)], D


def oracle_select(ids, D, ref, k, greedy=False):
    """Independent re-statement of the selection loop."""
    chosen = [ref]
    while len(chosen) < min(k, len(ids)):
        best, best_score = None, None
        for c in sorted(set(ids) - set(chosen)):
            j = ids.index(c)
            if greedy:
                score = D[ids.index(chosen[-1]), j]
            else:
                score = sum(D[ids.index(s), j] for s in chosen) / len(chosen)
            if best_score is None or score > best_score:
                best, best_score = c, score
        chosen.append(best)
    return chosen


# -- reference and membership --------------------------------------------------

def test_reference_model():
    assert reference_model({"a": 0.81, "b": 0.79}) == "a"
    assert reference_model({"b": 0.8, "a": 0.8}) == "a"
    scores = {"clinic_lr": 0.6, "rf": 0.9}
    assert reference_model(scores, RashomonConfig(reference="clinic_lr")) == "clinic_lr"
    with pytest.raises(UnknownExplicitId):
        reference_model(scores, RashomonConfig(reference="nope"))


def test_build_rashomon_set():
    scores = {"a": 0.81, "b": 0.79, "c": 0.76}
    assert build_rashomon_set(scores, "a", 0.04) == ("a", "b")
    assert build_rashomon_set({"a": 0.8, "b": 0.8, "c": 0.7}, "a", 0.0) == ("a", "b")


def test_nine_member_population():
    scores = {"ref": 0.81, **{f"m{i}": 0.775 + 0.003 * i for i in range(8)}, "weak": 0.70}
    members = build_rashomon_set(scores, "ref", 0.04)
    assert len(members) == 9 and default_k(len(members)) == 3


def test_default_k():
    assert [default_k(s) for s in (1, 2, 9, 100)] == [2, 2, 3, 10]
    with pytest.raises(InputError):
        default_k(0)


@given(st.dictionaries(st.text("abc", min_size=1, max_size=3), st.floats(0.5, 1.0), min_size=1, max_size=12),
       st.floats(0, 0.2), st.floats(0, 0.2))
def test_membership_monotone_in_epsilon(scores, e1, e2):
    ref = reference_model(scores)
    lo, hi = sorted((e1, e2))
    assert set(build_rashomon_set(scores, ref, lo)) <= set(build_rashomon_set(scores, ref, hi))


def test_records_and_test_metric():
    recs = [ModelRecord(None, 0.8, (0.8,), test_auc=0.7, id="a"), ModelRecord(None, 0.75, (0.75,), test_auc=0.9, id="b"),
            ModelRecord(None, float("nan"), (), id="f", error="Boom: x")]
    assert reference_model(recs) == "a"
    assert reference_model(recs, RashomonConfig(metric="test_auc")) == "b"


def test_config_validation():
    with pytest.raises(InputError):
        RashomonConfig(k=1)
    with pytest.raises(InputError):
        RashomonConfig(epsilon=-0.1)


# -- selection -------------------------------------------------------------------

def test_single_argmax_step():
    M = matrix(["A", "B", "ref"], [[0, 0.1, 0.3], [0.1, 0, 0.5], [0.3, 0.5, 0]])
    sel, scores = select_most_different(M, "ref", 2)
    assert sel == ["ref", "B"] and scores == [0.5]


@settings(max_examples=60)
@given(st.integers(2, 12), st.integers(2, 8), st.integers(0, 2**31))
def test_selection_matches_independent_loop(n, k, seed):
    ids, D = random_matrix(n, seed)
    ref = ids[seed % n]
    for variant, greedy in ((Variant.FULL, False), (Variant.GREEDY, True)):
        sel, scores = select_most_different(matrix(ids, D), ref, k, variant)
        assert sel == oracle_select(ids, D, ref, k, greedy)
        assert len(set(sel)) == len(sel) and sel[0] == ref
    sel, scores = select_most_different(matrix(ids, D), ref, k)
    for t, s in enumerate(scores, start=1):
        total = 0.0
        for prev in sel[:t]:
            total += D[ids.index(prev), ids.index(sel[t])]
        assert s == total / t


@settings(max_examples=30)
@given(st.integers(2, 10), st.integers(0, 2**31))
def test_greedy_equals_full_for_k2(n, seed):
    ids, D = random_matrix(n, seed)
    M = matrix(ids, D)
    assert select_most_different(M, ids[0], 2, "greedy") == select_most_different(M, ids[0], 2, "full")


def test_chain_construction_separates_variants():
    ids = ["A", "B", "C", "D"]
    D = np.array([
        [0.0, 0.9, 0.1, 0.6],
        [0.9, 0.0, 0.9, 0.6],
        [0.1, 0.9, 0.0, 0.5],
        [0.6, 0.6, 0.5, 0.0],
    ])
    greedy, g_scores = select_most_different(matrix(ids, D), "A", 3, "greedy")
    full, f_scores = select_most_different(matrix(ids, D), "A", 3, "full")
    assert greedy == ["A", "B", "C"] and g_scores == [0.9, 0.9]
    assert full == ["A", "B", "D"] and f_scores == [0.9, 0.6]


def test_identical_models_select_lexicographically():
    ids = ["z", "c", "a", "b"]
    sel, scores = select_most_different(matrix(ids, np.zeros((4, 4))), "z", 3)
    assert sel == ["z", "a", "b"] and scores == [0.0, 0.0]


def test_greedy_is_cheaper_than_full():
    ids, D = random_matrix(50, 3)
    M = matrix(ids, D)

    def clock(variant):
        start = time.perf_counter()
        for _ in range(30):
            select_most_different(M, ids[0], 5, variant)
        return time.perf_counter() - start

    clock("full")
    assert clock("greedy") < clock("full")


# -- end to end over profile bundles --------------------------------------------

# sign disagreement: up/valley 0.5, up/hump 0.25, valley/hump 0.75, so
# both variants must move to a new cluster at every step
SHAPES = {
    "up": lambda z: z,
    "valley": lambda z: z ** 2,
    "hump": lambda z: -(z - 0.5) ** 2,
}


def cluster_bundle(seed=0):
    rng = np.random.default_rng(seed)
    z = np.linspace(-1, 1, 101)
    grids = {v: Grid(v, z) for v in ("x", "w")}
    profiles, scores = {}, {}
    ids = []
    for name, f in SHAPES.items():
        for copy in (1, 2):
            mid = f"{name}{copy}"
            ids.append(mid)
            scores[mid] = 0.8 if mid == "up1" else 0.79 - 0.001 * len(ids)
            for v, g in grids.items():
                profiles[(mid, v)] = Profile(mid, v, g, f(z) + rng.normal(0, 0.002, z.size))
    return ProfileBundle(tuple(ids), tuple(BundleVariable(v, grid=g) for v, g in grids.items()), profiles), scores


@pytest.mark.parametrize("variant", ["full", "greedy"])
def test_cluster_recovery(variant):
    bundle, scores = cluster_bundle()
    res = rashomon_detect(scores, bundle, RashomonConfig(epsilon=0.1, k=3, variant=variant,
                                                          measure=MeasureSpec(window=7, degree=2)))
    assert res.reference == "up1"
    assert sorted(s.rstrip("12") for s in res.selected) == ["hump", "up", "valley"]
    # exhaustive search over 3-subsets containing the reference
    ids = list(res.matrix.model_ids)
    D = res.matrix.values

    def spread(subset):
        return sum(D[ids.index(a), ids.index(b)] for a, b in itertools.combinations(subset, 2))

    best = max((("up1",) + rest for rest in itertools.combinations([i for i in ids if i != "up1"], 2)), key=spread)
    assert sorted(s.rstrip("12") for s in best) == ["hump", "up", "valley"]
    assert spread(res.selected) == pytest.approx(spread(best))


def test_k_at_least_set_size_returns_all_with_warning():
    bundle, scores = cluster_bundle()
    res = rashomon_detect(scores, bundle, RashomonConfig(epsilon=0.1, k=10))
    assert set(res.selected) == set(res.rashomon_ids) and res.reference == "up1"
    assert res.warnings and "returning all members" in res.warnings[0]
    sel, _ = select_most_different(res.matrix, "up1", 10)
    assert list(res.selected) == sel


def test_greedy_wrapper_and_k2_equivalence():
    bundle, scores = cluster_bundle()
    cfg = RashomonConfig(epsilon=0.1, k=2)
    assert rashomon_detect_greedy(scores, bundle, cfg).selected == rashomon_detect(scores, bundle, cfg).selected
    assert rashomon_detect_greedy(scores, bundle, cfg).config.variant is Variant.GREEDY


def test_invariant_to_record_order():
    bundle, scores = cluster_bundle()
    reordered = dict(reversed(list(scores.items())))
    cfg = RashomonConfig(epsilon=0.1, k=3)
    a, b = rashomon_detect(scores, bundle, cfg), rashomon_detect(reordered, bundle, cfg)
    assert a.selected == b.selected and a.to_dict() == b.to_dict()


def test_missing_member_and_zero_fill():
    bundle, scores = cluster_bundle()
    with pytest.raises(BundleIncomplete):
        rashomon_detect({**scores, "ghost": 0.8}, bundle, RashomonConfig(epsilon=0.1))
    partial = ProfileBundle(bundle.model_ids, bundle.variables,
                            {k: p for k, p in bundle.profiles.items() if k != ("valley1", "w")})
    res = rashomon_detect(scores, partial, RashomonConfig(epsilon=0.1, k=3))
    assert res.zero_filled == (("valley1", "w"),)
    assert any("constant 0" in w for w in res.warnings)


def test_summary_pairs_sorted_descending():
    bundle, scores = cluster_bundle()
    res = rashomon_detect(scores, bundle, RashomonConfig(epsilon=0.1, k=3))
    pairs = res.summary_pairs()
    assert len(pairs) == 3
    assert [p[2] for p in pairs] == sorted((p[2] for p in pairs), reverse=True)
    doc = res.to_dict()
    assert doc["selected"] == list(res.selected) and set(doc["per_variable"]) == {"x", "w"}
