import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.integrate import simpson

from rashomon_detect.errors import BadWindow, CategoryMismatch, GridMismatch, ProfileTooShort
from rashomon_detect.measures import (
    MeasureKind, MeasureSpec, categorical_disparity, gold_derivative, l2_derivatives, l2_profiles, measure,
    pairwise_disparity, pdi, point_weights, sign_with_tolerance,
)
from rashomon_detect.profiles import BundleVariable, CategoricalProfile, Grid, Profile, ProfileBundle


def prof(values, z, mid="m", var="x"):
    return Profile(mid, var, Grid(var, z), np.asarray(values, dtype=float))


Z01 = np.linspace(0, 1, 1001)
ZPM = np.linspace(-1, 1, 101)

finite = st.floats(-1, 1, allow_nan=False, allow_infinity=False)
profile_values = arrays(np.float64, 31, elements=finite)


# -- GOLD derivatives --------------------------------------------------------

@pytest.mark.parametrize("z", [np.linspace(-3, 2, 40), np.sort(np.random.default_rng(1).uniform(0, 5, 30))])
def test_gold_reproduces_lines(z):
    der = gold_derivative(prof(1.7 * z - 0.4, np.unique(z))).values
    assert np.max(np.abs(der - 1.7)) < 1e-9


def test_gold_exact_on_quadratic():
    der = gold_derivative(prof(ZPM ** 2, ZPM)).values
    assert np.max(np.abs(der[3:-3] - 2 * ZPM[3:-3])) < 1e-9


def test_gold_on_noisy_sine_tracks_analytic_derivative():
    z = np.linspace(0, 2 * np.pi, 201)
    rng = np.random.default_rng(0)
    g = np.sin(z) + rng.normal(0, 0.001, z.size)
    der = gold_derivative(prof(g, z), window=11, degree=2).values
    assert np.sqrt(np.mean((der - np.cos(z)) ** 2)) < 0.1


def test_gold_window_validation():
    with pytest.raises(BadWindow):
        gold_derivative(prof(ZPM, ZPM), window=6)
    with pytest.raises(BadWindow):
        gold_derivative(prof(ZPM, ZPM), window=5, degree=5)
    with pytest.raises(ProfileTooShort):
        gold_derivative(prof([0, 1, 2.0], [0, 1, 2.0]))


@settings(max_examples=50)
@given(st.integers(1, 4), st.integers(0, 2**31))
def test_gold_exact_for_polynomials_up_to_degree(q, seed):
    rng = np.random.default_rng(seed)
    coef = rng.uniform(-1, 1, q + 1)
    z = np.linspace(-1, 1, 41)
    der = gold_derivative(prof(np.polyval(coef, z), z), window=2 * q + 3 if q > 1 else 7, degree=q).values
    assert np.max(np.abs(der - np.polyval(np.polyder(coef), z))) < 1e-9


# -- L2 distances ------------------------------------------------------------

def test_l2_closed_forms():
    assert l2_profiles(prof(Z01, Z01), prof(0 * Z01, Z01)) == pytest.approx(np.sqrt(1 / 3), abs=1e-4)
    # (z^2 - z) squared integrates to 1/30 on [0, 1]
    assert l2_profiles(prof(Z01 ** 2, Z01), prof(Z01, Z01)) == pytest.approx(np.sqrt(1 / 30), abs=1e-4)
    p = prof(np.sin(Z01), Z01)
    assert l2_profiles(p, p) == 0.0


def test_l2_matches_refined_simpson():
    # smooth random profiles, as partial dependence curves are
    rng = np.random.default_rng(5)
    z = np.linspace(0, 2, 101)
    fine = np.linspace(0, 2, 100 * 10 + 1)
    for _ in range(20):
        a, b = (sum(rng.normal() * np.sin(k * z + rng.uniform(0, 6)) / k for k in range(1, 5)) for _ in range(2))
        d = np.interp(fine, z, a) - np.interp(fine, z, b)
        oracle = np.sqrt(simpson(d * d, x=fine))
        assert l2_profiles(prof(a, z), prof(b, z)) == pytest.approx(oracle, abs=1e-3)


def test_l2_derivatives_closed_forms():
    assert l2_derivatives(prof(Z01, Z01), prof(2 * Z01, Z01)) == pytest.approx(1.0, abs=1e-3)
    assert l2_derivatives(prof(0.8 * Z01, Z01), prof(0.3 * Z01, Z01)) == pytest.approx(0.5, abs=1e-3)
    g = np.cos(3 * Z01)
    assert l2_derivatives(prof(g, Z01), prof(g + 0.7, Z01)) < 1e-9


def test_grid_mismatch():
    with pytest.raises(GridMismatch):
        l2_profiles(prof(ZPM, ZPM), prof(Z01[:101], Z01[:101]))


@settings(max_examples=200)
@given(profile_values, profile_values, profile_values)
def test_l2_triangle_inequality(a, b, c):
    z = np.linspace(0, 3, 31)
    pa, pb, pc = prof(a, z), prof(b, z), prof(c, z)
    assert l2_profiles(pa, pc) <= l2_profiles(pa, pb) + l2_profiles(pb, pc) + 1e-9


@given(profile_values, finite)
def test_l2_derivatives_blind_to_shift(a, c):
    z = np.linspace(0, 3, 31)
    assert l2_derivatives(prof(a, z), prof(a + c, z)) < 1e-9


# -- PDI ---------------------------------------------------------------------

def test_pdi_reference_values():
    assert pdi(prof(ZPM, ZPM), prof(-ZPM, ZPM)) == 1.0
    assert pdi(prof(0.8 * ZPM, ZPM), prof(0.3 * ZPM, ZPM)) == 0.0
    assert abs(pdi(prof(ZPM, ZPM), prof(ZPM ** 2, ZPM), tau=0.0) - 0.5) <= 2 / 101
    assert abs(pdi(prof(ZPM, ZPM), prof(ZPM ** 2, ZPM)) - 0.5) <= 2 / 101


def test_sign_with_tolerance():
    assert sign_with_tolerance(np.array([-0.2, -0.05, 0.0, 0.05, 0.2]), 0.1).tolist() == [-1, 0, 0, 0, 1]
    assert sign_with_tolerance(np.array([-1e-300, 1e-300]), 0.0).tolist() == [-1, 1]


def test_point_weights():
    assert point_weights(Grid("x", np.linspace(0, 1, 5))) is None
    w = point_weights(Grid("x", [0.0, 1.0, 3.0]))
    assert w.tolist() == pytest.approx([1 / 4.5, 1.5 / 4.5, 2 / 4.5]) and w.sum() == pytest.approx(1.0)


@settings(max_examples=300)
@given(profile_values, profile_values)
def test_pdi_bounds_identity_symmetry(a, b):
    z = np.linspace(-2, 2, 31)
    pa, pb = prof(a, z), prof(b, z)
    v = pdi(pa, pb)
    assert 0.0 <= v <= 1.0
    assert pdi(pa, pa) == 0.0
    assert v == pdi(pb, pa)


@given(arrays(np.float64, 31, elements=st.integers(-64, 64).map(lambda k: k / 64)),
       arrays(np.float64, 31, elements=st.integers(-64, 64).map(lambda k: k / 64)),
       st.sampled_from([0.25, 0.5, 2.0, 4.0]), st.integers(-8, 8))
def test_pdi_invariant_to_increasing_affine_maps(a, b, scale, shift):
    # dyadic values keep the affine map exact in floating point
    z = np.linspace(-1, 1, 31)
    moved = prof(scale * a + shift / 4, z)
    assert pdi(moved, prof(b, z)) == pdi(prof(a, z), prof(b, z))
    assert pdi(moved, prof(b, z), tau=0.0) == pdi(prof(a, z), prof(b, z), tau=0.0)


# -- categorical -------------------------------------------------------------

def cat(values, mid="m", cats=("a", "b")):
    return CategoricalProfile(mid, "c", cats, np.asarray(values, float))


def test_categorical_disparity():
    assert categorical_disparity(cat([0.2, 0.4]), cat([0.2, 0.4])) == 0.0
    assert categorical_disparity(cat([1, 0]), cat([0, 1])) == pytest.approx(1.0)
    assert categorical_disparity(cat([1, 0]), cat([0, 1]), normalize=False) == pytest.approx(np.sqrt(2))
    assert categorical_disparity(cat([0.1, 0.5]), cat([0.4, 0.8])) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(CategoryMismatch):
        categorical_disparity(cat([1, 0]), cat([0, 1], cats=("a", "z")))


# -- pairwise matrices -------------------------------------------------------

def _bundle(profiles_by_model, variables):
    ids = tuple(profiles_by_model)
    profs = {}
    for mid, per_var in profiles_by_model.items():
        for var, p in per_var.items():
            profs[(mid, var)] = p
    return ProfileBundle(ids, variables, profs)


def test_identical_models_zero_matrix():
    g = Grid("x", ZPM)
    b = _bundle({m: {"x": Profile(m, "x", g, np.sin(ZPM))} for m in ("a", "b")}, (BundleVariable("x", grid=g),))
    assert pairwise_disparity(b).values.tolist() == [[0.0, 0.0], [0.0, 0.0]]


def test_average_over_variables():
    # window 3 / degree 1 is a central difference, so sign patterns are exact:
    # the first tent disagrees with the line at 4 of 10 points, the second at 6
    z = np.arange(10.0)
    gx, gw = Grid("x", z), Grid("w", z)
    up = z.copy()
    tent_x = np.array([0, 1, 2, 3, 4, 5, 6, 5, 4, 3.0])
    tent_w = np.array([0, 1, 2, 3, 4, 3, 2, 1, 0, -1.0])
    spec = MeasureSpec(window=3, degree=1, tau=0.0)
    b = _bundle({"a": {"x": Profile("a", "x", gx, up), "w": Profile("a", "w", gw, up)},
                 "b": {"x": Profile("b", "x", gx, tent_x), "w": Profile("b", "w", gw, tent_w)}},
                (BundleVariable("x", grid=gx), BundleVariable("w", grid=gw)))
    M = pairwise_disparity(b, spec)
    assert M.per_variable["x"][0, 1] == pytest.approx(0.4, abs=1e-15)
    assert M.per_variable["w"][0, 1] == pytest.approx(0.6, abs=1e-15)
    assert M.get("a", "b") == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("kind", list(MeasureKind))
def test_matrix_matches_per_pair_loop(kind):
    rng = np.random.default_rng(11)
    z = np.linspace(-1, 1, 41)
    g = Grid("x", z)
    ids = ("m1", "m2", "m3")
    models = {}
    for mid in ids:
        models[mid] = {"x": Profile(mid, "x", g, np.cumsum(rng.normal(size=41)) / 10),
                       "c": CategoricalProfile(mid, "c", ("a", "b", "c"), rng.uniform(size=3))}
    b = _bundle(models, (BundleVariable("x", grid=g), BundleVariable("c", categories=("a", "b", "c"))))
    spec = MeasureSpec(kind)
    M = pairwise_disparity(b, spec)
    assert np.array_equal(M.values, M.values.T) and np.all(np.diag(M.values) == 0)
    for i, a in enumerate(ids):
        for j, c in enumerate(ids):
            if i == j:
                continue
            expect = (measure(models[a]["x"], models[c]["x"], spec) + measure(models[a]["c"], models[c]["c"], spec)) / 2
            assert M.values[i, j] == pytest.approx(expect, abs=1e-12)
    recs = M.records()
    assert len(recs) == 3 and set(recs[0].per_variable) == {"x", "c"}


def test_measure_kind_aliases():
    assert MeasureKind.parse("l2") is MeasureKind.L2_PROFILES
    assert MeasureKind.parse("l2der") is MeasureKind.L2_DERIVATIVES
    assert MeasureKind.parse("pdi").short == "pdi"
