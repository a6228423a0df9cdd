"""Classifier families and the fitted-model type."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Any, Mapping, Optional

import numpy as np

from .. import kernels
from ..data import Dataset
from ..errors import InputError, InvalidHyperparameter, SingleClassData
from .trees import Tree, concat_trees, grow_tree


class Family(str, Enum):
    DECISION_TREE = "decision_tree"
    RANDOM_FOREST = "random_forest"
    GRADIENT_BOOSTING = "gradient_boosting"
    LOGISTIC_REGRESSION = "logistic_regression"


ID_PREFIX = {
    Family.DECISION_TREE: "dt",
    Family.RANDOM_FOREST: "rf",
    Family.GRADIENT_BOOSTING: "gbm",
    Family.LOGISTIC_REGRESSION: "lr",
}

# name -> (default, kind); kinds: "count" int >= 1, "unit" real in (0, 1],
# "nonneg" real >= 0, "pos" real > 0, "bool"
HYPERPARAMETERS: dict[Family, dict[str, tuple[Any, str]]] = {
    Family.DECISION_TREE: {
        "max_depth": (3, "count"),
        "min_samples_leaf": (1, "count"),
    },
    Family.RANDOM_FOREST: {
        "n_trees": (100, "count"),
        "max_depth": (6, "count"),
        "min_samples_leaf": (1, "count"),
        "max_features": (0.5, "unit"),
        "bootstrap": (True, "bool"),
    },
    Family.GRADIENT_BOOSTING: {
        "n_trees": (100, "count"),
        "learning_rate": (0.1, "unit"),
        "max_depth": (3, "count"),
        "min_samples_leaf": (1, "count"),
        "subsample": (1.0, "unit"),
        "max_features": (1.0, "unit"),
    },
    Family.LOGISTIC_REGRESSION: {
        "l2": (1e-3, "nonneg"),
        "tol": (1e-8, "pos"),
        "max_iter": (100000, "count"),
    },
}


def resolve_hyperparameters(family: Family | str, hyperparameters: Optional[Mapping[str, Any]]) -> dict:
    """Fill defaults and validate; raises :class:`InvalidHyperparameter`."""
    try:
        family = Family(family)
    except ValueError:
        raise InvalidHyperparameter(f"unknown model family {family!r}") from None
    spec = HYPERPARAMETERS[family]
    given = dict(hyperparameters or {})
    unknown = set(given) - set(spec)
    if unknown:
        raise InvalidHyperparameter(f"{family.value}: unknown hyperparameters {sorted(unknown)}")
    out = {}
    for name, (default, kind) in spec.items():
        v = given.get(name, default)
        if kind == "bool":
            if not isinstance(v, bool):
                raise InvalidHyperparameter(f"{name} must be a boolean, got {v!r}")
        elif kind == "count":
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise InvalidHyperparameter(f"{name} must be a positive integer, got {v!r}")
            v = int(v)
        else:
            if isinstance(v, bool) or not isinstance(v, (int, float, np.floating, np.integer)):
                raise InvalidHyperparameter(f"{name} must be a real number, got {v!r}")
            v = float(v)
            ok = {"unit": 0.0 < v <= 1.0, "nonneg": v >= 0.0, "pos": v > 0.0}[kind]
            if not ok or not math.isfinite(v):
                raise InvalidHyperparameter(f"{name}={v!r} out of range for {family.value}")
        out[name] = v
    return out


def sigmoid(margin: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-margin))


@dataclass(frozen=True, eq=False)
class PredictiveModel:
    """A fitted scoring function ``f: rows -> [0, 1]``.

    Tree families keep their trees; logistic regression keeps an intercept
    and one coefficient array per feature (length 1 for numeric features,
    one entry per category code for categorical ones, code 0 fixed at 0).
    """

    id: str
    family: Family
    hyperparameters: dict
    feature_names: tuple[str, ...]
    categorical: tuple[bool, ...]
    trees: tuple[Tree, ...] = ()
    base_margin: float = 0.0
    intercept: float = 0.0
    coefficients: tuple[np.ndarray, ...] = ()

    @cached_property
    def _flat(self):
        return concat_trees(self.trees)

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Scores for the rows of ``X`` (n x p, categorical cells as codes)."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise InputError(f"expected rows with {len(self.feature_names)} features, got shape {X.shape}")
        if self.family is Family.LOGISTIC_REGRESSION:
            margin = np.full(X.shape[0], self.intercept)
            for j, coef in enumerate(self.coefficients):
                if self.categorical[j]:
                    margin += coef[X[:, j].astype(np.int64)]
                else:
                    margin += X[:, j] * coef[0]
            return sigmoid(margin)
        if self.family is Family.GRADIENT_BOOSTING:
            lr = self.hyperparameters["learning_rate"]
            return sigmoid(kernels.ensemble_sum(*self._flat, X, lr, self.base_margin))
        return kernels.ensemble_sum(*self._flat, X, 1.0, 0.0) / len(self.trees)

    def uses_feature(self, j: int) -> bool:
        if self.family is Family.LOGISTIC_REGRESSION:
            return bool(np.any(self.coefficients[j] != 0))
        return any(j in t.used_features() for t in self.trees)


def _check_data(data: Dataset) -> tuple[np.ndarray, np.ndarray, tuple[bool, ...]]:
    y = np.asarray(data.target)
    if y.min() == y.max():
        raise SingleClassData(f"training data {data.name!r} has a single class")
    return data.rows, y.astype(np.float64), tuple(not v.is_numeric for v in data.variables)


def _class_frequency(y, w):
    def leaf(idx):
        return float(np.dot(w[idx], y[idx]) / w[idx].sum())

    return leaf


def _fit_forest(X, y, cat, hp, rng, bootstrap, n_trees, max_features):
    n = X.shape[0]
    trees = []
    for _ in range(n_trees):
        if bootstrap:
            w = np.bincount(rng.integers(0, n, size=n), minlength=n).astype(np.float64)
        else:
            w = np.ones(n)
        trees.append(
            grow_tree(
                X, y, w,
                max_depth=hp["max_depth"],
                min_samples_leaf=hp["min_samples_leaf"],
                max_features=max_features,
                categorical=cat,
                rng=rng,
                leaf_value=_class_frequency(y, w),
            )
        )
    return tuple(trees)


def _fit_boosting(X, y, cat, hp, rng):
    n = X.shape[0]
    p_mean = float(y.mean())
    base = math.log(p_mean / (1.0 - p_mean))
    margin = np.full(n, base)
    lr = hp["learning_rate"]
    ones = np.ones(n)
    trees = []
    for _ in range(hp["n_trees"]):
        prob = sigmoid(margin)
        resid = y - prob
        hess = prob * (1.0 - prob)
        rows = None
        if hp["subsample"] < 1.0:
            k = max(2, int(round(hp["subsample"] * n)))
            rows = np.sort(rng.choice(n, size=k, replace=False))

        def newton(idx, resid=resid, hess=hess):
            h = hess[idx].sum()
            return float(resid[idx].sum() / h) if h > 1e-12 else 0.0

        tree = grow_tree(
            X, resid, ones,
            max_depth=hp["max_depth"],
            min_samples_leaf=hp["min_samples_leaf"],
            max_features=hp["max_features"],
            categorical=cat,
            rng=rng,
            leaf_value=newton,
            rows=rows,
        )
        trees.append(tree)
        margin = margin + lr * kernels.ensemble_sum(*concat_trees([tree]), np.ascontiguousarray(X), 1.0, 0.0)
    return tuple(trees), base


def _design(X, cat, n_levels):
    """One-hot (drop-first) expansion; returns matrix and per-feature column slices."""
    cols, slices, start = [], [], 0
    for j, is_cat in enumerate(cat):
        if is_cat:
            k = n_levels[j]
            codes = X[:, j].astype(np.int64)
            block = np.zeros((X.shape[0], max(k - 1, 0)))
            for c in range(1, k):
                block[:, c - 1] = codes == c
            cols.append(block)
            slices.append(slice(start, start + block.shape[1]))
            start += block.shape[1]
        else:
            cols.append(X[:, j:j + 1])
            slices.append(slice(start, start + 1))
            start += 1
    return np.hstack(cols) if cols else np.empty((X.shape[0], 0)), slices


def fit_logistic(Z: np.ndarray, y: np.ndarray, l2: float, tol: float, max_iter: int) -> tuple[float, np.ndarray]:
    """L2-penalised logistic regression by accelerated gradient descent.

    Minimises ``mean log-loss + l2/2 * ||w||^2`` (intercept unpenalised) on
    standardised columns, stopping when the gradient's max-norm drops below
    ``tol``. Returns ``(intercept, weights)`` on the original column scale.
    """
    n, d = Z.shape
    mu = Z.mean(axis=0)
    sd = Z.std(axis=0)
    keep = sd > 0
    S = np.zeros_like(Z)
    S[:, keep] = (Z[:, keep] - mu[keep]) / sd[keep]
    A = np.hstack([np.ones((n, 1)), S])
    lipschitz = 0.25 * np.linalg.eigvalsh(A.T @ A / n).max() + l2
    step = 1.0 / lipschitz
    penalty = np.full(d + 1, l2)
    penalty[0] = 0.0
    theta = np.zeros(d + 1)
    theta[0] = math.log(y.mean() / (1.0 - y.mean()))
    prev = theta.copy()
    for it in range(1, max_iter + 1):
        look = theta + (it - 1) / (it + 2) * (theta - prev)
        grad = A.T @ (sigmoid(A @ look) - y) / n + penalty * look
        if np.abs(grad).max() < tol:
            theta = look
            break
        prev, theta = theta, look - step * grad
    w = np.zeros(d)
    w[keep] = theta[1:][keep] / sd[keep]
    intercept = float(theta[0] - np.dot(w[keep], mu[keep]))
    return intercept, w


def train(
    family: Family | str,
    hyperparameters: Optional[Mapping[str, Any]],
    train_data: Dataset,
    seed: int,
    model_id: Optional[str] = None,
) -> PredictiveModel:
    """Fit one model; all randomness flows from ``seed``."""
    hp = resolve_hyperparameters(family, hyperparameters)
    family = Family(family)
    X, y, cat = _check_data(train_data)
    rng = np.random.default_rng(seed)
    common = dict(
        id=model_id or ID_PREFIX[family],
        family=family,
        hyperparameters=hp,
        feature_names=train_data.feature_names,
        categorical=cat,
    )
    if family is Family.DECISION_TREE:
        trees = _fit_forest(X, y, cat, hp, rng, bootstrap=False, n_trees=1, max_features=1.0)
        return PredictiveModel(trees=trees, **common)
    if family is Family.RANDOM_FOREST:
        trees = _fit_forest(X, y, cat, hp, rng, hp["bootstrap"], hp["n_trees"], hp["max_features"])
        return PredictiveModel(trees=trees, **common)
    if family is Family.GRADIENT_BOOSTING:
        trees, base = _fit_boosting(X, y, cat, hp, rng)
        return PredictiveModel(trees=trees, base_margin=base, **common)
    n_levels = [len(v.categories) if not v.is_numeric else 1 for v in train_data.variables]
    Z, slices = _design(X, cat, n_levels)
    intercept, w = fit_logistic(Z, y, hp["l2"], hp["tol"], hp["max_iter"])
    coefs = []
    for j, sl in enumerate(slices):
        if cat[j]:
            coefs.append(np.concatenate([[0.0], w[sl]]))
        else:
            coefs.append(w[sl].copy())
    return PredictiveModel(intercept=intercept, coefficients=tuple(coefs), **common)
