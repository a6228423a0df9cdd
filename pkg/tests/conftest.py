from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from rashomon_detect.data import Dataset, VariableKind, VariableMeta

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

GOLDEN = Path(__file__).parent / "golden"


def numeric_dataset(X, y, names=None, name="synthetic") -> Dataset:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    names = names or [f"x{j + 1}" for j in range(X.shape[1])]
    metas = tuple(VariableMeta(n, VariableKind.NUMERIC, (float(X[:, j].min()), float(X[:, j].max())))
                  for j, n in enumerate(names))
    return Dataset(name, X, y, metas)


def mixed_dataset(n=80, seed=0) -> Dataset:
    """Two numeric columns and one three-level categorical column."""
    rng = np.random.default_rng(seed)
    x1 = rng.normal(size=n)
    x2 = rng.uniform(-2, 2, size=n)
    c = rng.integers(0, 3, size=n).astype(float)
    margin = 1.5 * x1 - 0.8 * x2 + np.array([0.0, 1.0, -1.0])[c.astype(int)]
    y = (rng.uniform(size=n) < 1 / (1 + np.exp(-margin))).astype(int)
    y[0], y[1] = 0, 1
    metas = (
        VariableMeta("x1", VariableKind.NUMERIC, (float(x1.min()), float(x1.max()))),
        VariableMeta("x2", VariableKind.NUMERIC, (float(x2.min()), float(x2.max()))),
        VariableMeta("c", VariableKind.CATEGORICAL, None, ("a", "b", "c")),
    )
    return Dataset("mixed", np.column_stack([x1, x2, c]), y, metas)


class FunctionModel:
    """Minimal scorer wrapping a row-wise function."""

    def __init__(self, mid, feature_names, fn):
        self.id = mid
        self.feature_names = tuple(feature_names)
        self.fn = fn

    def predict(self, X):
        return np.asarray(self.fn(np.asarray(X, dtype=float)), dtype=float)


def naive_pdp(model, X, j, values):
    """Brute force over every (grid point, row) pair, one row per call."""
    out = []
    for z in values:
        total = 0.0
        for i in range(X.shape[0]):
            row = np.array(X[i:i + 1], dtype=float)
            row[0, j] = z
            total += float(model.predict(row)[0])
        out.append(total / X.shape[0])
    return np.array(out)


@pytest.fixture
def mixed():
    return mixed_dataset()


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
