"""Hyperparameter grids evaluated by stratified cross-validated AUC."""
from __future__ import annotations

import hashlib
import itertools
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Optional, Sequence

import numpy as np

from ..data import Dataset, fold_assignments
from ..errors import InputError, InvalidHyperparameter, RashomonError
from .metrics import auc
from .models import ID_PREFIX, Family, PredictiveModel, resolve_hyperparameters, train

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridCell:
    id: str
    family: Family
    hyperparameters: dict

    def key(self) -> str:
        """Canonical text of family + hyperparameters (id excluded)."""
        return json.dumps([self.family.value, self.hyperparameters], sort_keys=True)


@dataclass(frozen=True)
class GridSpec:
    cells: tuple[GridCell, ...]
    seed: int = 0

    def __post_init__(self):
        ids = [c.id for c in self.cells]
        if len(set(ids)) != len(ids):
            raise InputError("grid cell ids must be unique")
        if not self.cells:
            raise InputError("grid has no cells")

    @classmethod
    def from_dict(cls, spec: Mapping[str, Any]) -> "GridSpec":
        """Build from ``{"seed": s, "families": {family: {param: [values]}}}``
        (Cartesian product per family, ids like ``rf01``) and/or an explicit
        ``"cells": [{"id", "family", "hyperparameters"}]`` list."""
        cells: list[GridCell] = []
        for fam_name, params in (spec.get("families") or {}).items():
            family = _family(fam_name)
            if isinstance(params, Mapping):
                names = sorted(params)
                combos = [dict(zip(names, vals)) for vals in itertools.product(*(_listify(params[k]) for k in names))]
            else:
                combos = [dict(c) for c in params]
            for i, hp in enumerate(combos, start=1):
                cells.append(_cell(f"{ID_PREFIX[family]}{i:02d}", family, hp))
        for c in spec.get("cells") or ():
            cells.append(_cell(c["id"], _family(c["family"]), c.get("hyperparameters", {})))
        return cls(tuple(cells), int(spec.get("seed", 0)))

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "cells": [{"id": c.id, "family": c.family.value, "hyperparameters": c.hyperparameters} for c in self.cells],
        }


def _family(name) -> Family:
    try:
        return Family(name)
    except ValueError:
        raise InvalidHyperparameter(f"unknown model family {name!r}") from None


def _listify(v):
    return v if isinstance(v, (list, tuple)) else [v]


def _cell(cell_id, family, hp) -> GridCell:
    try:
        resolved = resolve_hyperparameters(family, hp)
    except InvalidHyperparameter as exc:
        raise InvalidHyperparameter(f"grid cell {cell_id}: {exc}") from None
    return GridCell(cell_id, family, resolved)


def default_grid(seed: int = 0) -> GridSpec:
    """Random forests and gradient boosting over depth, size and shrinkage (16 cells)."""
    return GridSpec.from_dict(
        {
            "seed": seed,
            "families": {
                "random_forest": {"n_trees": [50], "max_depth": [2, 4, 6, 8], "max_features": [0.3, 0.6]},
                "gradient_boosting": {"n_trees": [50], "max_depth": [1, 2, 3, 4], "learning_rate": [0.05, 0.2]},
            },
        }
    )


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from arbitrary JSON-able parts (independent of scheduling)."""
    digest = hashlib.sha256(json.dumps(parts, sort_keys=True).encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


@dataclass(frozen=True, eq=False)
class ModelRecord:
    model: Optional[PredictiveModel]
    cv_auc_mean: float
    cv_auc_per_fold: tuple[float, ...]
    test_auc: Optional[float] = None
    id: str = ""
    family: Optional[Family] = None
    hyperparameters: dict = field(default_factory=dict)
    error: Optional[str] = None

    def __post_init__(self):
        if self.model is not None:
            object.__setattr__(self, "id", self.id or self.model.id)
            object.__setattr__(self, "family", self.model.family)
            object.__setattr__(self, "hyperparameters", self.model.hyperparameters)

    @property
    def failed(self) -> bool:
        return self.error is not None

    def metric(self, name: str = "cv_auc_mean") -> float:
        value = self.test_auc if name == "test_auc" else self.cv_auc_mean
        if value is None:
            raise InputError(f"record {self.id!r} has no {name}")
        return value


def sort_records(records: Iterable[ModelRecord]) -> list[ModelRecord]:
    """Descending CV mean AUC, ties by id; failed cells last (by id)."""
    return sorted(records, key=lambda r: (r.failed, -r.cv_auc_mean if not r.failed else 0.0, r.id))


def _evaluate_cell(cell: GridCell, data: Dataset, folds: Sequence[np.ndarray], grid_seed: int,
                   test_data: Optional[Dataset]) -> ModelRecord:
    per_fold = []
    try:
        for r, fold_ids in enumerate(folds):
            for k in range(int(fold_ids.max()) + 1):
                held = fold_ids == k
                fit = train(cell.family, cell.hyperparameters, data.subset(np.flatnonzero(~held)),
                            derive_seed(grid_seed, cell.key(), r, k), model_id=cell.id)
                hold = data.subset(np.flatnonzero(held))
                per_fold.append(auc(fit.predict(hold.rows), hold.target))
        model = train(cell.family, cell.hyperparameters, data, derive_seed(grid_seed, cell.key(), "final"),
                      model_id=cell.id)
    except RashomonError as exc:
        logger.warning("grid cell %s failed: %s", cell.id, exc)
        return ModelRecord(None, math.nan, tuple(per_fold), id=cell.id, family=cell.family,
                           hyperparameters=cell.hyperparameters, error=f"{exc.code}: {exc}")
    test = auc(model.predict(test_data.rows), test_data.target) if test_data is not None else None
    return ModelRecord(model, float(np.mean(per_fold)), tuple(per_fold), test)


def grid_search(
    grid: GridSpec,
    data: Dataset,
    n_folds: int = 5,
    *,
    n_repeats: int = 1,
    test_data: Optional[Dataset] = None,
    n_jobs: int = 1,
) -> list[ModelRecord]:
    """One :class:`ModelRecord` per grid cell, sorted by :func:`sort_records`.

    Every cell sees the same stratified folds. Per-fold models are refit on
    the other folds; the stored model is refit on all of ``data``. Seeds
    derive from ``(grid.seed, cell hyperparameters, fold)`` so identical
    cells score identically and results do not depend on ``n_jobs``.
    """
    if n_repeats < 1:
        raise InputError("n_repeats must be at least 1")
    folds = [fold_assignments(data, n_folds, derive_seed(grid.seed, "folds", r)) for r in range(n_repeats)]
    if n_jobs == 1:
        records = [_evaluate_cell(c, data, folds, grid.seed, test_data) for c in grid.cells]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            futures = [pool.submit(_evaluate_cell, c, data, folds, grid.seed, test_data) for c in grid.cells]
            records = [f.result() for f in futures]
    return sort_records(records)
