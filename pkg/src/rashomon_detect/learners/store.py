"""Versioned JSON model store.

Layout: ``{"format_version": 1, "records": [...]}``. Trees are stored as
node arrays (feature index, threshold or category set, children, leaf
value). Floats are written in shortest round-trip form, so reloaded models
score bit-identically.
"""
from __future__ import annotations

import json
import math
from typing import Sequence

import numpy as np

from ..errors import CorruptPayload, VersionMismatch
from .models import Family, PredictiveModel
from .search import ModelRecord
from .trees import Tree

FORMAT_VERSION = 1


def _tree_to_dict(t: Tree) -> dict:
    sets = []
    for cat, mask in zip(t.is_cat, t.cat_mask):
        m = int(mask)
        sets.append([c for c in range(64) if m >> c & 1] if cat else None)
    return {
        "feature": t.feature.tolist(),
        "threshold": t.threshold.tolist(),
        "category_set": sets,
        "left": t.left.tolist(),
        "right": t.right.tolist(),
        "value": t.value.tolist(),
    }


def _tree_from_dict(d: dict) -> Tree:
    masks, is_cat = [], []
    for s in d["category_set"]:
        is_cat.append(s is not None)
        masks.append(sum(1 << int(c) for c in s) if s is not None else 0)
    n = len(d["feature"])
    if not all(len(d[k]) == n for k in ("threshold", "category_set", "left", "right", "value")):
        raise CorruptPayload("tree node arrays differ in length")
    return Tree(
        feature=np.array(d["feature"], dtype=np.int64),
        threshold=np.array(d["threshold"], dtype=np.float64),
        is_cat=np.array(is_cat, dtype=np.uint8),
        cat_mask=np.array(masks, dtype=np.uint64),
        left=np.array(d["left"], dtype=np.int64),
        right=np.array(d["right"], dtype=np.int64),
        value=np.array(d["value"], dtype=np.float64),
    )


def _num(x):
    return None if x is None or (isinstance(x, float) and math.isnan(x)) else x


def _model_to_dict(m: PredictiveModel) -> dict:
    d = {
        "id": m.id,
        "family": m.family.value,
        "hyperparameters": m.hyperparameters,
        "feature_names": list(m.feature_names),
        "categorical": list(m.categorical),
    }
    if m.family is Family.LOGISTIC_REGRESSION:
        d["intercept"] = m.intercept
        d["coefficients"] = [c.tolist() for c in m.coefficients]
    else:
        d["base_margin"] = m.base_margin
        d["trees"] = [_tree_to_dict(t) for t in m.trees]
    return d


def _model_from_dict(d: dict) -> PredictiveModel:
    family = Family(d["family"])
    common = dict(
        id=d["id"],
        family=family,
        hyperparameters=dict(d["hyperparameters"]),
        feature_names=tuple(d["feature_names"]),
        categorical=tuple(bool(c) for c in d["categorical"]),
    )
    if family is Family.LOGISTIC_REGRESSION:
        return PredictiveModel(
            intercept=float(d["intercept"]),
            coefficients=tuple(np.array(c, dtype=np.float64) for c in d["coefficients"]),
            **common,
        )
    return PredictiveModel(
        trees=tuple(_tree_from_dict(t) for t in d["trees"]),
        base_margin=float(d["base_margin"]),
        **common,
    )


def save_models(records: Sequence[ModelRecord]) -> bytes:
    out = []
    for r in records:
        out.append({
            "id": r.id,
            "family": r.family.value if r.family is not None else None,
            "hyperparameters": r.hyperparameters,
            "cv_auc_mean": _num(r.cv_auc_mean),
            "cv_auc_per_fold": list(r.cv_auc_per_fold),
            "test_auc": _num(r.test_auc),
            "error": r.error,
            "model": _model_to_dict(r.model) if r.model is not None else None,
        })
    doc = {"format_version": FORMAT_VERSION, "records": out}
    return (json.dumps(doc, indent=1, allow_nan=False) + "\n").encode("utf-8")


def load_models(payload: bytes) -> list[ModelRecord]:
    try:
        doc = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptPayload(f"model store is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise CorruptPayload("model store lacks format_version")
    if doc["format_version"] != FORMAT_VERSION:
        raise VersionMismatch(f"model store version {doc['format_version']!r}, expected {FORMAT_VERSION}")
    records = []
    try:
        for r in doc["records"]:
            model = _model_from_dict(r["model"]) if r["model"] is not None else None
            mean = r["cv_auc_mean"]
            records.append(ModelRecord(
                model=model,
                cv_auc_mean=math.nan if mean is None else float(mean),
                cv_auc_per_fold=tuple(float(v) for v in r["cv_auc_per_fold"]),
                test_auc=None if r["test_auc"] is None else float(r["test_auc"]),
                id=r["id"],
                family=Family(r["family"]) if r["family"] is not None else None,
                hyperparameters=dict(r["hyperparameters"]),
                error=r["error"],
            ))
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptPayload(f"malformed model store: {exc!r}") from None
    return records
