"""CART growth on node arrays.

Splits maximise weighted variance reduction. On 0/1 targets this is the
same ordering as weighted Gini impurity decrease (a node's weighted SSE is
``W * p * (1 - p)``, i.e. half its weighted Gini), so one criterion serves
classification trees and the residual-fitting trees of gradient boosting.
Categorical features are split by a category set found by ordering the
categories present in the node by their mean target.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .. import kernels
from ..errors import InputError

MAX_CATEGORIES = 64


@dataclass(frozen=True)
class Tree:
    """Binary tree in preorder node arrays. Leaves have ``feature == -1``."""

    feature: np.ndarray  # int64
    threshold: np.ndarray  # float64
    is_cat: np.ndarray  # uint8
    cat_mask: np.ndarray  # uint64, bit c set => category code c goes left
    left: np.ndarray  # int64
    right: np.ndarray  # int64
    value: np.ndarray  # float64

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[i] + 1
                depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def used_features(self) -> set[int]:
        return {int(f) for f in self.feature if f >= 0}


def concat_trees(trees: Sequence[Tree]) -> tuple[np.ndarray, ...]:
    """Flatten trees into shared arrays plus root offsets for :func:`kernels.ensemble_sum`."""
    offsets = np.cumsum([0] + [t.n_nodes for t in trees[:-1]]).astype(np.int64)

    def shifted(attr):
        parts = []
        for off, t in zip(offsets, trees):
            a = getattr(t, attr)
            parts.append(np.where(a >= 0, a + off, a))
        return np.ascontiguousarray(np.concatenate(parts), dtype=np.int64)

    return (
        np.ascontiguousarray(np.concatenate([t.feature for t in trees]), dtype=np.int64),
        np.ascontiguousarray(np.concatenate([t.threshold for t in trees]), dtype=np.float64),
        np.ascontiguousarray(np.concatenate([t.is_cat for t in trees]), dtype=np.uint8),
        np.ascontiguousarray(np.concatenate([t.cat_mask for t in trees]), dtype=np.uint64),
        shifted("left"),
        shifted("right"),
        np.ascontiguousarray(np.concatenate([t.value for t in trees]), dtype=np.float64),
        offsets,
    )


def _go_left(column: np.ndarray, threshold: float, is_cat: bool, mask: int) -> np.ndarray:
    if is_cat:
        codes = column.astype(np.uint64)
        return ((np.uint64(mask) >> codes) & np.uint64(1)).astype(bool)
    return column <= threshold


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    *,
    max_depth: int,
    min_samples_leaf: int,
    max_features: float,
    categorical: Sequence[bool],
    rng: np.random.Generator,
    leaf_value: Callable[[np.ndarray], float],
    rows: Optional[np.ndarray] = None,
) -> Tree:
    """Grow one tree on the rows with positive weight.

    ``leaf_value`` maps an index array of node rows to the node's output.
    ``max_features`` is the fraction of features drawn (without replacement)
    at every node.
    """
    p = X.shape[1]
    if any(categorical) and X[:, np.asarray(categorical, bool)].max(initial=0) >= MAX_CATEGORIES:
        raise InputError(f"tree learners support at most {MAX_CATEGORIES} categories per variable")
    idx0 = np.flatnonzero(w > 0) if rows is None else np.asarray(rows, dtype=np.int64)
    n_draw = max(1, int(round(max_features * p)))

    feature: list[int] = []
    threshold: list[float] = []
    is_cat: list[int] = []
    cat_mask: list[int] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def new_node(v: float) -> int:
        feature.append(-1)
        threshold.append(0.0)
        is_cat.append(0)
        cat_mask.append(0)
        left.append(-1)
        right.append(-1)
        value.append(v)
        return len(feature) - 1

    def build(idx: np.ndarray, depth: int) -> int:
        node = new_node(float(leaf_value(idx)))
        yn = y[idx]
        if depth >= max_depth or len(idx) < 2 * min_samples_leaf or yn.min() == yn.max():
            return node
        feats = np.arange(p) if n_draw >= p else np.sort(rng.choice(p, size=n_draw, replace=False))
        wn = np.ascontiguousarray(w[idx])
        yn = np.ascontiguousarray(yn, dtype=np.float64)
        Xn = np.empty((len(idx), len(feats)), dtype=np.float64)
        ranks = {}
        for c, f in enumerate(feats):
            col = X[idx, f]
            if categorical[f]:
                codes = col.astype(np.int64)
                size = int(codes.max()) + 1
                wsum = np.bincount(codes, weights=wn, minlength=size)
                ysum = np.bincount(codes, weights=wn * yn, minlength=size)
                present = np.flatnonzero(wsum > 0)
                means = ysum[present] / wsum[present]
                order = present[np.lexsort((present, means))]
                rank = np.full(size, -1.0)
                rank[order] = np.arange(len(order), dtype=np.float64)
                ranks[c] = rank
                Xn[:, c] = rank[codes]
            else:
                Xn[:, c] = col
        col_i, lo, hi, score = kernels.best_split(Xn, yn, wn, min_samples_leaf)
        if col_i < 0:
            return node
        s = float(np.dot(wn, yn))
        parent = s * s / float(wn.sum())
        if not score - parent > 1e-12 * max(1.0, abs(parent)):
            return node
        f = int(feats[col_i])
        if categorical[f]:
            rank = ranks[col_i]
            mask = 0
            for code in np.flatnonzero((rank >= 0) & (rank <= lo)):
                mask |= 1 << int(code)
            thr, cat = 0.0, True
        else:
            thr = 0.5 * (lo + hi)
            if not lo <= thr < hi:
                thr = lo
            mask, cat = 0, False
        go = _go_left(X[idx, f], thr, cat, mask)
        feature[node] = f
        threshold[node] = thr
        is_cat[node] = int(cat)
        cat_mask[node] = mask
        left[node] = build(idx[go], depth + 1)
        right[node] = build(idx[~go], depth + 1)
        return node

    build(idx0, 0)
    return Tree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        is_cat=np.array(is_cat, dtype=np.uint8),
        cat_mask=np.array(cat_mask, dtype=np.uint64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        value=np.array(value, dtype=np.float64),
    )
