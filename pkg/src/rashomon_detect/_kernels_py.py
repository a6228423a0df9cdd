"""Pure-numpy fallback for :mod:`rashomon_detect._kernels`.

Same signatures and bit-identical results; only slower.
"""
from __future__ import annotations

import numpy as np


def ensemble_sum(feature, threshold, is_cat, cat_mask, left, right, value, roots, X, scale, init):
    n = X.shape[0]
    acc = np.full(n, init, dtype=np.float64)
    rows = np.arange(n)
    for root in roots:
        node = np.full(n, root, dtype=np.int64)
        active = feature[node] >= 0
        while active.any():
            at = node[active]
            f = feature[at]
            x = X[rows[active], f]
            cat = is_cat[at].astype(bool)
            go_left = x <= threshold[at]
            if cat.any():
                codes = x[cat].astype(np.uint64)
                go_left[cat] = ((cat_mask[at[cat]] >> codes) & np.uint64(1)).astype(bool)
            node[active] = np.where(go_left, left[at], right[at])
            active = feature[node] >= 0
        acc += scale * value[node]
    return acc


def best_split(Xn, y, w, min_leaf):
    n, nf = Xn.shape
    best = -np.inf
    best_f, best_lo, best_hi = -1, 0.0, 0.0
    if n < 2:
        return best_f, best_lo, best_hi, best
    wy = w * y
    k = np.arange(n - 1)
    size_ok = (k + 1 >= min_leaf) & (n - k - 1 >= min_leaf)
    if not size_ok.any():
        return best_f, best_lo, best_hi, best
    for f in range(nf):
        col = Xn[:, f]
        order = np.argsort(col, kind="stable")
        v = col[order]
        cum_s = np.cumsum(wy[order])
        cum_w = np.cumsum(w[order])
        sl = cum_s[:-1]
        wl = cum_w[:-1]
        sr = cum_s[-1] - sl
        wr = cum_w[-1] - wl
        valid = size_ok & (v[:-1] < v[1:]) & (wl > 0) & (wr > 0)
        if not valid.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            score = sl * sl / wl + sr * sr / wr
        score = np.where(valid, score, -np.inf)
        pos = int(np.argmax(score))
        if score[pos] > best:
            best = float(score[pos])
            best_f, best_lo, best_hi = f, float(v[pos]), float(v[pos + 1])
    return best_f, best_lo, best_hi, best
