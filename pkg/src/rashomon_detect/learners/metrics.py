from __future__ import annotations

import numpy as np

from ..errors import InputError, SingleClass


def auc(scores, labels) -> float:
    """Area under the ROC curve as the Mann-Whitney statistic.

    Equals ``(#concordant + 0.5 * #tied) / (#pos * #neg)`` over all
    positive-negative pairs. Midranks keep every intermediate sum an exact
    multiple of 0.5, so the result matches pair counting bit for bit.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise InputError("scores and labels must be 1-d vectors of equal length")
    if not np.isfinite(s).all():
        raise InputError("scores must be finite")
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("AUC needs both classes")
    order = np.argsort(s, kind="stable")
    sorted_s = s[order]
    # tie groups in sorted order
    starts = np.flatnonzero(np.r_[True, sorted_s[1:] != sorted_s[:-1]])
    ends = np.r_[starts[1:], len(s)]
    midrank = (starts + ends + 1) / 2.0
    ranks = np.empty(len(s))
    ranks[order] = np.repeat(midrank, ends - starts)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))
