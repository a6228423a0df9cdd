# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: tree-ensemble scoring and CART split search.

Floating-point operations are ordered exactly as in ``_kernels_py`` so both
backends give bit-identical results.
"""
import numpy as np

from libc.math cimport INFINITY


def ensemble_sum(
    const long long[::1] feature,
    const double[::1] threshold,
    const unsigned char[::1] is_cat,
    const unsigned long long[::1] cat_mask,
    const long long[::1] left,
    const long long[::1] right,
    const double[::1] value,
    const long long[::1] roots,
    const double[:, ::1] X,
    double scale,
    double init,
):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t n_trees = roots.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i, t
    cdef long long node, f, code
    cdef double acc, x
    cdef bint go_left
    with nogil:
        for i in range(n):
            acc = init
            for t in range(n_trees):
                node = roots[t]
                while feature[node] >= 0:
                    f = feature[node]
                    x = X[i, f]
                    if is_cat[node]:
                        code = <long long> x
                        go_left = (cat_mask[node] >> code) & 1
                    else:
                        go_left = x <= threshold[node]
                    node = left[node] if go_left else right[node]
                acc = acc + scale * value[node]
            o[i] = acc
    return out


def best_split(
    const double[:, ::1] Xn,
    const double[::1] y,
    const double[::1] w,
    Py_ssize_t min_leaf,
):
    """Best variance-reduction split over the columns of ``Xn``.

    Returns ``(column, lo, hi, score)`` where rows with value <= lo go left
    and hi is the next distinct value; ``column == -1`` when no valid split.
    """
    cdef Py_ssize_t n = Xn.shape[0]
    cdef Py_ssize_t nf = Xn.shape[1]
    cdef Py_ssize_t f, k, r
    cdef double s_tot, w_tot, sl, wl, sr, wr, score
    cdef double best = -INFINITY
    cdef Py_ssize_t best_f = -1
    cdef double best_lo = 0.0, best_hi = 0.0
    if n < 2:
        return -1, 0.0, 0.0, best
    # one stable sort per column; numpy's sort beats qsort with a callback
    cdef const long long[:, ::1] order = np.ascontiguousarray(np.argsort(Xn, axis=0, kind="stable"), dtype=np.int64)
    cdef Py_ssize_t r1
    with nogil:
        for f in range(nf):
            s_tot = 0.0
            w_tot = 0.0
            for k in range(n):
                r = order[k, f]
                s_tot = s_tot + w[r] * y[r]
                w_tot = w_tot + w[r]
            sl = 0.0
            wl = 0.0
            for k in range(n - 1):
                r = order[k, f]
                sl = sl + w[r] * y[r]
                wl = wl + w[r]
                if k + 1 < min_leaf or n - k - 1 < min_leaf:
                    continue
                r1 = order[k + 1, f]
                if not Xn[r, f] < Xn[r1, f]:
                    continue
                sr = s_tot - sl
                wr = w_tot - wl
                if not (wl > 0.0 and wr > 0.0):
                    continue
                score = sl * sl / wl + sr * sr / wr
                if score > best:
                    best = score
                    best_f = f
                    best_lo = Xn[r, f]
                    best_hi = Xn[r1, f]
    return best_f, best_lo, best_hi, best
