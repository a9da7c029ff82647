"""Numba kernels for the resampling hot path.

Everything here operates on the CSR-style arrays of a features.TermMatrix so
that per-element vocabulary builds, vectorization, and SGD training stay off
the Python interpreter.  All loops are deterministic; shuffling orders are
produced by the caller from seeded numpy generators.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def class_doc_freq(indptr, term_ids, rows, y3, n_terms):
    """Document frequency per term and class over a row subset.

    y3 holds class codes 0/1/2 (for labels -1/0/+1).  Returns an
    (3, n_terms) int64 array.
    """
    df = np.zeros((3, n_terms), dtype=np.int64)
    for r in range(rows.shape[0]):
        i = rows[r]
        c = y3[i]
        for k in range(indptr[i], indptr[i + 1]):
            df[c, term_ids[k]] += 1
    return df


@njit(cache=True)
def build_design(indptr, term_ids, counts, rows, local_id, factors):
    """Extract the weighted design matrix for a row subset.

    local_id maps global term id -> dense plane feature index (-1 = pruned);
    factors holds the per-feature Delta TF-IDF log ratio.  Entries whose
    weight is exactly zero are dropped.  Returns (indptr, cols, vals).
    """
    n = rows.shape[0]
    out_indptr = np.zeros(n + 1, dtype=np.int64)
    total = 0
    for r in range(n):
        i = rows[r]
        for k in range(indptr[i], indptr[i + 1]):
            j = local_id[term_ids[k]]
            if j >= 0 and factors[j] != 0.0:
                total += 1
        out_indptr[r + 1] = total
    cols = np.empty(total, dtype=np.int64)
    vals = np.empty(total, dtype=np.float64)
    p = 0
    for r in range(n):
        i = rows[r]
        for k in range(indptr[i], indptr[i + 1]):
            j = local_id[term_ids[k]]
            if j >= 0 and factors[j] != 0.0:
                cols[p] = j
                vals[p] = counts[k] * factors[j]
                p += 1
    return out_indptr, cols, vals


@njit(cache=True)
def sgd_hinge(indptr, cols, vals, y, dim, lam, order):
    """Hinge-loss SGD with L2 regularization and step size 1/(lam*t).

    y is +-1 per row; ``order`` concatenates the per-epoch visit orders.
    The weight vector uses the usual scale trick so each step costs O(nnz).
    The bias is not regularized.  Returns (weights, bias).
    """
    v = np.zeros(dim, dtype=np.float64)
    scale = 1.0
    bias = 0.0
    t = 0
    for s in range(order.shape[0]):
        i = order[s]
        t += 1
        eta = 1.0 / (lam * t)
        dot = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            dot += v[cols[k]] * vals[k]
        margin = y[i] * (scale * dot + bias)
        shrink = 1.0 - eta * lam
        if shrink <= 1e-12:
            # first step: (1 - 1/t) with t=1 zeroes the weight vector
            for j in range(dim):
                v[j] = 0.0
            scale = 1.0
        else:
            scale *= shrink
            if scale < 1e-9:
                for j in range(dim):
                    v[j] *= scale
                scale = 1.0
        if margin < 1.0:
            coef = eta * y[i] / scale
            for k in range(indptr[i], indptr[i + 1]):
                v[cols[k]] += coef * vals[k]
            bias += eta * y[i]
    w = np.empty(dim, dtype=np.float64)
    for j in range(dim):
        w[j] = scale * v[j]
    return w, bias


@njit(cache=True)
def dot_rows(indptr, cols, vals, w, bias):
    """Signed distance of every CSR row to the plane (w, bias)."""
    n = indptr.shape[0] - 1
    d = np.empty(n, dtype=np.float64)
    for i in range(n):
        acc = bias
        for k in range(indptr[i], indptr[i + 1]):
            acc += w[cols[k]] * vals[k]
        d[i] = acc
    return d
