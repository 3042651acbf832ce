"""Pure numpy versions of the compiled kernels (same signatures)."""

import numpy as np


def schur_sparse(indptr, rows, cols, vals, X, Sinv):
    """Schur complement ``M[i, j] = tr(A_i X A_j Sinv)`` for sparse ``A``.

    Constraint ``i`` owns entries ``indptr[i]:indptr[i+1]`` of the COO
    arrays ``rows``, ``cols``, ``vals`` (full symmetric storage).
    """
    m = len(indptr) - 1
    n = X.shape[0]
    flat = np.asarray(rows) * n + np.asarray(cols)
    owner = np.repeat(np.arange(m), np.diff(indptr))
    M = np.empty((m, m))
    for j in range(m):
        lo, hi = indptr[j], indptr[j + 1]
        # T = X A_j Sinv as a sum of weighted outer products of columns/rows
        T = (X[:, rows[lo:hi]] * vals[lo:hi]) @ Sinv[cols[lo:hi], :]
        M[:, j] = np.bincount(owner, weights=vals * T.ravel()[flat], minlength=m)
    return 0.5 * (M + M.T)


def net_max(coef, feat, chunk=2048):
    """Maximize ``coef[i] @ feat[j]`` over all pairs; returns ``(value, i, j)``."""
    coef = np.ascontiguousarray(coef, dtype=float)
    featT = np.ascontiguousarray(np.asarray(feat, dtype=float).T)
    best, bi, bj = -np.inf, -1, -1
    for start in range(0, coef.shape[0], chunk):
        vals = coef[start:start + chunk] @ featT
        flat = int(np.argmax(vals))
        r, c = divmod(flat, vals.shape[1])
        if vals[r, c] > best:
            best, bi, bj = float(vals[r, c]), start + r, c
    return best, bi, bj
