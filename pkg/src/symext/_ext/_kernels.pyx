# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; see ``_kernels_py`` for the reference semantics."""

import numpy as np


def schur_sparse(const Py_ssize_t[::1] indptr, const Py_ssize_t[::1] rows,
                 const Py_ssize_t[::1] cols, const double[::1] vals,
                 const double[:, ::1] X, const double[:, ::1] Sinv):
    cdef Py_ssize_t m = indptr.shape[0] - 1
    cdef Py_ssize_t i, j, p, q, a, b
    cdef double s, v
    out = np.empty((m, m))
    cdef double[:, ::1] M = out
    for i in range(m):
        for j in range(i, m):
            s = 0.0
            for p in range(indptr[i], indptr[i + 1]):
                a = rows[p]
                b = cols[p]
                v = vals[p]
                for q in range(indptr[j], indptr[j + 1]):
                    s += v * vals[q] * X[b, rows[q]] * Sinv[cols[q], a]
            M[i, j] = s
            M[j, i] = s
    return out


def net_max(coef, feat):
    cdef const double[:, ::1] C = np.ascontiguousarray(coef, dtype=np.float64)
    cdef const double[:, ::1] F = np.ascontiguousarray(feat, dtype=np.float64)
    cdef Py_ssize_t na = C.shape[0], nb = F.shape[0], q = C.shape[1]
    cdef Py_ssize_t i, j, t, bi = -1, bj = -1
    cdef double best = -1e300, s
    if F.shape[1] != q:
        raise ValueError("coefficient and feature widths differ")
    if q == 4 and na > 0 and nb > 0:
        # qubit case: feature columns stored contiguously, row maxima first and
        # the argmax only for rows that improve on the running best
        FT = np.ascontiguousarray(np.asarray(F).T)
        return _net_max4(C, FT)
    for i in range(na):
        for j in range(nb):
            s = 0.0
            for t in range(q):
                s += C[i, t] * F[j, t]
            if s > best:
                best = s
                bi = i
                bj = j
    return float(best), int(bi), int(bj)


cdef tuple _net_max4(const double[:, ::1] C, const double[:, ::1] FT):
    cdef Py_ssize_t na = C.shape[0], nb = FT.shape[1]
    cdef Py_ssize_t i, j, bi = -1, bj = -1
    cdef double best = -1e300, s, c0, c1, c2, c3, rb
    cdef const double* f0 = &FT[0, 0]
    cdef const double* f1 = &FT[1, 0]
    cdef const double* f2 = &FT[2, 0]
    cdef const double* f3 = &FT[3, 0]
    for i in range(na):
        c0 = C[i, 0]
        c1 = C[i, 1]
        c2 = C[i, 2]
        c3 = C[i, 3]
        rb = -1e300
        for j in range(nb):
            s = c0 * f0[j] + c1 * f1[j] + c2 * f2[j] + c3 * f3[j]
            rb = s if s > rb else rb
        if rb > best:
            best = rb
            bi = i
            for j in range(nb):
                s = c0 * f0[j] + c1 * f1[j] + c2 * f2[j] + c3 * f3[j]
                if s == rb:
                    bj = j
                    break
    return float(best), int(bi), int(bj)
