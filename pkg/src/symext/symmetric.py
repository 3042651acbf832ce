"""Occupation-number basis of the symmetric subspace Sym^k(C^b).

A basis vector ``|n>`` with ``sum(n) == k`` is the normalized sum of all
product vectors whose multiset of local labels is described by ``n``.
Operators on ``A (x) Sym^k(B)`` are indexed ``(a, n)`` with ``a`` major.
"""

from __future__ import annotations

import itertools
import math
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .linalg import DensityMatrix, HermitianOp


def _compositions(total: int, parts: int):
    # All tuples of `parts` non-negative ints summing to `total`, lexicographic.
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def multinomial(occ) -> int:
    out = math.factorial(sum(occ))
    for n in occ:
        out //= math.factorial(n)
    return out


class SymBasis:
    """Occupation vectors of ``Sym^k(C^b)`` in lexicographic order."""

    def __init__(self, local_dim: int, level: int):
        if local_dim < 1 or level < 0:
            raise ValueError("need local_dim >= 1 and level >= 0")
        self.local_dim = int(local_dim)
        self.level = int(level)
        self.occupations = list(_compositions(self.level, self.local_dim))
        self.index = {occ: i for i, occ in enumerate(self.occupations)}

    def __len__(self) -> int:
        return len(self.occupations)

    @property
    def size(self) -> int:
        return len(self.occupations)

    def __repr__(self) -> str:
        return f"SymBasis(local_dim={self.local_dim}, level={self.level}, size={self.size})"

    @cached_property
    def isometry(self) -> sp.csr_matrix:
        """Sparse ``b**k x size`` isometry onto the symmetric subspace."""
        b, k = self.local_dim, self.level
        rows, cols, vals = [], [], []
        for flat, seq in enumerate(itertools.product(range(b), repeat=k)):
            occ = [0] * b
            for s in seq:
                occ[s] += 1
            occ = tuple(occ)
            rows.append(flat)
            cols.append(self.index[occ])
            vals.append(1.0 / math.sqrt(multinomial(occ)))
        return sp.csr_matrix((vals, (rows, cols)), shape=(b**k, self.size))

    def lowering(self, i: int) -> sp.csr_matrix:
        """Map ``|n> -> sqrt(n_i) |n - e_i>`` into ``Sym^(k-1)``."""
        lower = SymBasis(self.local_dim, self.level - 1)
        rows, cols, vals = [], [], []
        for c, occ in enumerate(self.occupations):
            if occ[i] == 0:
                continue
            red = list(occ)
            red[i] -= 1
            rows.append(lower.index[tuple(red)])
            cols.append(c)
            vals.append(math.sqrt(occ[i]))
        return sp.csr_matrix((vals, (rows, cols)), shape=(lower.size, self.size))

    def marginal_kraus(self) -> list[sp.csr_matrix]:
        """Kraus operators ``K_p`` (``b x size``) with
        ``tr_{B_2..B_k} V Y V^dag = (1/k) sum_p K_p Y K_p^dag``.

        ``p`` runs over ``Sym^(k-1)``; ``K_p = sum_i sqrt(p_i + 1) |i><p + e_i|``.
        """
        if self.level < 1:
            raise ValueError("marginal needs level >= 1")
        b = self.local_dim
        lower = SymBasis(b, self.level - 1)
        out = []
        for p in lower.occupations:
            rows, cols, vals = [], [], []
            for i in range(b):
                up = list(p)
                up[i] += 1
                rows.append(i)
                cols.append(self.index[tuple(up)])
                vals.append(math.sqrt(p[i] + 1))
            out.append(sp.csr_matrix((vals, (rows, cols)), shape=(b, self.size)))
        return out

    def split_isometry(self, j: int) -> sp.csr_matrix:
        """Embedding ``Sym^k -> Sym^j (x) Sym^(k-j)`` (rows indexed ``(m1, m2)``)."""
        k = self.level
        if not 0 <= j <= k:
            raise ValueError("split point out of range")
        left, right = SymBasis(self.local_dim, j), SymBasis(self.local_dim, k - j)
        rows, cols, vals = [], [], []
        for c, occ in enumerate(self.occupations):
            denom = multinomial(occ)
            for m1 in left.occupations:
                m2 = tuple(a - b for a, b in zip(occ, m1))
                if min(m2) < 0:
                    continue
                rows.append(left.index[m1] * right.size + right.index[m2])
                cols.append(c)
                vals.append(math.sqrt(multinomial(m1) * multinomial(m2) / denom))
        return sp.csr_matrix((vals, (rows, cols)), shape=(left.size * right.size, self.size))


def _check_sym_operand(y: np.ndarray, dim_a: int, basis: SymBasis):
    if y.shape != (dim_a * basis.size,) * 2:
        raise ValueError(
            f"operand side {y.shape[0]} != dim_a * binomial = {dim_a * basis.size}"
        )


def sym_embed(y, dim_a: int, dim_b: int, k: int) -> HermitianOp:
    """Lift an operator on ``A (x) Sym^k(B)`` to ``A (x) B^k``."""
    basis = SymBasis(dim_b, k)
    m = y.matrix if isinstance(y, HermitianOp) else np.asarray(y, dtype=complex)
    _check_sym_operand(m, dim_a, basis)
    v = sp.kron(sp.identity(dim_a, format="csr"), basis.isometry, format="csr")
    out = v @ (v @ m.T.conj()).T.conj()  # V m V^dag without densifying V
    out = np.asarray(out)
    dims = [dim_a] + [dim_b] * k
    if isinstance(y, DensityMatrix):
        return DensityMatrix(out, dims, check=False)
    return HermitianOp(out, dims, check=False)


def sym_marginal_matrix(m: np.ndarray, dim_a: int, basis: SymBasis) -> np.ndarray:
    """(A, B_1) marginal of the lifted operator, computed in the occupation basis."""
    b, k = basis.local_dim, basis.level
    _check_sym_operand(m, dim_a, basis)
    if k == 1:
        return np.array(m, dtype=complex)
    lower = SymBasis(b, k - 1)
    # up[p, i] = index of p + e_i ; w[p, i] = sqrt(p_i + 1)
    up = np.empty((lower.size, b), dtype=np.intp)
    w = np.empty((lower.size, b))
    for r, p in enumerate(lower.occupations):
        for i in range(b):
            q = list(p)
            q[i] += 1
            up[r, i] = basis.index[tuple(q)]
            w[r, i] = math.sqrt(p[i] + 1)
    t = m.reshape(dim_a, basis.size, dim_a, basis.size)
    # sub[a, p, i, a', j] = Y[(a, p+e_i), (a', p+e_j)]
    sub = t[:, up[:, :, None], :, up[:, None, :]]  # (p, i, j, a, a')
    sub = sub * (w[:, :, None] * w[:, None, :])[..., None, None]
    out = sub.sum(axis=0) / k  # (i, j, a, a')
    return out.transpose(2, 0, 3, 1).reshape(dim_a * b, dim_a * b)


def sym_marginal(y, dim_a: int, dim_b: int, k: int) -> HermitianOp:
    """``partial_trace(sym_embed(y), keep=[0, 1])`` without building ``B^k``."""
    basis = SymBasis(dim_b, k)
    m = y.matrix if isinstance(y, HermitianOp) else np.asarray(y, dtype=complex)
    out = sym_marginal_matrix(m, dim_a, basis)
    if isinstance(y, DensityMatrix):
        return DensityMatrix(out, [dim_a, dim_b], check=False)
    return HermitianOp(out, [dim_a, dim_b], check=False)
