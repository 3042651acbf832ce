"""Primal-dual interior-point solver for block-diagonal SDPs.

Standard form (``sense="max"``)::

    primal:  max <C, X>   s.t.  <A_i, X> = b_i,  X >= 0
    dual:    min b^T y    s.t.  sum_i y_i A_i - C = S >= 0

Search directions use the HKM (XZ) scaling with Mehrotra's
predictor-corrector and an infeasible start.  Complex Hermitian problems
are pushed through the real embedding ``[[Re H, -Im H], [Im H, Re H]]``;
see :class:`LmiBuilder` for the complex front end.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import _ext
from .linalg import HermitianOp

log = logging.getLogger(__name__)


class SdpStatus(str, enum.Enum):
    OPTIMAL = "OPTIMAL"
    PRIMAL_INFEASIBLE = "PRIMAL_INFEASIBLE"
    DUAL_INFEASIBLE = "DUAL_INFEASIBLE"
    NUMERICAL_FAILURE = "NUMERICAL_FAILURE"


class SdpError(RuntimeError):
    """Raised by callers that need an OPTIMAL solve and did not get one."""

    def __init__(self, solution: "SdpSolution"):
        super().__init__(f"SDP solve ended with status {solution.status.value}")
        self.solution = solution


def embed_complex(h) -> np.ndarray:
    """Real symmetric embedding ``[[Re H, -Im H], [Im H, Re H]]``."""
    m = h.matrix if isinstance(h, HermitianOp) else np.asarray(h)
    re, im = m.real, m.imag
    return np.block([[re, -im], [im, re]])


def unembed_primal(z: np.ndarray) -> np.ndarray:
    """``J^dag Z J`` with ``J = [I; -iI]``; satisfies
    ``<embed_complex(F), Z> == Re tr(F @ unembed_primal(Z))``."""
    n = z.shape[0] // 2
    return (z[:n, :n] + z[n:, n:]) + 1j * (z[n:, :n] - z[:n, n:])


def unembed_dual(s: np.ndarray) -> np.ndarray:
    """Inverse of :func:`embed_complex` on structured matrices."""
    n = s.shape[0] // 2
    return 0.5 * (s[:n, :n] + s[n:, n:]) + 0.5j * (s[n:, :n] - s[:n, n:])


@dataclass
class SdpProblem:
    """Standard-form SDP with constraint matrices stored block-wise.

    ``A[b]`` is a sparse ``m x n_b**2`` matrix whose row ``i`` is the
    row-major flattening of the (full, symmetric) block ``b`` of ``A_i``.

    ``factors[b]``, when given, is a pair ``(K, F)`` with ``K`` a sparse
    ``(P s) x n_b`` stack of ``P`` maps and ``F`` an ``m x s x s`` array
    such that block ``b`` of ``A_i`` equals ``sum_p K_p^T F_i K_p``.  It is
    only used to speed up the Schur complement; ``A`` stays authoritative.
    """

    blocks: list[int]
    C: list[np.ndarray]
    A: list[sp.csr_matrix]
    b: np.ndarray
    sense: str = "max"
    factors: list | None = None

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float)
        self.C = [np.asarray(c, dtype=float) for c in self.C]
        self.A = [sp.csr_matrix(a, dtype=float) for a in self.A]
        if self.sense not in ("max", "min"):
            raise ValueError("sense must be 'max' or 'min'")
        if not (len(self.blocks) == len(self.C) == len(self.A)):
            raise ValueError("blocks, C and A must have one entry per block")
        m = len(self.b)
        for n, c, a in zip(self.blocks, self.C, self.A):
            if c.shape != (n, n) or a.shape != (m, n * n):
                raise ValueError("block data has inconsistent shape")
            if not np.allclose(c, c.T, atol=1e-12):
                raise ValueError("objective blocks must be symmetric")
            t = np.arange(n * n).reshape(n, n).T.ravel()
            if a.nnz and abs(a - a[:, t]).max() > 1e-12:
                raise ValueError("constraint blocks must be symmetric")
        if self.factors is None:
            self.factors = [None] * len(self.blocks)
        if len(self.factors) != len(self.blocks):
            raise ValueError("factors must have one entry per block")
        for n, f in zip(self.blocks, self.factors):
            if f is not None:
                K, F = f
                if F.ndim != 3 or F.shape[0] != m or F.shape[1] != F.shape[2] \
                        or K.shape[1] != n or K.shape[0] % F.shape[1]:
                    raise ValueError("block factor has inconsistent shape")

    @property
    def m(self) -> int:
        return len(self.b)

    @classmethod
    def from_dense(cls, blocks, C, constraints, sense="max") -> "SdpProblem":
        """Build from ``constraints = [(list_of_block_matrices, b_i), ...]``."""
        m = len(constraints)
        A = []
        for k, n in enumerate(blocks):
            rows = [np.asarray(con[0][k], dtype=float).reshape(1, n * n) for con in constraints]
            A.append(sp.csr_matrix(np.vstack(rows)) if rows else sp.csr_matrix((0, n * n)))
        b = np.array([con[1] for con in constraints], dtype=float)
        return cls(list(blocks), [np.asarray(c, dtype=float) for c in C], A, b.reshape(m), sense)

    def constraint(self, i: int) -> list[np.ndarray]:
        return [a.getrow(i).toarray().reshape(n, n) for n, a in zip(self.blocks, self.A)]

    @property
    def constraints(self):
        return [(self.constraint(i), float(self.b[i])) for i in range(self.m)]


@dataclass
class SdpSolution:
    status: SdpStatus
    X: list[np.ndarray]
    y: np.ndarray
    S: list[np.ndarray]
    primal_value: float
    dual_value: float
    gap: float
    iterations: int
    primal_infeasibility: float = math.nan
    dual_infeasibility: float = math.nan
    certificate: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status is SdpStatus.OPTIMAL

    @property
    def value(self) -> float:
        return 0.5 * (self.primal_value + self.dual_value)


# --- block helpers -----------------------------------------------------------


def _inner(U, V) -> float:
    return float(sum(np.vdot(u, v) for u, v in zip(U, V)))


def _sym(m):
    return 0.5 * (m + m.T)


def _chol_inv(x) -> np.ndarray:
    """Inverse of the lower Cholesky factor of ``x``."""
    L = np.linalg.cholesky(x)
    inv, info = sla.lapack.dtrtri(L, lower=1)
    if info:
        raise np.linalg.LinAlgError("singular Cholesky factor")
    return np.tril(inv)


def _max_step(Linvs, dXs) -> float:
    """Largest ``a`` keeping ``X + a dX`` PSD, given inverse Cholesky factors of ``X``."""
    alpha = math.inf
    for li, dx in zip(Linvs, dXs):
        t = _sym(li @ dx @ li.T)
        if t.shape[0] > 200:
            lam = sla.eigh(t, eigvals_only=True, subset_by_index=[0, 0], driver="evr")[0]
        else:
            lam = np.linalg.eigvalsh(t)[0]
        if lam < 0:
            alpha = min(alpha, -1.0 / lam)
    return alpha


class _Schur:
    """Per-block Schur complement assembly with route selection."""

    def __init__(self, n: int, amat: sp.csr_matrix, factor=None):
        self.n = n
        self.amat = amat
        m = amat.shape[0]
        self.indptr = np.ascontiguousarray(amat.indptr, dtype=np.intp)
        flat = amat.indices.astype(np.intp)
        self.rows = np.ascontiguousarray(flat // n)
        self.cols = np.ascontiguousarray(flat % n)
        self.vals = np.ascontiguousarray(amat.data, dtype=float)
        nnz = max(amat.nnz, 1)
        avg = nnz / max(m, 1)
        cost_col = m * (n * n * avg + nnz + 3e4)
        cost_dense = m * (2.0 * n**3 + nnz + 3e4)
        cost_f3 = 0.5 * m * m * avg * avg if _ext.BACKEND == "cython" else math.inf
        routes = [("f3", cost_f3), ("col", cost_col), ("dense", cost_dense)]
        if factor is not None:
            K, F = factor
            self.K, self.F = sp.csr_matrix(K), np.asarray(F, float)
            s = F.shape[1]
            P = K.shape[0] // s
            # the P^2 s^4 contraction runs as one BLAS product
            routes.append(("kraus", 2.0 * P * s * (self.K.nnz + n) + 0.1 * (P * s * s) ** 2 + m * m * s * s))
        self.route = min(routes, key=lambda t: t[1])[0]

    def _assemble_kraus(self, X, Sinv) -> np.ndarray:
        # M_ij = tr((1 (x) F_i) K X K^T (1 (x) F_j) K Sinv K^T), streamed over row chunks of K
        F = self.F
        m, s = F.shape[0], F.shape[1]
        P = self.K.shape[0] // s
        R = np.zeros((s * s, s * s))
        step = max(1, int(2e6 // (P * s * s)))
        for p0 in range(0, P, step):
            kc = self.K[p0 * s:min(P, p0 + step) * s]
            c = kc.shape[0] // s
            y1 = (self.K @ (kc @ X).T).T
            y2 = (self.K @ (kc @ Sinv).T).T
            a1 = y1.reshape(c, s, P, s).transpose(1, 3, 0, 2).reshape(s * s, c * P)
            a2 = y2.reshape(c, s, P, s).transpose(0, 2, 3, 1).reshape(c * P, s * s)
            R += a1 @ a2
        # R[(a, b), (c, d)];  M_ij = sum F_i[d, a] F_j[b, c] R[a, b, c, d]
        T = np.tensordot(F, R.reshape(s, s, s, s), axes=([1, 2], [1, 2]))  # (j, a, d)
        M = F.reshape(m, s * s) @ T.transpose(0, 2, 1).reshape(m, s * s).T
        return 0.5 * (M + M.T)

    def assemble(self, X, Sinv) -> np.ndarray:
        if self.route == "kraus":
            return self._assemble_kraus(X, Sinv)
        if self.route == "f3":
            return _ext.schur_sparse(self.indptr, self.rows, self.cols, self.vals,
                                     np.ascontiguousarray(X), np.ascontiguousarray(Sinv))
        if self.route == "col":
            return _ext.fallback.schur_sparse(self.indptr, self.rows, self.cols, self.vals, X, Sinv)
        n, m = self.n, self.amat.shape[0]
        M = np.empty((m, m))
        for j in range(m):
            aj = self.amat.getrow(j).toarray().reshape(n, n)
            M[:, j] = self.amat @ (X @ aj @ Sinv).ravel()
        return 0.5 * (M + M.T)


def solve(
    p: SdpProblem,
    gap_tol: float = 1e-8,
    feas_tol: float = 1e-8,
    max_iters: int = 200,
    infeas_tol: float = 1e-9,
) -> SdpSolution:
    """Solve ``p`` to relative duality gap ``gap_tol`` and feasibility ``feas_tol``."""
    sign = 1.0 if p.sense == "max" else -1.0
    C = [sign * c for c in p.C]
    b = p.b
    m = p.m
    nb = len(p.blocks)
    ntot = sum(p.blocks)
    AT = [a.T.tocsr() for a in p.A]

    def A_op(Xs):
        out = np.zeros(m)
        for a, x in zip(p.A, Xs):
            out += a @ x.ravel()
        return out

    def At_op(y):
        return [(at @ y).reshape(n, n) for at, n in zip(AT, p.blocks)]

    schur = [_Schur(n, a, f) for n, a, f in zip(p.blocks, p.A, p.factors)]
    normb = 1.0 + np.linalg.norm(b)
    normC = 1.0 + math.sqrt(sum(np.sum(c * c) for c in C))

    # SDPT3-style infeasible starting point
    row_norms = np.sqrt(sum(np.asarray(a.multiply(a).sum(axis=1)).ravel() for a in p.A)) if m else np.zeros(0)
    nmax = max(p.blocks)
    xi = max(10.0, math.sqrt(nmax))
    if m:
        xi = max(xi, float(np.max(math.sqrt(nmax) * (1 + np.abs(b)) / (1 + row_norms))))
    eta = max(10.0, math.sqrt(nmax), normC, float(row_norms.max()) if m else 0.0)
    X = [xi * np.eye(n) for n in p.blocks]
    S = [eta * np.eye(n) for n in p.blocks]
    y = np.zeros(m)

    status = SdpStatus.NUMERICAL_FAILURE
    cert: dict = {}
    it = 0
    pinf = dinf = rel_gap = math.inf
    for it in range(1, max_iters + 1):
        AX = A_op(X)
        Aty = At_op(y)
        Rp = b - AX
        Rd = [c + s - a for c, s, a in zip(C, S, Aty)]
        pobj = _inner(C, X)
        dobj = float(b @ y)
        pinf = np.linalg.norm(Rp) / normb
        dinf = math.sqrt(sum(np.sum(r * r) for r in Rd)) / normC
        rel_gap = abs(pobj - dobj) / (1.0 + abs(pobj))
        if pinf <= feas_tol and dinf <= feas_tol and rel_gap <= gap_tol:
            status = SdpStatus.OPTIMAL
            break
        # Farkas-type certificates
        if dobj < 0 and m:
            yh = y / -dobj
            lam = min(np.linalg.eigvalsh(_sym(t))[0] for t in At_op(yh))
            if lam >= -infeas_tol:
                status = SdpStatus.PRIMAL_INFEASIBLE
                cert = {"ray": yh, "min_eig": lam}
                break
        if pobj > 0:
            xs = [x / pobj for x in X]
            resid = np.linalg.norm(A_op(xs))
            if resid <= infeas_tol * 10 and pobj > 1e6:
                status = SdpStatus.DUAL_INFEASIBLE
                cert = {"ray": xs, "residual": resid}
                break

        try:
            Linv = [_chol_inv(s) for s in S]
        except np.linalg.LinAlgError:
            log.debug("dual iterate lost definiteness at iteration %d", it)
            break
        Sinv = [li.T @ li for li in Linv]
        mu = _inner(X, S) / ntot

        M = np.zeros((m, m))
        for sc, x, si in zip(schur, X, Sinv):
            M += sc.assemble(x, si)
        try:
            fac = sla.cho_factor(M, lower=True, check_finite=False)
            msolve = lambda r: sla.cho_solve(fac, r, check_finite=False)
        except (np.linalg.LinAlgError, ValueError):
            w, V = np.linalg.eigh(M)
            keep = w > w.max() * 1e-14
            msolve = lambda r: V[:, keep] @ ((V[:, keep].T @ r) / w[keep])

        XRdS = [x @ r @ si for x, r, si in zip(X, Rd, Sinv)]

        def direction(sigma_mu, corr):
            rhs_mats = [sigma_mu * si + _sym(t) for si, t in zip(Sinv, XRdS)]
            if corr is not None:
                rhs_mats = [r - _sym(c) for r, c in zip(rhs_mats, corr)]
            dy = msolve(A_op(rhs_mats) - b)
            dS = [a - r for a, r in zip(At_op(dy), Rd)]
            dX = [sigma_mu * si - x - _sym(x @ ds @ si) for si, x, ds in zip(Sinv, X, dS)]
            if corr is not None:
                dX = [d - _sym(c) for d, c in zip(dX, corr)]
            return dX, dy, dS

        try:
            LXinv = [_chol_inv(x) for x in X]
            dXa, dya, dSa = direction(0.0, None)
            ap = min(1.0, _max_step(LXinv, dXa))
            ad = min(1.0, _max_step(Linv, dSa))
            mu_aff = _inner([x + ap * d for x, d in zip(X, dXa)],
                            [s + ad * d for s, d in zip(S, dSa)]) / ntot
            sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0
            corr = [dx @ ds @ si for dx, ds, si in zip(dXa, dSa, Sinv)]
            dX, dy, dS = direction(sigma * mu, corr)
            gamma = 0.9 + 0.09 * min(ap, ad)
            ap = min(1.0, gamma * _max_step(LXinv, dX))
            ad = min(1.0, gamma * _max_step(Linv, dS))
        except np.linalg.LinAlgError:
            log.debug("primal iterate lost definiteness at iteration %d", it)
            break
        if max(ap, ad) < 1e-10:
            log.debug("step length stalled at iteration %d", it)
            break
        X = [x + ap * d for x, d in zip(X, dX)]
        y = y + ad * dy
        S = [s + ad * d for s, d in zip(S, dS)]
        X = [_sym(x) for x in X]
        S = [_sym(s) for s in S]
    else:
        it = max_iters

    pobj = _inner(C, X)
    dobj = float(b @ y)
    gap = abs(pobj - dobj)
    if p.sense == "min":
        pobj, dobj, y = -pobj, -dobj, -y
        S = [-s for s in S]
    return SdpSolution(
        status=status, X=X, y=y, S=S, primal_value=pobj, dual_value=dobj, gap=gap,
        iterations=it, primal_infeasibility=pinf, dual_infeasibility=dinf, certificate=cert,
    )


# --- complex LMI front end ------------------------------------------------------


def _embed_columns(images: sp.spmatrix, n: int) -> sp.csr_matrix:
    """Real-embed each column (row-major n x n complex) to a (2n)^2 vector."""
    coo = sp.coo_matrix(images)
    p, q = np.divmod(coo.row, n)
    re, im = coo.data.real, coo.data.imag
    N = 2 * n
    rows = np.concatenate([p * N + q, (p + n) * N + q + n, p * N + q + n, (p + n) * N + q])
    cols = np.tile(coo.col, 4)
    vals = np.concatenate([re, re, -im, im])
    keep = vals != 0
    return sp.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(N * N, images.shape[1]))


@dataclass
class _Block:
    name: str
    n: int
    complex: bool


class LmiBuilder:
    """Linear matrix inequality problems over real parameters ``y``::

        min  c^T y   s.t.   sum_i y_i F_{b,i} - G_b  >= 0   for every block b

    ``F_{b,i}`` are given as the columns of a sparse ``n_b**2 x nvars``
    matrix (row-major flattening); complex blocks must be Hermitian and are
    embedded into real blocks of twice the side.
    """

    def __init__(self, nvars: int):
        self.nvars = int(nvars)
        self.c = np.zeros(self.nvars)
        self._blocks: list[_Block] = []
        self._A: list[sp.csr_matrix] = []
        self._C: list[np.ndarray] = []
        self._factors: list = []

    def add_block(self, name: str, images, offset, complex: bool = True) -> None:
        images = sp.csr_matrix(images)
        offset = np.asarray(offset)
        n = offset.shape[0]
        if images.shape != (n * n, self.nvars):
            raise ValueError(f"block {name!r}: images shape {images.shape} != ({n * n}, {self.nvars})")
        if complex:
            amat = _embed_columns(images, n).T.tocsr()
            cmat = embed_complex(offset)
            self._blocks.append(_Block(name, n, True))
        else:
            amat = images.real.T.tocsr()
            cmat = np.asarray(offset.real, dtype=float)
            self._blocks.append(_Block(name, n, False))
        self._A.append(amat)
        self._C.append(cmat)
        self._factors.append(None)

    def add_kraus_block(self, name: str, kraus, small_images, offset) -> None:
        """Complex block with ``F_i = sum_p K_p^dag E_i K_p``.

        ``small_images`` holds the ``E_i`` as columns (``s**2 x nvars``) and
        every ``K_p`` is ``s x n``.  The factored form is kept for the solver.
        """
        kraus = [sp.csr_matrix(K) for K in kraus]
        small_images = sp.csr_matrix(small_images)
        s = kraus[0].shape[0]
        adj = sum(sp.kron(K.conj().T, K.T, format="csr") for K in kraus)
        self.add_block(name, adj @ small_images, offset, complex=True)
        emb = sp.vstack([sp.bmat([[K.real, -K.imag], [K.imag, K.real]]) for K in kraus], format="csr")
        emb.eliminate_zeros()
        F = _embed_columns(small_images, s).T.toarray().reshape(self.nvars, 2 * s, 2 * s)
        self._factors[-1] = (emb, F)

    def set_objective(self, c) -> None:
        self.c = np.asarray(c, dtype=float).reshape(self.nvars)

    @property
    def block_names(self) -> list[str]:
        return [blk.name for blk in self._blocks]

    def problem(self) -> SdpProblem:
        blocks = [2 * blk.n if blk.complex else blk.n for blk in self._blocks]
        return SdpProblem(blocks, list(self._C), list(self._A), self.c.copy(), "max",
                          list(self._factors))

    def slack(self, sol: SdpSolution, name: str) -> np.ndarray:
        """LMI value ``sum_i y_i F_i - G`` of block ``name`` (complex if embedded)."""
        k = self.block_names.index(name)
        s = sol.S[k]
        return unembed_dual(s) if self._blocks[k].complex else s

    def multiplier(self, sol: SdpSolution, name: str) -> np.ndarray:
        """Dual multiplier ``W_b`` with ``sum_b Re tr(F_{b,i} W_b) = c_i`` at optimum."""
        k = self.block_names.index(name)
        z = sol.X[k]
        return unembed_primal(z) if self._blocks[k].complex else z

    def solve(self, **tols) -> SdpSolution:
        return solve(self.problem(), **tols)
