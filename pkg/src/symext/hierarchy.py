"""Symmetric-extension programs, level bounds and witness extraction.

The extension program at level ``k`` is::

    max tr X   s.t.   X >= 0,   X_{A:B_j} <= rho   for every j

With Bose symmetry (default) ``X`` lives on ``A (x) Sym^k(B)`` and the
``k`` marginal constraints collapse into one.  Without it, ``X`` ranges
over the permutation-invariant operators on ``A (x) B^k``: the invariance
equalities are solved exactly by parameterizing ``X`` in an orthonormal
basis of orbit sums, so the SDP carries no redundant equality rows.

All programs are posed as LMIs in the real coordinates of ``X`` and
handed to :class:`symext.sdp.LmiBuilder`; the LMI is the dual side of the
standard form, so the primal multipliers are the witness certificate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .linalg import (
    DensityMatrix,
    HermitianOp,
    as_density,
    hermitian_basis,
    hermitian_coords,
    ptrace_matrix,
    symmetrize_tail,
)
from .sdp import LmiBuilder, SdpSolution, SdpStatus
from .symmetric import SymBasis, sym_marginal_matrix

LN2 = math.log(2.0)
# Squashed-entanglement faithfulness gives E_sq >= d^2 / (16 ln 2) in bits;
# monogamy spreads at most log2|A| over the k copies.
LOCC_CONSTANT = 16.0 * LN2
# ||X||_LOCC >= ||X||_2 / sqrt(153)
FROBENIUS_FACTOR = 153.0
DEFAULT_MAX_SIDE = 2000
# Programs that carry the coordinates of X have side**2 LMI variables and a
# dense Schur matrix of that order squared; 6000 variables is about 300 MB.
MAX_LMI_VARS = 6000


class DimensionCapError(ValueError):
    """The extension program would exceed the configured size caps."""


def _check_vars(nvars: int, what: str) -> None:
    if nvars > MAX_LMI_VARS:
        raise DimensionCapError(f"{what} needs {nvars} LMI variables (limit {MAX_LMI_VARS})")


def _constant(dim_a: int, norm_kind: str) -> float:
    if norm_kind not in ("locc", "frobenius"):
        raise ValueError(f"norm_kind must be 'locc' or 'frobenius', got {norm_kind!r}")
    c = LOCC_CONSTANT * math.log2(dim_a)
    return c * FROBENIUS_FACTOR if norm_kind == "frobenius" else c


def _ceil(x: float) -> int:
    r = round(x)
    return int(r) if abs(x - r) <= 1e-9 * max(1.0, abs(x)) else math.ceil(x)


def required_k(eps: float, dim_a: int, norm_kind: str = "locc") -> int:
    """Smallest level whose extendible states are all eps-close to separable."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    if dim_a < 2:
        raise ValueError("dim_a must be >= 2")
    return _ceil(_constant(dim_a, norm_kind) / eps**2)


def definetti_bound(k: int, dim_a: int, norm_kind: str = "locc") -> float:
    """Distance bound ``sqrt(c log2|A| / k)`` for k-extendible states."""
    return math.sqrt(_constant(dim_a, norm_kind) / k)


def ckmr_bound(dim_b: int, k: int) -> float:
    """Trace-norm de Finetti bound ``4 |B|^2 / k``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return 4.0 * dim_b**2 / k


def definetti_crossover(dim_a: int, dim_b: int, norm_kind: str = "frobenius") -> dict:
    """Compare the two closed forms as functions of ``k``.

    ``sqrt(c/k) < 4|B|^2/k`` exactly when ``k < 16 |B|^4 / c``, so the
    square-root bound is the tighter one below ``k_cross`` and the
    ``1/k`` bound wins above it.  Also reports the first level at which each
    bound drops below 2 (the trivial value).
    """
    c = _constant(dim_a, norm_kind)
    k_cross = 16.0 * dim_b**4 / c
    return {
        "k_cross": k_cross,
        "sqrt_bound_tighter_below": math.ceil(k_cross) if k_cross > 1 else 1,
        "sqrt_bound_nontrivial_from": _ceil(c / 4.0) if c / 4.0 > 1 else 1,
        "ckmr_nontrivial_from": 2 * dim_b**2 + 1,
    }


@dataclass(frozen=True)
class ExtensionOptions:
    k: int = 2
    bose: bool = True
    ppt_cuts: bool = False
    max_side: int = DEFAULT_MAX_SIDE

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("extension level k must be >= 1")


# --- sparse vec-space maps (row-major flattening) ---------------------------


def _kraus_map(kraus) -> sp.csr_matrix:
    """vec(K Y K^dag) summed over ``kraus``."""
    out = None
    for K in kraus:
        K = sp.csr_matrix(K)
        term = sp.kron(K, K.conj(), format="csr")
        out = term if out is None else out + term
    return out


def _pt_perm(dims, sys) -> np.ndarray:
    n = len(dims)
    idx = np.arange(int(np.prod(dims)) ** 2).reshape(tuple(dims) * 2)
    perm = list(range(2 * n))
    for i in sys:
        perm[i], perm[i + n] = perm[i + n], perm[i]
    return idx.transpose(perm).ravel()


def _perm_matrix(perm: np.ndarray) -> sp.csr_matrix:
    n = len(perm)
    return sp.csr_matrix((np.ones(n), (np.arange(n), perm)), shape=(n, n))


def _ptrace_map(dims, keep) -> sp.csr_matrix:
    """vec(ptrace(X, keep)) as a sparse map on vec(X)."""
    dims = tuple(dims)
    n = len(dims)
    N = int(np.prod(dims))
    kd = [dims[i] for i in keep]
    K = int(np.prod(kd)) if kd else 1
    rows = np.arange(N)
    digits = np.array(np.unravel_index(rows, dims))  # (n, N)
    kept = np.ravel_multi_index(digits[list(keep)], kd) if kd else np.zeros(N, dtype=int)
    traced = [i for i in range(n) if i not in keep]
    tr_idx = (np.ravel_multi_index(digits[traced], [dims[i] for i in traced])
              if traced else np.zeros(N, dtype=int))
    # pair rows r, c with equal traced digits
    order = np.argsort(tr_idx, kind="stable")
    groups = np.split(order, np.flatnonzero(np.diff(tr_idx[order])) + 1)
    out_rows, out_cols = [], []
    for g in groups:
        r, c = np.meshgrid(g, g, indexing="ij")
        out_rows.append((kept[r] * K + kept[c]).ravel())
        out_cols.append((r * N + c).ravel())
    out_rows = np.concatenate(out_rows)
    out_cols = np.concatenate(out_cols)
    return sp.csr_matrix((np.ones(len(out_rows)), (out_rows, out_cols)), shape=(K * K, N * N))


def _basis_matrix(entries, n: int) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for j, elem in enumerate(entries):
        for p, q, v in elem:
            rows.append(p * n + q)
            cols.append(j)
            vals.append(v)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n * n, len(entries)), dtype=complex)


def _traceless(G: sp.csr_matrix, n: int) -> sp.csr_matrix:
    """Replace trace-carrying columns by an orthonormal traceless combination."""
    diag = np.arange(n) * (n + 1)
    t = np.asarray(G[diag, :].sum(axis=0)).ravel().real
    hot = np.flatnonzero(np.abs(t) > 1e-14)
    cold = np.setdiff1d(np.arange(G.shape[1]), hot)
    q, _ = np.linalg.qr(t[hot].reshape(-1, 1), mode="complete")
    mix = G[:, hot] @ sp.csr_matrix(q[:, 1:])
    return sp.hstack([G[:, cold], mix], format="csr")


def _orbit_basis(dim_a: int, dim_b: int, k: int) -> sp.csr_matrix:
    """Orthonormal Hermitian basis of B-permutation-invariant operators."""
    dims = [dim_a] + [dim_b] * k
    N = int(np.prod(dims))
    digits = np.array(np.unravel_index(np.arange(N), dims))
    label = None
    for perm in itertools.permutations(range(1, k + 1)):
        pd = digits[[0] + list(perm)]
        idx = np.ravel_multi_index(pd, dims)
        code = (idx[:, None] * N + idx[None, :]).ravel()
        label = code if label is None else np.minimum(label, code)
    # label[q] is the smallest pair index in the orbit of pair q
    tlabel = label.reshape(N, N).T.ravel()
    entries = []
    uniq, inv = np.unique(label, return_inverse=True)
    members = np.split(np.argsort(inv, kind="stable"), np.cumsum(np.bincount(inv))[:-1])
    seen = set()
    for lab, mem in zip(uniq, members):
        if lab in seen:
            continue
        tl = tlabel[mem[0]]
        size = len(mem)
        rc = [divmod(int(q), N) for q in mem]
        if tl == lab:
            s = 1.0 / math.sqrt(size)
            entries.append([(r, c, s + 0j) for r, c in rc])
        else:
            seen.add(tl)
            s = 1.0 / math.sqrt(2 * size)
            rc_t = [(c, r) for r, c in rc]
            entries.append([(r, c, s + 0j) for r, c in rc] + [(r, c, s + 0j) for r, c in rc_t])
            entries.append([(r, c, 1j * s) for r, c in rc] + [(r, c, -1j * s) for r, c in rc_t])
        seen.add(lab)
    return _basis_matrix(entries, N)


class ExtensionSpace:
    """Parameterization of the extension variable and its linear images."""

    def __init__(self, dim_a: int, dim_b: int, opts: ExtensionOptions):
        self.dim_a, self.dim_b, self.opts = dim_a, dim_b, opts
        k = opts.k
        if opts.bose:
            self.sym = SymBasis(dim_b, k)
            self.side = dim_a * self.sym.size
        else:
            self.sym = None
            self.side = dim_a * dim_b**k
        if self.side > opts.max_side:
            raise DimensionCapError(
                f"extension block side {self.side} exceeds cap {opts.max_side} "
                f"(|A|={dim_a}, |B|={dim_b}, k={k}, bose={opts.bose})"
            )

    @property
    def full_dims(self) -> list[int]:
        return [self.dim_a] + [self.dim_b] * self.opts.k

    @cached_property
    def basis(self) -> sp.csr_matrix:
        if self.opts.bose:
            return _basis_matrix(hermitian_basis(self.side), self.side)
        return _orbit_basis(self.dim_a, self.dim_b, self.opts.k)

    @cached_property
    def traceless_basis(self) -> sp.csr_matrix:
        return _traceless(self.basis, self.side)

    @cached_property
    def marginal_maps(self) -> list[sp.csr_matrix]:
        """Maps vec(X) -> vec(X_{A:B_j}); a single map under Bose symmetry."""
        eye_a = sp.identity(self.dim_a, format="csr")
        if self.opts.bose:
            if self.opts.k == 1:
                return [sp.identity(self.side ** 2, format="csr", dtype=complex)]
            kraus = [sp.kron(eye_a, K) for K in self.sym.marginal_kraus()]
            return [_kraus_map(kraus) / self.opts.k]
        dims = self.full_dims
        return [_ptrace_map(dims, [0, j]) for j in range(1, self.opts.k + 1)]

    @cached_property
    def ppt_maps(self) -> list[tuple[str, int, sp.csr_matrix]]:
        """(name, side, map) for the transpose of B_1..B_j, j = 1..k."""
        out = []
        k = self.opts.k
        eye_a = sp.identity(self.dim_a, format="csr")
        for j in range(1, k + 1):
            if self.opts.bose:
                left, right = SymBasis(self.dim_b, j).size, SymBasis(self.dim_b, k - j).size
                W = sp.kron(eye_a, self.sym.split_isometry(j), format="csr")
                lift = _kraus_map([W])
                perm = _perm_matrix(_pt_perm([self.dim_a, left, right], [1]))
                out.append((f"ppt{j}", self.dim_a * left * right, perm @ lift))
            else:
                perm = _pt_perm(self.full_dims, list(range(1, j + 1)))
                out.append((f"ppt{j}", self.side, _perm_matrix(perm)))
        return out

    def apply(self, M: sp.csr_matrix, x: np.ndarray) -> np.ndarray:
        n_out = int(round(math.sqrt(M.shape[0])))
        return (M @ np.asarray(x, dtype=complex).ravel()).reshape(n_out, n_out)

    def adjoint(self, M: sp.csr_matrix, h: np.ndarray) -> np.ndarray:
        out = M.conj().T @ np.asarray(h, dtype=complex).ravel()
        return out.reshape(self.side, self.side)

    def marginal(self, x: np.ndarray) -> np.ndarray:
        """(A, B_1) marginal of an extension operator."""
        if self.opts.bose:
            return sym_marginal_matrix(x, self.dim_a, self.sym)
        return ptrace_matrix(x, self.full_dims, [0, 1])


@dataclass
class ExtensionSdp:
    """An extension program together with the bookkeeping needed to read it back.

    ``form == "marginal"`` is the equality form ``marg(X) + S = rho`` used for
    Bose extensions without PPT cuts.  Its LMI side has one real variable per
    Hermitian coordinate of ``A (x) B`` only, so large ``k`` stays cheap.
    ``form == "param"`` puts the coordinates of ``X`` itself in the LMI and is
    used whenever extra cones on ``X`` are needed.
    """

    space: ExtensionSpace
    builder: LmiBuilder
    rho: np.ndarray
    form: str

    @property
    def problem(self):
        return self.builder.problem()

    @property
    def block_side(self) -> int:
        return self.space.side


def _dims_of(rho) -> tuple[int, int]:
    dims = rho.dims
    if len(dims) != 2:
        raise ValueError(f"expected a bipartite operator, got dims {dims}")
    return dims


def build_extension_sdp(rho, opts: ExtensionOptions = ExtensionOptions()) -> ExtensionSdp:
    """SDP for the level-``opts.k`` extension program of ``rho``."""
    rho = as_density(rho)
    dim_a, dim_b = _dims_of(rho)
    space = ExtensionSpace(dim_a, dim_b, opts)
    n = space.side
    if opts.bose and not opts.ppt_cuts:
        # dual: min tr(rho Y)  s.t.  marg^dag(Y) >= I,  Y >= 0
        nab = dim_a * dim_b
        E = _basis_matrix(hermitian_basis(nab), nab)
        lmi = LmiBuilder(E.shape[1])
        if opts.k == 1:
            lmi.add_block("ext", E, np.eye(n))
        else:
            eye_a = sp.identity(dim_a, format="csr")
            kraus = [sp.kron(eye_a, K) / math.sqrt(opts.k) for K in space.sym.marginal_kraus()]
            lmi.add_kraus_block("ext", kraus, E, np.eye(n))
        lmi.add_block("pos", E, np.zeros((nab, nab)))
        lmi.set_objective(hermitian_coords(rho.matrix))
        return ExtensionSdp(space, lmi, rho.matrix, "marginal")
    G = space.basis
    _check_vars(G.shape[1], f"level-{opts.k} extension program with these options")
    lmi = LmiBuilder(G.shape[1])
    lmi.add_block("ext", G, np.zeros((n, n)))
    if opts.ppt_cuts:
        for name, side, M in space.ppt_maps:
            lmi.add_block(name, M @ G, np.zeros((side, side)))
    for j, M in enumerate(space.marginal_maps, start=1):
        lmi.add_block(f"marg{j}", -(M @ G), -rho.matrix)
    diag = np.arange(n) * (n + 1)
    traces = np.asarray(G[diag, :].sum(axis=0)).ravel().real
    lmi.set_objective(-traces)
    return ExtensionSdp(space, lmi, rho.matrix, "param")


def _extension_value(esdp: ExtensionSdp, sol: SdpSolution) -> float:
    return sol.dual_value if esdp.form == "marginal" else -sol.dual_value


def _extension_operator(esdp: ExtensionSdp, sol: SdpSolution) -> np.ndarray:
    if esdp.form == "marginal":
        return esdp.builder.multiplier(sol, "ext")
    return esdp.builder.slack(sol, "ext")


@dataclass
class ExtendibilityReport:
    k: int
    sdp_value: float
    status: SdpStatus
    threshold: float
    extendible: bool | None
    marginal: DensityMatrix | None = None
    witness: HermitianOp | None = None
    witness_value: float | None = None
    iterations: int = 0
    gap: float = math.nan
    block_side: int = 0
    solution: SdpSolution | None = field(default=None, repr=False)
    sdp: ExtensionSdp | None = field(default=None, repr=False)

    @property
    def inconclusive(self) -> bool:
        return self.extendible is None


def check_k_extendible(
    rho,
    opts: ExtensionOptions = ExtensionOptions(),
    threshold: float = 1 - 1e-6,
    **tols,
) -> ExtendibilityReport:
    """Solve the level-k extension program and classify ``rho``."""
    rho = as_density(rho)
    esdp = build_extension_sdp(rho, opts)
    sol = esdp.builder.solve(**tols)
    value = _extension_value(esdp, sol)
    report = ExtendibilityReport(
        k=opts.k, sdp_value=value, status=sol.status, threshold=threshold,
        extendible=None, iterations=sol.iterations, gap=sol.gap,
        block_side=esdp.block_side, solution=sol, sdp=esdp,
    )
    if not sol.ok:
        return report
    report.extendible = value >= threshold
    x = _extension_operator(esdp, sol)
    tr = np.trace(x).real
    if tr > 1e-12:
        x = x / tr
        if not opts.bose:
            x = symmetrize_tail(HermitianOp(x, esdp.space.full_dims, check=False)).matrix
        marg = esdp.space.marginal(x)
        marg = 0.5 * (marg + marg.conj().T)
        report.marginal = DensityMatrix(marg, rho.spec, check=False)
    if not report.extendible:
        report.witness = extract_witness(report, rho)
        report.witness_value = report.witness.expectation(rho)
    return report


def extract_witness(report: ExtendibilityReport, rho=None) -> HermitianOp:
    """Witness ``W`` with ``tr(W sigma) >= 0`` on the level-k relaxation.

    Built from the multipliers of the marginal constraints and shifted by a
    multiple of ``I`` chosen from the computed matrices themselves, so the
    inequality holds for the returned ``W`` and not only for an exact
    optimum.
    """
    sol, esdp = report.solution, report.sdp
    if sol is None or esdp is None or not sol.ok:
        raise ValueError("witness needs an OPTIMAL extension solve")
    lmi, space = esdp.builder, esdp.space
    dims = (space.dim_a, space.dim_b)
    if esdp.form == "marginal":
        # tr(sigma Y) = tr(X marg^dag(Y)) >= lambda_min(marg^dag(Y)) for every
        # extension state X, so Y - lambda_min I is nonnegative on E_k.
        y = lmi.slack(sol, "pos")
        y = 0.5 * (y + y.conj().T)
        shift = np.linalg.eigvalsh(lift(y, space))[0]
        return _normalized(y - shift * np.eye(y.shape[0]), dims)
    names = lmi.block_names
    w = sum(lmi.multiplier(sol, nm) for nm in names if nm.startswith("marg"))
    # residual r_i = c_i - <A_i, Z>, i.e. R = sum_i r_i G_i
    prob = lmi.problem()
    r = prob.b - sum(a @ z.ravel() for a, z in zip(prob.A, sol.X))
    R = (space.basis @ r).reshape(space.side, space.side)
    lows = [np.linalg.eigvalsh(0.5 * (R + R.conj().T))[0]]
    for nm in names:
        if not nm.startswith("marg"):
            z = lmi.multiplier(sol, nm)
            lows.append(np.linalg.eigvalsh(0.5 * (z + z.conj().T))[0])
    shift = 1.0 + sum(min(0.0, lam) for lam in lows)
    w = 0.5 * (w + w.conj().T) - shift * np.eye(w.shape[0])
    return _normalized(w, dims)


def _normalized(w: np.ndarray, dims) -> HermitianOp:
    scale = np.max(np.abs(np.linalg.eigvalsh(w)))
    return HermitianOp(w / scale, dims, check=False)


def lift(M, space: ExtensionSpace) -> np.ndarray:
    """Operator ``H`` on the extension space with ``tr(H X) = tr(M X_{A:B_1})``."""
    m = M.matrix if isinstance(M, HermitianOp) else np.asarray(M)
    maps = space.marginal_maps
    h = space.adjoint(maps[0], m)
    if not space.opts.bose:
        h = symmetrize_tail(HermitianOp(h, space.full_dims, check=False)).matrix
    return 0.5 * (h + h.conj().T)


@dataclass
class OptimizationResult:
    value: float
    marginal: DensityMatrix
    k: int
    method: str
    status: SdpStatus = SdpStatus.OPTIMAL
    solution: SdpSolution | None = field(default=None, repr=False)


def optimize_over_extendible(
    M, opts: ExtensionOptions = ExtensionOptions(), method: str = "auto", **tols
) -> OptimizationResult:
    """Maximize ``tr(M rho)`` over level-k extendible states.

    Without PPT cuts the program is ``max tr(H X)`` over states ``X`` on the
    extension space, i.e. the top eigenvalue of the lifted operator; the
    ``"auto"`` method uses that closed form and ``"sdp"`` forces the
    interior-point route.
    """
    dim_a, dim_b = _dims_of(M)
    space = ExtensionSpace(dim_a, dim_b, opts)
    H = lift(M, space)
    if method not in ("auto", "eig", "sdp"):
        raise ValueError(f"unknown method {method!r}")
    if method == "eig" and opts.ppt_cuts:
        raise ValueError("the eigenvalue route ignores PPT cuts")
    if method in ("auto", "eig") and not opts.ppt_cuts:
        lam, vec = np.linalg.eigh(H)
        v = vec[:, -1]
        x = np.outer(v, v.conj())
        if not opts.bose:
            x = symmetrize_tail(HermitianOp(x, space.full_dims, check=False)).matrix
        marg = space.marginal(x)
        marg = 0.5 * (marg + marg.conj().T)
        return OptimizationResult(float(lam[-1]), DensityMatrix(marg, [dim_a, dim_b], check=False),
                                  opts.k, "eig")
    n = space.side
    _check_vars(n * n - 1, f"level-{opts.k} optimization program")
    G = space.traceless_basis
    x0 = np.eye(n) / n
    lmi = LmiBuilder(G.shape[1])
    lmi.add_block("ext", G, -x0)
    if opts.ppt_cuts:
        for name, side, Mp in space.ppt_maps:
            lmi.add_block(name, Mp @ G, -space.apply(Mp, x0))
    # objective: max tr(H X) = tr(H x0) + sum_i y_i tr(H G_i)
    hg = np.real(G.T @ H.T.ravel())
    lmi.set_objective(-hg)
    sol = lmi.solve(**tols)
    value = float(np.trace(H @ x0).real - sol.dual_value)
    x = lmi.slack(sol, "ext")
    x = x / np.trace(x).real
    marg = space.marginal(x)
    marg = 0.5 * (marg + marg.conj().T)
    return OptimizationResult(value, DensityMatrix(marg, [dim_a, dim_b], check=False),
                              opts.k, "sdp", sol.status, sol)


def disentangler(rho_ext) -> DensityMatrix:
    """Average of the ``(a, b_i)`` marginals of a state on ``a b_1 ... b_k``."""
    dims = rho_ext.dims
    if len(dims) < 2:
        raise ValueError("need at least one b system")
    if len(set(dims[1:])) != 1:
        raise ValueError(f"b systems must have equal dimension, got {dims[1:]}")
    k = len(dims) - 1
    m = rho_ext.matrix
    out = sum(ptrace_matrix(m, dims, [0, i]) for i in range(1, k + 1)) / k
    return DensityMatrix(out, [dims[0], dims[1]], check=False)
