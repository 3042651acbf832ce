"""Weak membership, best-separable-state optimization and validation oracles."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .hierarchy import (
    FROBENIUS_FACTOR,
    LOCC_CONSTANT,
    DimensionCapError,
    ExtensionOptions,
    ExtensionSpace,
    _basis_matrix,
    _pt_perm,
    _traceless,
    check_k_extendible,
    optimize_over_extendible,
    required_k,
)
from .linalg import (
    DensityMatrix,
    HermitianOp,
    as_density,
    cmi,
    hermitian_basis,
    norm,
    pt_matrix,
    ptrace_matrix,
)
from .nets import product_max
from .sdp import LmiBuilder, SdpStatus
from .states import mix_with_mixed

# The proof needs 4 (c eps + nu) < eps / 4; c = 1/32 leaves room for nu <= 1e-8.
THRESHOLD_C = 1.0 / 32.0
DEFAULT_K_CAP = 64
PPT_TOL = 1e-10


class Decision(str, enum.Enum):
    SEPARABLE = "SEPARABLE"
    ENTANGLED = "ENTANGLED"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class Verdict:
    decision: Decision
    eps: float
    norm_kind: str
    k_used: int
    sdp_value: float
    witness: HermitianOp | None = None
    diagnostics: list[dict] = field(default_factory=list)
    k_target: int = 0
    k_cap: int = DEFAULT_K_CAP
    certificate: str = ""
    reason: str = ""


def sdp_accuracy(eps: float) -> float:
    """Additive SDP accuracy used by :func:`wsep`."""
    return min(1e-8, eps * 1e-3)


def separable_ball_radius(dim: int) -> float:
    """Frobenius radius of the largest ball of separable states around I/dim."""
    return 1.0 / math.sqrt(dim * (dim - 1))


def _schedule(k_last: int) -> list[int]:
    if k_last <= 2:
        return [k_last]
    out, k = [], 2
    while k < k_last:
        out.append(k)
        k *= 2
    out.append(k_last)
    return out


def wsep(
    rho,
    eps: float,
    norm_kind: str = "frobenius",
    k_cap: int = DEFAULT_K_CAP,
    ppt_cuts: bool = False,
    bose: bool = True,
    max_side: int | None = None,
    certificates: tuple[str, ...] = ("ball", "ppt"),
) -> Verdict:
    """Decide separable versus eps-far under the weak-membership promise.

    ``rho`` is mixed with the maximally mixed state (``delta = eps / 2``) and
    tested at ``k = 2, 4, 8, ...`` up to ``min(k_target, k_cap)``.  A level
    whose value drops below ``1 - eps/32`` gives ENTANGLED with a witness.
    Passing ``k_target`` itself gives SEPARABLE.  When the cap binds first,
    SEPARABLE is returned only if one of ``certificates`` applies:

    * ``"ball"``: ``rho`` lies in the separable ball around ``I/d``;
    * ``"ppt"``:  ``rho`` is PPT and ``|A||B| <= 6``, where PPT is exact.

    Otherwise the answer is INCONCLUSIVE.
    """
    rho = as_density(rho)
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    if len(rho.dims) != 2:
        raise ValueError("wsep needs a bipartite state")
    dim_a, dim_b = rho.dims
    delta = eps / 2
    rho_d = mix_with_mixed(rho, delta)
    k_target = required_k(eps / 4, dim_a, norm_kind)
    k_last = max(1, min(k_target, k_cap))
    threshold = 1.0 - THRESHOLD_C * eps
    nu = sdp_accuracy(eps)
    side_cap = {} if max_side is None else {"max_side": max_side}
    verdict = Verdict(Decision.INCONCLUSIVE, eps, norm_kind, 0, math.nan,
                      k_target=k_target, k_cap=k_cap)
    for k in _schedule(k_last):
        opts = ExtensionOptions(k=k, bose=bose, ppt_cuts=ppt_cuts, **side_cap)
        try:
            rep = check_k_extendible(rho_d, opts, threshold, gap_tol=nu, feas_tol=nu)
        except DimensionCapError as exc:
            verdict.reason = f"block cap at k={k}: {exc}"
            return _cap_fallback(verdict, rho, certificates)
        verdict.diagnostics.append({
            "k": k, "sdp_value": rep.sdp_value, "status": rep.status.value,
            "gap": rep.gap, "iterations": rep.iterations, "block_side": rep.block_side,
        })
        verdict.k_used, verdict.sdp_value = k, rep.sdp_value
        if rep.inconclusive:
            verdict.reason = f"solver status {rep.status.value} at k={k}"
            return verdict
        if not rep.extendible:
            w = rep.witness
            # tr(W tau) >= 0, so tr(W rho_delta) < 0 forces tr(W rho) < 0
            if w is None or w.expectation(rho) >= 0:
                verdict.reason = f"witness check failed at k={k}"
                return verdict
            verdict.decision, verdict.witness = Decision.ENTANGLED, w
            verdict.certificate = f"not {k}-extendible"
            return verdict
    if k_last == k_target:
        verdict.decision = Decision.SEPARABLE
        verdict.certificate = f"{k_target}-extendible"
        return verdict
    verdict.reason = f"k_cap {k_cap} < k_target {k_target}"
    return _cap_fallback(verdict, rho, certificates)


def _cap_fallback(verdict: Verdict, rho: DensityMatrix, certificates) -> Verdict:
    n = rho.side
    if "ball" in certificates:
        dist = norm(rho.matrix - np.eye(n) / n)
        if dist <= separable_ball_radius(n):
            verdict.decision, verdict.certificate = Decision.SEPARABLE, "separable ball"
            return verdict
    if "ppt" in certificates and n <= 6 and ppt_check(rho):
        verdict.decision, verdict.certificate = Decision.SEPARABLE, "PPT (exact for |A||B| <= 6)"
    return verdict


@dataclass
class BssResult:
    value: float
    k_used: int
    k_required: int | None
    capped: bool
    error_bound: float
    method: str
    marginal: DensityMatrix | None = None
    status: str = SdpStatus.OPTIMAL.value

    def __float__(self) -> float:
        return self.value


def definetti_error(M, k: int) -> float:
    """``||M||_2 sqrt(153 * 16 ln2 * log2|A| / k)``."""
    op = M if isinstance(M, HermitianOp) else HermitianOp(M)
    c = FROBENIUS_FACTOR * LOCC_CONSTANT * math.log2(op.dims[0])
    return norm(op, "frobenius") * math.sqrt(c / k)


def bss_required_k(M, eps: float) -> int:
    op = M if isinstance(M, HermitianOp) else HermitianOp(M)
    c = FROBENIUS_FACTOR * LOCC_CONSTANT * math.log2(op.dims[0])
    x = c * norm(op, "frobenius") ** 2 / eps**2
    return max(1, math.ceil(x - 1e-9 * x))


def _largest_fitting_k(dim_a: int, dim_b: int, k: int, opts_kw) -> int:
    while k > 1:
        try:
            ExtensionSpace(dim_a, dim_b, ExtensionOptions(k=k, **opts_kw))
            return k
        except DimensionCapError:
            k -= 1
    return 1


def bss(
    M,
    eps: float | None = None,
    mode: str = "frobenius_bound",
    k: int | None = None,
    k_cap: int = DEFAULT_K_CAP,
    ppt_cuts: bool = False,
    bose: bool = True,
) -> BssResult:
    """Upper bound on ``max tr(M sigma)`` over separable ``sigma``.

    ``mode="frobenius_bound"`` picks the level that guarantees additive
    error ``eps``; ``mode="fixed_k"`` uses ``k`` and reports the de Finetti
    error term for that level.
    """
    op = M if isinstance(M, HermitianOp) else HermitianOp(M)
    if len(op.dims) != 2:
        raise ValueError("bss needs a bipartite operator")
    if mode == "frobenius_bound":
        if eps is None or not eps > 0:
            raise ValueError("frobenius_bound mode needs eps > 0")
        k_req = bss_required_k(op, eps)
        k_run = min(k_req, k_cap)
    elif mode == "fixed_k":
        if k is None or k < 1:
            raise ValueError("fixed_k mode needs k >= 1")
        k_req, k_run = None, int(k)
    else:
        raise ValueError(f"unknown bss mode {mode!r}")
    opts_kw = {"bose": bose, "ppt_cuts": ppt_cuts}
    # An explicit level either fits or raises; a derived level shrinks to fit.
    k_fit = _largest_fitting_k(*op.dims, k_run, opts_kw) if k_req is not None else k_run
    capped = k_req is not None and k_fit < k_req
    res = optimize_over_extendible(op, ExtensionOptions(k=k_fit, **opts_kw))
    err = definetti_error(op, k_fit)
    return BssResult(res.value, k_fit, k_req, capped, err, res.method, res.marginal, res.status.value)


def meanfield_ground_energy(K, eps: float, k_cap: int = DEFAULT_K_CAP) -> BssResult:
    """Lower bound on ``min tr(sigma K)`` over separable states (``-bss(-K)``)."""
    op = K if isinstance(K, HermitianOp) else HermitianOp(K)
    res = bss(HermitianOp(-op.matrix, op.dims, check=False), eps, "frobenius_bound", k_cap=k_cap)
    res.value = -res.value
    return res


def ppt_min_eigenvalue(rho) -> float:
    m = rho.matrix if isinstance(rho, HermitianOp) else np.asarray(rho)
    return float(np.linalg.eigvalsh(pt_matrix(m, rho.dims, [1]))[0])


def ppt_check(rho, tol: float = PPT_TOL) -> bool:
    """True when the partial transpose on B has no eigenvalue below ``-tol``."""
    return ppt_min_eigenvalue(rho) >= -tol


@dataclass
class DistanceResult:
    distance: float
    nearest: DensityMatrix
    status: SdpStatus

    def __float__(self) -> float:
        return self.distance


def nearest_ppt(rho, gap_tol: float = 1e-10, feas_tol: float = 1e-10) -> DistanceResult:
    """``min ||rho - sigma||_2`` over PPT states ``sigma``.

    ``sigma = I/n + sum_i y_i G_i`` in a traceless orthonormal basis, so the
    objective is the Euclidean length of ``r - y`` with ``r`` the coordinates
    of ``rho``; it enters through the epigraph cone ``[[t, u^T], [u, t I]] >= 0``.
    """
    rho = as_density(rho)
    if len(rho.dims) != 2:
        raise ValueError("nearest_ppt needs a bipartite state")
    n = rho.side
    G = _traceless(_basis_matrix(hermitian_basis(n), n), n)
    m = G.shape[1]
    tau = np.eye(n) / n
    r = np.real(G.conj().T @ (rho.matrix - tau).ravel())
    lmi = LmiBuilder(m + 1)
    zero = np.zeros((n * n, 1))
    lmi.add_block("state", np.hstack([G.toarray(), zero]), -tau)
    pt_rows = _pt_perm(rho.dims, [1])
    lmi.add_block("ppt", np.hstack([G.toarray()[pt_rows], zero]), -pt_matrix(tau, rho.dims, [1]))
    side = m + 1
    cone = np.zeros((side * side, m + 1))
    for i in range(m):
        cone[i + 1, i] = -1.0  # (0, i+1)
        cone[(i + 1) * side, i] = -1.0  # (i+1, 0)
    cone[np.arange(side) * (side + 1), m] = 1.0
    offset = np.zeros((side, side))
    offset[0, 1:] = -r
    offset[1:, 0] = -r
    lmi.add_block("cone", cone, offset, complex=False)
    c = np.zeros(m + 1)
    c[m] = 1.0
    lmi.set_objective(c)
    sol = lmi.solve(gap_tol=gap_tol, feas_tol=feas_tol)
    sigma = lmi.slack(sol, "state")
    sigma = 0.5 * (sigma + sigma.conj().T)
    dist = float(np.linalg.norm(rho.matrix - sigma))
    return DistanceResult(dist, DensityMatrix(sigma, rho.dims, check=False), sol.status)


def nearest_ppt_distance(rho, norm_kind: str = "frobenius") -> float:
    """Frobenius distance from ``rho`` to the PPT set (exact distance to S when |A||B| <= 6)."""
    if norm_kind != "frobenius":
        raise ValueError("only the frobenius norm is supported")
    rho = as_density(rho)
    if ppt_check(rho, 0.0):
        return 0.0
    res = nearest_ppt(rho)
    if res.status != SdpStatus.OPTIMAL:
        raise RuntimeError(f"nearest-PPT SDP ended with status {res.status.value}")
    return res.distance


def bss_bruteforce(M, mesh: float = 0.01, two_sided: bool | None = None):
    """ε-net maximum of ``<ab|M|ab>``; see :func:`symext.nets.product_max`."""
    return product_max(M, mesh, two_sided)


def cmi_inequality_check(rho_abe, split=None) -> tuple[float, float, bool]:
    """Compare ``I(A;B|E)`` with ``dist_2(rho_AB, S)^2 / (8 ln2 * 153)``."""
    m = rho_abe.matrix if isinstance(rho_abe, HermitianOp) else np.asarray(rho_abe)
    dims = tuple(split) if split is not None else tuple(rho_abe.dims)
    if len(dims) != 3:
        raise ValueError("need a three-factor split (A, B, E)")
    if dims[0] != 2 or dims[1] != 2:
        raise ValueError(f"cmi_inequality_check needs |A| = |B| = 2, got {dims[:2]}")
    lhs = cmi(m, dims)
    rho_ab = DensityMatrix(ptrace_matrix(m, dims, [0, 1]), [2, 2], check=False)
    dist = nearest_ppt_distance(rho_ab)
    rhs = dist**2 / (8 * math.log(2) * FROBENIUS_FACTOR)
    return lhs, rhs, lhs >= rhs - 1e-9
