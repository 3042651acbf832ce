"""Deterministic nets of pure states and product-state maximization.

Qubit nets are layered grids on the Bloch sphere: polar layers spaced by at
most ``h`` and, on each layer, ``ceil(2 pi sin(theta) / h)`` equally spaced
azimuths.  Every unit Bloch vector is within geodesic (hence chord)
distance ``h`` of a grid point, and for qubits the trace distance between
pure-state projectors equals the Bloch chord.

Larger local dimensions use hyperspherical amplitude layers with per-entry
phase rings, again spaced by ``h``; every unit vector (up to global phase)
lies within Euclidean distance ``(d - 1) h`` of a grid vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _ext
from .linalg import HermitianOp

MAX_DIM = 4
MAX_NET_POINTS = 4_000_000
MAX_PAIR_EVALS = 4_000_000_000

_PAULI = np.array(
    [[[1, 0], [0, 1]], [[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]],
    dtype=complex,
)


class NetCostError(ValueError):
    """The requested net exceeds the brute-force cost guard."""


def _bloch_layers(h: float):
    layers = max(1, math.ceil(math.pi / h))
    step = math.pi / layers
    for l in range(layers + 1):
        theta = l * step
        ring = max(1, math.ceil(2 * math.pi * math.sin(theta) / step - 1e-9))
        yield theta, ring


def qubit_net_size(h: float) -> int:
    return sum(r for _, r in _bloch_layers(h))


def qubit_net(h: float) -> np.ndarray:
    """Unit vectors ``(cos(t/2), e^{i phi} sin(t/2))`` on the layered grid."""
    out = []
    for theta, ring in _bloch_layers(h):
        phi = 2 * math.pi * np.arange(ring) / ring
        col = np.empty((ring, 2), dtype=complex)
        col[:, 0] = math.cos(theta / 2)
        col[:, 1] = math.sin(theta / 2) * np.exp(1j * phi)
        out.append(col)
    return np.concatenate(out)


def _amplitudes(d: int, h: float):
    # Non-negative unit vectors in R^d from hyperspherical angles in [0, pi/2].
    pts = [(np.ones(0), 1.0)]
    for _ in range(d - 1):
        nxt = []
        for head, sinprod in pts:
            n = max(1, math.ceil((math.pi / 2) * sinprod / h - 1e-9))
            for a in np.linspace(0.0, math.pi / 2, n + 1):
                nxt.append((np.append(head, sinprod * math.cos(a)), sinprod * math.sin(a)))
        pts = nxt
    return [np.append(head, s) for head, s in pts]


def _phase_counts(r: np.ndarray, h: float) -> list[int]:
    return [max(1, math.ceil(2 * math.pi * x / h - 1e-9)) for x in r[1:]]


def sphere_net_size(d: int, h: float) -> int:
    if d == 2:
        return qubit_net_size(2 * h)
    return sum(math.prod(_phase_counts(r, h)) for r in _amplitudes(d, h))


def sphere_net(d: int, h: float, limit: int = MAX_NET_POINTS) -> np.ndarray:
    """Grid of unit vectors in C^d (first entry real, non-negative)."""
    size = sphere_net_size(d, h)
    if size > limit:
        raise NetCostError(f"net on C^{d} at spacing {h} has {size} points (limit {limit})")
    if d == 1:
        return np.ones((1, 1), dtype=complex)
    out = []
    for r in _amplitudes(d, h):
        rings = [2 * math.pi * np.arange(n) / n for n in _phase_counts(r, h)]
        grids = np.meshgrid(*rings, indexing="ij")
        phases = np.stack([g.ravel() for g in grids], axis=1)
        vec = np.empty((phases.shape[0], d), dtype=complex)
        vec[:, 0] = r[0]
        vec[:, 1:] = r[1:] * np.exp(1j * phases)
        out.append(vec)
    return np.concatenate(out)


@dataclass
class NetResult:
    value: float
    error_bound: float
    points: int
    method: str
    argmax: tuple[np.ndarray, np.ndarray]

    def __float__(self) -> float:
        return self.value


def _local_ops(m: np.ndarray, da: int, db: int, vecs: np.ndarray, side: int) -> np.ndarray:
    t = m.reshape(da, db, da, db)
    if side == 0:
        return np.einsum("ni,ijkl,nk->njl", vecs.conj(), t, vecs, optimize=True)
    return np.einsum("nj,ijkl,nl->nik", vecs.conj(), t, vecs, optimize=True)


def product_max(M, mesh: float, two_sided: bool | None = None) -> NetResult:
    """Maximize ``<ab|M|ab>`` over product vectors on a deterministic net.

    The returned value is attained by the reported product vector, so it is
    a lower bound on the true maximum; ``error_bound`` caps the shortfall.
    For two qubits the default is the literal product net (both factors on
    the Bloch grid with spacing ``2 mesh``, error ``4 mesh ||M||``).
    Otherwise the smaller factor is netted and the other one is optimized
    exactly by an eigensolve.
    """
    if not mesh > 0:
        raise ValueError("mesh must be positive")
    op = M if isinstance(M, HermitianOp) else HermitianOp(M)
    if len(op.dims) != 2:
        raise ValueError(f"product_max needs a bipartite operator, got dims {op.dims}")
    da, db = op.dims
    if max(da, db) > MAX_DIM:
        raise NetCostError(f"local dimensions {op.dims} exceed the brute-force limit {MAX_DIM}")
    m = op.matrix
    opnorm = float(np.max(np.abs(np.linalg.eigvalsh(m))))
    if two_sided is None:
        two_sided = da == db == 2
    if two_sided:
        if not da == db == 2:
            raise ValueError("the two-sided net is only defined for two qubits")
        h = 2 * mesh
        n = qubit_net_size(h)
        if n * n > MAX_PAIR_EVALS:
            raise NetCostError(f"{n}^2 product pairs exceed the limit {MAX_PAIR_EVALS}")
        net = qubit_net(h)
        local = _local_ops(m, da, db, net, 0)  # operators on B
        coef = np.einsum("nij,tji->nt", local, _PAULI).real
        bloch = np.einsum("ni,tij,nj->nt", net.conj(), _PAULI, net).real
        value, i, j = _ext.net_max(coef, bloch / 2)
        return NetResult(float(value), 2 * h * opnorm, n * n, "product-net", (net[i], net[j]))
    side = 0 if da <= db else 1
    dn = (da, db)[side]
    if dn == 2:
        h = 2 * mesh
        n = qubit_net_size(h)
        if n > MAX_NET_POINTS:
            raise NetCostError(f"qubit net with {n} points exceeds {MAX_NET_POINTS}")
        net, bound = qubit_net(h), h * opnorm
    else:
        net = sphere_net(dn, mesh)
        bound = 2 * (dn - 1) * mesh * opnorm
    best, arg = -np.inf, None
    for start in range(0, net.shape[0], 65536):
        chunk = net[start:start + 65536]
        lam, vec = np.linalg.eigh(_local_ops(m, da, db, chunk, side))
        i = int(np.argmax(lam[:, -1]))
        if lam[i, -1] > best:
            best = float(lam[i, -1])
            arg = (chunk[i], vec[i, :, -1]) if side == 0 else (vec[i, :, -1], chunk[i])
    return NetResult(best, bound, net.shape[0], "net+eig", arg)


def product_min(M, mesh: float, two_sided: bool | None = None) -> NetResult:
    op = M if isinstance(M, HermitianOp) else HermitianOp(M)
    res = product_max(HermitianOp(-op.matrix, op.dims, check=False), mesh, two_sided)
    res.value = -res.value
    return res
