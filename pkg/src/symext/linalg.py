"""Dense Hermitian linear algebra on tensor-product spaces.

Operators carry the list of local dimensions of their tensor factors so
that partial traces, partial transposes and permutations of factors can be
expressed by factor index instead of by hand-computed reshapes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-10
ENTROPY_CUTOFF = 1e-14


@dataclass(frozen=True)
class DimSpec:
    """Ordered local dimensions of a tensor product space."""

    dims: tuple[int, ...]

    def __init__(self, dims: Iterable[int]):
        dims = tuple(int(d) for d in dims)
        if not dims:
            raise ValueError("a DimSpec needs at least one factor")
        if any(d < 1 for d in dims):
            raise ValueError(f"local dimensions must be positive, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def total(self) -> int:
        return math.prod(self.dims)

    def __len__(self) -> int:
        return len(self.dims)

    def __getitem__(self, i):
        return self.dims[i]

    def __iter__(self):
        return iter(self.dims)

    def __add__(self, other: "DimSpec") -> "DimSpec":
        return DimSpec(self.dims + tuple(other))


def _as_spec(dims) -> DimSpec:
    return dims if isinstance(dims, DimSpec) else DimSpec(dims)


class HermitianOp:
    """A Hermitian matrix tagged with its tensor-factor dimensions.

    The matrix is copied on construction and stored read-only.
    """

    __slots__ = ("spec", "matrix")

    def __init__(self, matrix, dims=None, check: bool = True):
        mat = np.array(matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {mat.shape}")
        spec = _as_spec(dims if dims is not None else (mat.shape[0],))
        if spec.total != mat.shape[0]:
            raise ValueError(
                f"dims {spec.dims} (total {spec.total}) do not match side {mat.shape[0]}"
            )
        if check:
            err = np.max(np.abs(mat - mat.conj().T)) if mat.size else 0.0
            if err > HERMITIAN_TOL * max(1.0, np.max(np.abs(mat))):
                raise ValueError(f"matrix is not Hermitian (max deviation {err:.3e})")
        mat = 0.5 * (mat + mat.conj().T)
        mat.setflags(write=False)
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "matrix", mat)

    def __setattr__(self, name, value):
        raise AttributeError("HermitianOp is immutable")

    @property
    def dims(self) -> tuple[int, ...]:
        return self.spec.dims

    @property
    def side(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def expectation(self, other: "HermitianOp | np.ndarray") -> float:
        """Return ``Re tr(self @ other)``."""
        m = other.matrix if isinstance(other, HermitianOp) else np.asarray(other)
        return float(np.real(np.vdot(self.matrix.conj().T, m)))

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dims={self.dims})"

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


class DensityMatrix(HermitianOp):
    """A positive semidefinite, unit-trace :class:`HermitianOp`."""

    __slots__ = ()

    def __init__(self, matrix, dims=None, check: bool = True):
        if isinstance(matrix, HermitianOp):
            dims = matrix.spec if dims is None else dims
            matrix = matrix.matrix
        super().__init__(matrix, dims, check=check)
        if check:
            tr = np.trace(self.matrix).real
            if abs(tr - 1.0) > TRACE_TOL:
                raise ValueError(f"trace must be 1, got {tr!r}")
            lam = np.linalg.eigvalsh(self.matrix)[0]
            if lam < -PSD_TOL:
                raise ValueError(f"matrix is not PSD (min eigenvalue {lam:.3e})")


def as_density(x, dims=None) -> DensityMatrix:
    if isinstance(x, DensityMatrix) and dims is None:
        return x
    return DensityMatrix(x, dims)


def _mat(x) -> np.ndarray:
    return x.matrix if isinstance(x, HermitianOp) else np.asarray(x)


def _same_kind(template, matrix, dims, check=False):
    # Preserve DensityMatrix-ness where the operation keeps states as states.
    if isinstance(template, DensityMatrix):
        return DensityMatrix(matrix, dims, check=check)
    return HermitianOp(matrix, dims, check=check)


def tensor(*ops: HermitianOp) -> HermitianOp:
    """Kronecker product with concatenated dimension lists."""
    if not ops:
        raise ValueError("tensor needs at least one operand")
    mat = ops[0].matrix
    dims = list(ops[0].dims)
    for op in ops[1:]:
        mat = np.kron(mat, op.matrix)
        dims.extend(op.dims)
    if all(isinstance(op, DensityMatrix) for op in ops):
        return DensityMatrix(mat, dims, check=False)
    return HermitianOp(mat, dims, check=False)


def _check_factors(spec: DimSpec, idx: Iterable[int]) -> list[int]:
    idx = sorted(set(int(i) for i in idx))
    for i in idx:
        if not 0 <= i < len(spec):
            raise IndexError(f"factor index {i} out of range for dims {spec.dims}")
    return idx


def ptrace_matrix(mat: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Partial trace on a raw matrix; ``keep`` must be sorted and valid."""
    n = len(dims)
    t = mat.reshape(tuple(dims) * 2)
    traced = [i for i in range(n) if i not in keep]
    # Trace out from the highest axis down so indices stay valid.
    for cnt, i in enumerate(sorted(traced, reverse=True)):
        cur = n - cnt
        t = np.trace(t, axis1=i, axis2=i + cur)
    d = math.prod(dims[i] for i in keep) if keep else 1
    return t.reshape(d, d)


def partial_trace(x: HermitianOp, keep: Iterable[int]) -> HermitianOp:
    """Trace out every factor not listed in ``keep``."""
    keep = _check_factors(x.spec, keep)
    out = ptrace_matrix(x.matrix, x.dims, keep)
    dims = [x.dims[i] for i in keep] or [1]
    return _same_kind(x, out, dims)


def pt_matrix(mat: np.ndarray, dims: Sequence[int], sys: Sequence[int]) -> np.ndarray:
    n = len(dims)
    t = mat.reshape(tuple(dims) * 2)
    perm = list(range(2 * n))
    for i in sys:
        perm[i], perm[i + n] = perm[i + n], perm[i]
    return t.transpose(perm).reshape(mat.shape)


def partial_transpose(x: HermitianOp, factor: int | Iterable[int]) -> HermitianOp:
    """Transpose the listed tensor factors in the product basis."""
    sys = _check_factors(x.spec, [factor] if np.isscalar(factor) else factor)
    return HermitianOp(pt_matrix(x.matrix, x.dims, sys), x.spec, check=False)


def permute_matrix(mat: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: output factor ``i`` is input factor ``perm[i]``."""
    n = len(dims)
    t = mat.reshape(tuple(dims) * 2)
    axes = list(perm) + [p + n for p in perm]
    return t.transpose(axes).reshape(mat.shape)


def permutation_operator(dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Unitary ``P`` with ``P X P^dag == permute_matrix(X, dims, perm)``."""
    d = math.prod(dims)
    eye = np.eye(d).reshape(tuple(dims) + (d,))
    return eye.transpose(list(perm) + [len(dims)]).reshape(d, d)


def symmetrize_tail(x: HermitianOp) -> HermitianOp:
    """Average ``x`` over all permutations of factors ``1..k``.

    Factor 0 is the A system; the remaining ``k`` factors must share one
    dimension.
    """
    dims = x.dims
    if len(dims) < 2:
        raise ValueError("symmetrize_tail needs an A factor and at least one B factor")
    if len(set(dims[1:])) != 1:
        raise ValueError(f"B factors must have equal dimension, got {dims[1:]}")
    k = len(dims) - 1
    acc = np.zeros_like(x.matrix)
    for p in itertools.permutations(range(1, k + 1)):
        acc += permute_matrix(x.matrix, dims, (0,) + p)
    return _same_kind(x, acc / math.factorial(k), x.spec)


def norm(x, kind: str = "frobenius") -> float:
    """Schatten norm of ``x``: ``frobenius``, ``trace`` or ``operator``."""
    m = _mat(x)
    if kind == "frobenius":
        return float(np.linalg.norm(m))
    if isinstance(x, HermitianOp):
        s = np.abs(np.linalg.eigvalsh(m))
    else:
        s = np.linalg.svd(m, compute_uv=False)
    if kind == "trace":
        return float(np.sum(s))
    if kind == "operator":
        return float(np.max(s)) if s.size else 0.0
    raise ValueError(f"unknown norm kind {kind!r}")


def entropy(rho) -> float:
    """Von Neumann entropy in bits."""
    m = _mat(rho)
    tr = np.trace(m).real
    if abs(tr - 1.0) > 1e-8:
        raise ValueError(f"entropy requires a normalized state (trace {tr!r})")
    lam = np.linalg.eigvalsh(m)
    lam = lam[lam > ENTROPY_CUTOFF]
    return float(-np.sum(lam * np.log2(lam)))


def cmi(rho_abe, split=None) -> float:
    """Conditional mutual information ``I(A;B|E)`` in bits.

    ``split`` gives the three local dimensions; it defaults to the dims of
    ``rho_abe`` which must then have exactly three factors.
    """
    dims = tuple(split) if split is not None else tuple(rho_abe.dims)
    if len(dims) != 3:
        raise ValueError(f"cmi needs a 3-factor split, got {dims}")
    m = _mat(rho_abe)
    if math.prod(dims) != m.shape[0]:
        raise ValueError("split does not match the operator side")
    h = lambda keep: entropy(ptrace_matrix(m, dims, keep))
    return h([0, 2]) + h([1, 2]) - entropy(m) - h([2])


# vec-space helpers shared by the SDP builders ------------------------------


def hermitian_basis(n: int) -> list[tuple[list[tuple[int, int, complex]]]]:
    """Orthonormal basis of n x n Hermitian matrices as sparse entry lists.

    Order: diagonal units, then for each ``p < q`` the real symmetric and the
    imaginary antisymmetric element.
    """
    s = 1.0 / math.sqrt(2.0)
    basis = [[(p, p, 1.0 + 0j)] for p in range(n)]
    for p in range(n):
        for q in range(p + 1, n):
            basis.append([(p, q, s + 0j), (q, p, s + 0j)])
            basis.append([(p, q, -1j * s), (q, p, 1j * s)])
    return basis


def hermitian_coords(mat: np.ndarray) -> np.ndarray:
    """Coordinates of a Hermitian matrix in :func:`hermitian_basis` order."""
    n = mat.shape[0]
    iu = np.triu_indices(n, 1)
    off = mat[iu]
    out = np.empty(n * n)
    out[:n] = np.real(np.diag(mat))
    out[n::2] = np.sqrt(2.0) * off.real
    out[n + 1::2] = -np.sqrt(2.0) * off.imag
    return out


def from_hermitian_coords(c: np.ndarray, n: int) -> np.ndarray:
    mat = np.zeros((n, n), dtype=complex)
    mat[np.diag_indices(n)] = c[:n]
    iu = np.triu_indices(n, 1)
    mat[iu] = (c[n::2] - 1j * c[n + 1::2]) / np.sqrt(2.0)
    mat = mat + np.triu(mat, 1).conj().T
    return mat
