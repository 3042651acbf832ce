"""Canonical, random and adversarial bipartite test states.

Random constructors draw from ``numpy.random.Generator(PCG64(seed))`` so a
recipe plus seed reproduces bit-identical matrices on every platform that
numpy supports.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import DensityMatrix, DimSpec, partial_trace, tensor
from .symmetric import SymBasis, sym_marginal_matrix


@dataclass(frozen=True)
class StateRecipe:
    """Serializable description of a state constructor call."""

    name: str
    parameters: dict = field(default_factory=dict)
    seed: int | None = None

    def build(self) -> DensityMatrix:
        try:
            fn = RECIPES[self.name]
        except KeyError:
            raise ValueError(f"unknown state recipe {self.name!r}") from None
        kwargs = dict(self.parameters)
        if self.seed is not None:
            kwargs["seed"] = self.seed
        return fn(**kwargs)

    def to_json(self) -> dict:
        return {"name": self.name, "parameters": dict(self.parameters), "seed": self.seed}

    @classmethod
    def from_json(cls, doc: dict) -> "StateRecipe":
        return cls(doc["name"], dict(doc.get("parameters", {})), doc.get("seed"))


def rng(seed: int | None) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _spec(spec) -> DimSpec:
    if isinstance(spec, DimSpec):
        return spec
    if np.isscalar(spec):
        return DimSpec([int(spec)])
    return DimSpec(spec)


def maximally_mixed(spec) -> DensityMatrix:
    spec = _spec(spec)
    return DensityMatrix(np.eye(spec.total) / spec.total, spec, check=False)


def max_entangled_vector(d: int) -> np.ndarray:
    v = np.zeros(d * d, dtype=complex)
    v[:: d + 1] = 1.0 / np.sqrt(d)
    return v


def max_entangled(d: int) -> DensityMatrix:
    """Projector onto ``sum_i |ii> / sqrt(d)``."""
    if d < 2:
        raise ValueError("max_entangled needs d >= 2")
    v = max_entangled_vector(d)
    return DensityMatrix(np.outer(v, v.conj()), [d, d], check=False)


def singlet() -> DensityMatrix:
    v = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
    return DensityMatrix(np.outer(v, v.conj()), [2, 2], check=False)


def werner(p: float) -> DensityMatrix:
    """``p |psi-><psi-| + (1 - p) I/4`` on two qubits."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"werner parameter must lie in [0, 1], got {p}")
    mat = p * singlet().matrix + (1 - p) * np.eye(4) / 4
    return DensityMatrix(mat, [2, 2], check=False)


def isotropic(F: float, d: int) -> DensityMatrix:
    """Fidelity-``F`` isotropic state on ``d (x) d``."""
    if not 0.0 <= F <= 1.0:
        raise ValueError(f"isotropic fidelity must lie in [0, 1], got {F}")
    phi = max_entangled(d).matrix
    mat = F * phi + (1 - F) * (np.eye(d * d) - phi) / (d * d - 1)
    return DensityMatrix(mat, [d, d], check=False)


def mix_with_mixed(rho: DensityMatrix, delta: float) -> DensityMatrix:
    """``(1 - delta) rho + delta tau`` with ``tau`` maximally mixed."""
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    n = rho.side
    mat = (1 - delta) * rho.matrix + delta * np.eye(n) / n
    return DensityMatrix(mat, rho.spec, check=False)


def _ginibre(gen: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return (gen.standard_normal((rows, cols)) + 1j * gen.standard_normal((rows, cols))) / np.sqrt(2)


def _psd_from(g: np.ndarray) -> np.ndarray:
    m = g @ g.conj().T
    return m / np.trace(m).real


def random_pure(d: int, seed=None) -> np.ndarray:
    v = _ginibre(rng(seed), d, 1)[:, 0]
    return v / np.linalg.norm(v)


def random_density(spec, rank: int | None = None, seed=None) -> DensityMatrix:
    """``G G^dag / tr`` with ``G`` a ``total x rank`` complex Gaussian."""
    spec = _spec(spec)
    rank = spec.total if rank is None else int(rank)
    if not 1 <= rank <= spec.total:
        raise ValueError(f"rank must lie in [1, {spec.total}], got {rank}")
    g = _ginibre(rng(seed), spec.total, rank)
    return DensityMatrix(_psd_from(g), spec, check=False)


def random_separable(spec_a, spec_b, terms: int | None = None, seed=None) -> DensityMatrix:
    """Convex mixture of ``terms`` random product states ``rho_A (x) rho_B``."""
    da, db = _spec(spec_a).total, _spec(spec_b).total
    terms = da * db if terms is None else int(terms)
    if terms < 1:
        raise ValueError("terms must be >= 1")
    gen = rng(seed)
    weights = gen.dirichlet(np.ones(terms))
    mat = np.zeros((da * db, da * db), dtype=complex)
    for w in weights:
        ra = _psd_from(_ginibre(gen, da, da))
        rb = _psd_from(_ginibre(gen, db, db))
        mat += w * np.kron(ra, rb)
    mat /= np.trace(mat).real
    return DensityMatrix(mat, [da, db], check=False)


def random_k_extendible(spec_a, spec_b, k: int, seed=None, rank: int | None = None) -> DensityMatrix:
    """Marginal of a random PSD operator on ``A (x) Sym^k(B)``.

    With ``k == 1`` this is the same draw as :func:`random_density` on ``A B``.
    """
    da, db = _spec(spec_a).total, _spec(spec_b).total
    if k < 1:
        raise ValueError("k must be >= 1")
    basis = SymBasis(db, k)
    side = da * basis.size
    rank = side if rank is None else int(rank)
    g = _ginibre(rng(seed), side, rank)
    y = _psd_from(g)
    return DensityMatrix(sym_marginal_matrix(y, da, basis), [da, db], check=False)


def tiles_upb_state() -> DensityMatrix:
    """Normalized projector onto the complement of the Tiles UPB in 3 (x) 3."""
    e = np.eye(3)
    s = 1 / np.sqrt(2)
    vecs = [
        np.kron(e[0], (e[0] - e[1]) * s),
        np.kron((e[0] - e[1]) * s, e[2]),
        np.kron(e[2], (e[1] - e[2]) * s),
        np.kron((e[1] - e[2]) * s, e[0]),
        np.kron(e.sum(0), e.sum(0)) / 3,
    ]
    proj = sum(np.outer(v, v) for v in vecs)
    mat = (np.eye(9) - proj) / 4
    return DensityMatrix(mat.astype(complex), [3, 3], check=False)


def product_marginals(rho: DensityMatrix) -> DensityMatrix:
    return tensor(partial_trace(rho, [0]), partial_trace(rho, [1]))


RECIPES = {
    "maximally_mixed": lambda dims: maximally_mixed(dims),
    "max_entangled": lambda d: max_entangled(d),
    "werner": lambda p: werner(p),
    "isotropic": lambda F, d: isotropic(F, d),
    "random_density": lambda dims, rank=None, seed=None: random_density(dims, rank, seed),
    "random_separable": lambda dim_a, dim_b, terms=None, seed=None: random_separable(
        dim_a, dim_b, terms, seed
    ),
    "random_k_extendible": lambda dim_a, dim_b, k, seed=None: random_k_extendible(
        dim_a, dim_b, k, seed
    ),
    "tiles_upb": lambda: tiles_upb_state(),
}
