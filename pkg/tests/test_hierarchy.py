import math

import numpy as np
import pytest

from conftest import rand_state
from symext.hierarchy import (
    DimensionCapError, ExtensionOptions, ExtensionSpace, build_extension_sdp, check_k_extendible,
    ckmr_bound, definetti_bound, definetti_crossover, disentangler, extract_witness,
    optimize_over_extendible, required_k,
)
from symext.linalg import (
    DensityMatrix, HermitianOp, hermitian_coords, from_hermitian_coords, partial_trace,
    pt_matrix, tensor,
)
from symext.nets import product_min
from symext.solver import nearest_ppt_distance
from symext.states import (
    isotropic, max_entangled, maximally_mixed, mix_with_mixed, random_density,
    random_k_extendible, random_separable, werner,
)
from symext.symmetric import SymBasis, sym_embed, sym_marginal_matrix

# frozen oracle outputs (alternating projections, 1e5 iterations cap): mix(phi+, 1/2)
# admits a Bose-symmetric 2-extension
MIX_HALF_K2_EXTENDIBLE = True


# --- level bounds -----------------------------------------------------------


def test_required_k_examples():
    assert required_k(1.0, 2, "locc") == 12
    assert required_k(0.5, 2, "locc") == 45
    for eps, d in [(1.0, 2), (0.5, 2), (0.3, 3), (1.7, 5), (0.05, 4)]:
        raw = 16 * math.log(2) * math.log2(d) / eps**2
        assert required_k(eps, d, "locc") == math.ceil(raw)
        assert required_k(eps, d, "frobenius") == math.ceil(153 * raw)
    with pytest.raises(ValueError):
        required_k(0, 2)
    with pytest.raises(ValueError):
        required_k(0.5, 1)


def test_required_k_is_sufficient_and_minimal():
    for eps in (0.25, 0.5, 1.0, 1.5):
        k = required_k(eps, 3, "frobenius")
        assert definetti_bound(k, 3, "frobenius") <= eps
        assert definetti_bound(k - 1, 3, "frobenius") > eps


def test_ckmr():
    assert ckmr_bound(2, 16) == 1.0
    assert ckmr_bound(2, 8) == 2.0
    # the square-root bound is tighter exactly below k_cross = 16 |B|^4 / c
    for da, db in [(2, 2), (2, 10), (3, 12)]:
        rep = definetti_crossover(da, db, "frobenius")
        kc = rep["k_cross"]
        for k in (1, 2, 5, 50, 93, 94, 95, 500, 5000):
            tighter = definetti_bound(k, da, "frobenius") < ckmr_bound(db, k)
            assert tighter == (k < kc)
        assert definetti_bound(rep["sqrt_bound_nontrivial_from"], da, "frobenius") <= 2
        assert ckmr_bound(db, rep["ckmr_nontrivial_from"]) < 2
    assert definetti_crossover(2, 2)["k_cross"] < 1


# --- program structure ------------------------------------------------------


def test_block_sides():
    rho = random_density([2, 2], seed=0)
    assert build_extension_sdp(rho, ExtensionOptions(k=2)).block_side == 6
    assert build_extension_sdp(rho, ExtensionOptions(k=5)).block_side == 12
    assert build_extension_sdp(rho, ExtensionOptions(k=3, bose=False)).block_side == 16
    with pytest.raises(DimensionCapError):
        build_extension_sdp(rho, ExtensionOptions(k=3000))
    with pytest.raises(ValueError):
        ExtensionOptions(k=0)


@pytest.mark.parametrize("da,db,k", [(2, 2, 3), (3, 3, 2), (2, 3, 3)])
def test_ppt_maps_match_dense(gen, da, db, k):
    space = ExtensionSpace(da, db, ExtensionOptions(k=k, ppt_cuts=True))
    x = rand_state(gen, space.side)
    full = sym_embed(x, da, db, k).matrix
    dims = [da] + [db] * k
    eye_a = np.eye(da)
    for j, (name, side, M) in enumerate(space.ppt_maps, start=1):
        got = space.apply(M, x)
        assert got.shape == (side, side)
        want = pt_matrix(full, dims, list(range(1, j + 1)))
        # the occupation isometries are real, so transposing commutes with them
        v = np.kron(eye_a, np.kron(SymBasis(db, j).isometry.toarray(),
                                   SymBasis(db, k - j).isometry.toarray()))
        assert np.allclose(v @ got @ v.T, want, atol=1e-13)


def test_k1_is_trivially_extendible():
    for s in range(5):
        rep = check_k_extendible(random_density([2, 3], seed=s), ExtensionOptions(k=1))
        assert rep.sdp_value == pytest.approx(1, abs=1e-7)
    rep = check_k_extendible(max_entangled(2), ExtensionOptions(k=1))
    assert rep.extendible


def test_product_state_explicit_extension():
    ra = random_density([2], seed=1)
    rb = random_density([3], seed=2)
    rho = tensor(ra, rb)
    lam, vec = np.linalg.eigh(rb.matrix)
    for k in (2, 3, 4):
        basis = SymBasis(3, k)
        v = basis.isometry.toarray()
        # sum_i lam_i |b_i><b_i|^{(x) k}, expressed in the occupation basis
        blk = np.zeros((basis.size, basis.size), complex)
        for l, b in zip(lam, vec.T):
            bk = b
            for _ in range(k - 1):
                bk = np.kron(bk, b)
            c = v.T @ bk
            assert np.linalg.norm(c) == pytest.approx(1)
            blk += l * np.outer(c, c.conj())
        x = np.kron(ra.matrix, blk)
        assert np.linalg.eigvalsh(x)[0] >= -1e-14
        assert np.allclose(sym_marginal_matrix(x, 2, basis), rho.matrix, atol=1e-14)
        rep = check_k_extendible(rho, ExtensionOptions(k=k))
        assert rep.sdp_value == pytest.approx(1, abs=1e-7)


def test_maximally_mixed_k4():
    rep = check_k_extendible(maximally_mixed([2, 2]), ExtensionOptions(k=4))
    assert abs(rep.sdp_value - 1) <= 1e-7
    assert rep.extendible and rep.witness is None
    assert np.allclose(rep.marginal.matrix, np.eye(4) / 4, atol=1e-7)


def _alternating_projections(rho, k, iters=100_000, tol=1e-14):
    da, db = rho.dims
    basis = SymBasis(db, k)
    n = da * basis.size
    L = np.array([hermitian_coords(sym_marginal_matrix(from_hermitian_coords(e, n), da, basis))
                  for e in np.eye(n * n)]).T
    Lp = np.linalg.pinv(L)
    r = hermitian_coords(rho.matrix)
    x = np.eye(n) / n
    gap = math.inf
    for _ in range(iters):
        c = hermitian_coords(x)
        y = from_hermitian_coords(c - Lp @ (L @ c - r), n)
        w, v = np.linalg.eigh(y)
        x = (v * np.clip(w, 0, None)) @ v.conj().T
        gap = np.linalg.norm(x - y)
        if gap < tol:
            break
    return gap


def test_mix_half_against_projection_oracle():
    rho = mix_with_mixed(max_entangled(2), 0.5)
    feasible = _alternating_projections(rho, 2) < 1e-9
    assert feasible == MIX_HALF_K2_EXTENDIBLE
    rep = check_k_extendible(rho, ExtensionOptions(k=2))
    assert rep.sdp_value >= 1 - 1e-7
    # the oracle also separates a clearly non-extendible input
    assert _alternating_projections(isotropic(0.9, 2), 2, iters=2000) > 1e-2


def test_random_k_extendible_feasible():
    for s in range(5):
        for k in (2, 3):
            rho = random_k_extendible([2], [2], k, seed=s)
            rep = check_k_extendible(rho, ExtensionOptions(k=k))
            assert abs(rep.sdp_value - 1) <= 1e-6
            assert np.allclose(rep.marginal.matrix, rho.matrix, atol=1e-5)


# frozen regression values
@pytest.mark.parametrize("delta,k,value", [(0.1, 2, 0.3), (0.25, 2, 0.75), (0.25, 4, 0.5)])
def test_isotropic_family_values(delta, k, value):
    rho = mix_with_mixed(max_entangled(2), delta)
    rep = check_k_extendible(rho, ExtensionOptions(k=k))
    assert rep.sdp_value == pytest.approx(value, abs=1e-6)
    assert rep.extendible is False


def test_value_bounded_by_one():
    # the reported value is the dual bound; it may exceed the primal tr X <= 1
    # by the stopping gap gap_tol * (1 + |primal|)
    for s in range(5):
        for opts in (ExtensionOptions(k=3), ExtensionOptions(k=2, ppt_cuts=True)):
            rep = check_k_extendible(random_density([2, 2], seed=s), opts)
            assert rep.sdp_value <= 1 + 1e-8 * 2
            assert rep.gap <= 1e-8 * (1 + 1)


def test_random_state_bose_vs_symmetrized():
    rho = random_density([2, 2], seed=3)
    a = check_k_extendible(rho, ExtensionOptions(k=3)).sdp_value
    b = check_k_extendible(rho, ExtensionOptions(k=3, bose=False)).sdp_value
    assert a == pytest.approx(0.81974217, abs=1e-6)
    assert b == pytest.approx(a, abs=1e-6)


def test_separable_accepted_with_and_without_cuts():
    for s in range(4):
        rho = random_separable([2], [2], seed=s)
        for k in range(1, 7):
            assert check_k_extendible(rho, ExtensionOptions(k=k)).sdp_value >= 1 - 1e-6
        for k in (2, 3):
            assert check_k_extendible(rho, ExtensionOptions(k=k, ppt_cuts=True)).sdp_value >= 1 - 1e-6


def test_werner_monotonicity():
    rejected = {}
    for k in (2, 3, 4):
        rejected[k] = [p for p in np.linspace(0, 1, 11)
                       if not check_k_extendible(werner(p), ExtensionOptions(k=k)).extendible]
    for k in (2, 3):
        assert set(rejected[k]) <= set(rejected[k + 1])
    assert 1.0 in rejected[2] and 0.0 not in rejected[4]


# --- witnesses --------------------------------------------------------------


@pytest.fixture(scope="module")
def phi_witness():
    rep = check_k_extendible(max_entangled(2), ExtensionOptions(k=2))
    assert rep.extendible is False
    return rep, extract_witness(rep, max_entangled(2))


def test_witness_on_phi_plus(phi_witness):
    rep, w = phi_witness
    assert w.expectation(max_entangled(2)) < 0
    assert np.max(np.abs(w.eigvalsh())) == pytest.approx(1)
    assert product_min(w, 0.01).value >= -1e-6
    assert w.expectation(maximally_mixed([2, 2])) >= 0


def test_witness_on_separable_and_extendible(phi_witness):
    _, w = phi_witness
    for s in range(100):
        assert w.expectation(random_separable([2], [2], seed=s)) >= -1e-7
    for s in range(20):
        assert w.expectation(random_k_extendible([2], [2], 2, seed=s)) >= -1e-9


def test_witness_param_form():
    rho = mix_with_mixed(max_entangled(2), 0.1)
    for opts in (ExtensionOptions(k=2, ppt_cuts=True), ExtensionOptions(k=2, bose=False)):
        rep = check_k_extendible(rho, opts)
        assert rep.extendible is False
        w = rep.witness
        assert rep.witness_value < 0
        assert product_min(w, 0.02).value >= -1e-6
        for s in range(20):
            assert w.expectation(random_separable([2], [2], seed=s)) >= -1e-7


def test_witness_requires_solution():
    rep = check_k_extendible(maximally_mixed([2, 2]), ExtensionOptions(k=2))
    rep.solution = None
    with pytest.raises(ValueError):
        extract_witness(rep)


# --- optimization -----------------------------------------------------------


def test_optimize_identity_and_k1():
    for k in (1, 2, 5):
        assert optimize_over_extendible(HermitianOp(np.eye(4), [2, 2]), ExtensionOptions(k=k)).value \
            == pytest.approx(1)
    assert optimize_over_extendible(max_entangled(2), ExtensionOptions(k=1)).value == pytest.approx(1)


@pytest.mark.parametrize("k", [2, 4, 8])
def test_optimize_phi_plus(k):
    res = optimize_over_extendible(max_entangled(2), ExtensionOptions(k=k))
    assert res.value == pytest.approx((k + 1) / (2 * k), abs=1e-10)
    assert res.marginal.expectation(max_entangled(2)) == pytest.approx(res.value, abs=1e-8)
    sdp = optimize_over_extendible(max_entangled(2), ExtensionOptions(k=k), method="sdp")
    assert sdp.value == pytest.approx(res.value, abs=1e-6)
    cut = optimize_over_extendible(max_entangled(2), ExtensionOptions(k=k, ppt_cuts=True))
    assert cut.value == pytest.approx(0.5, abs=1e-6)


def test_optimize_monotone(gen):
    for _ in range(3):
        m = HermitianOp(rand_state(gen, 6) - np.eye(6) / 6, [2, 3])
        vals = [optimize_over_extendible(m, ExtensionOptions(k=k)).value for k in range(1, 7)]
        assert all(b <= a + 1e-6 for a, b in zip(vals, vals[1:]))
        nb = optimize_over_extendible(m, ExtensionOptions(k=2, bose=False)).value
        assert nb == pytest.approx(vals[1], abs=1e-8)


def test_optimize_rejects_bad_method():
    with pytest.raises(ValueError):
        optimize_over_extendible(max_entangled(2), ExtensionOptions(k=2), method="simplex")
    with pytest.raises(ValueError):
        optimize_over_extendible(max_entangled(2), ExtensionOptions(k=2, ppt_cuts=True), method="eig")


# --- disentangler -----------------------------------------------------------


def test_disentangler_examples(gen):
    rho = DensityMatrix(rand_state(gen, 6), [2, 3])
    assert np.allclose(disentangler(rho).matrix, rho.matrix)
    ra, s = DensityMatrix(rand_state(gen, 2)), DensityMatrix(rand_state(gen, 2))
    out = disentangler(tensor(ra, s, s, s))
    assert np.allclose(out.matrix, np.kron(ra.matrix, s.matrix))
    for _ in range(5):
        x = DensityMatrix(rand_state(gen, 16), [2, 2, 2, 2])
        out = disentangler(x)
        assert out.trace() == pytest.approx(1)
        assert out.eigvalsh()[0] >= -1e-12
    with pytest.raises(ValueError):
        disentangler(DensityMatrix(np.eye(12) / 12, [2, 2, 3]))


def test_disentangler_output_near_separable(gen):
    # on a Bose-symmetric input the average of the (a, b_i) marginals is the
    # occupation-basis marginal, which reaches k in the thousands cheaply
    eps = 1.0
    k = required_k(eps, 2, "frobenius")
    basis = SymBasis(2, k)
    n = 2 * basis.size
    g = gen.standard_normal((n, 3)) + 1j * gen.standard_normal((n, 3))
    kraus = [np.kron(np.eye(2), kk.toarray()) for kk in basis.marginal_kraus()]
    out = sum(kk @ g @ g.conj().T @ kk.conj().T for kk in kraus) / k
    out = DensityMatrix(out / np.trace(out).real, [2, 2], check=False)
    small = SymBasis(2, 3)
    y = rand_state(gen, 2 * small.size)
    assert np.allclose(disentangler(sym_embed(DensityMatrix(y, check=False), 2, 2, 3)).matrix,
                       sym_marginal_matrix(y, 2, small))
    assert nearest_ppt_distance(out) <= eps


def test_sdp_rejects_multipartite():
    with pytest.raises(ValueError):
        check_k_extendible(maximally_mixed([2, 2, 2]), ExtensionOptions(k=2))
