import math

import numpy as np
import pytest

from symext.linalg import HermitianOp
from symext.nets import (
    NetCostError, product_max, product_min, qubit_net, qubit_net_size, sphere_net, sphere_net_size,
)
from symext.states import max_entangled, random_pure

SWAP = HermitianOp(np.eye(4)[[0, 2, 1, 3]], [2, 2])


def _bloch(v):
    a, b = v
    return np.array([2 * (a.conjugate() * b).real, 2 * (a.conjugate() * b).imag, abs(a)**2 - abs(b)**2])


@pytest.mark.parametrize("h", [0.5, 0.2, 0.05])
def test_qubit_net_covering(h):
    net = qubit_net(h)
    assert net.shape == (qubit_net_size(h), 2)
    assert np.allclose(np.linalg.norm(net, axis=1), 1)
    pts = np.array([_bloch(v) for v in net])
    gen = np.random.default_rng(0)
    for _ in range(300):
        b = _bloch(random_pure(2, seed=int(gen.integers(1 << 30))))
        assert np.min(np.linalg.norm(pts - b, axis=1)) <= h + 1e-12


@pytest.mark.parametrize("d,h", [(3, 0.3), (4, 0.45)])
def test_sphere_net_covering(d, h):
    net = sphere_net(d, h)
    assert net.shape == (sphere_net_size(d, h), d)
    assert np.allclose(np.linalg.norm(net, axis=1), 1)
    for s in range(100):
        v = random_pure(d, seed=s)
        v = v * np.exp(-1j * np.angle(v[0]))
        assert np.min(np.linalg.norm(net - v, axis=1)) <= (d - 1) * h + 1e-12


def test_deterministic():
    assert np.array_equal(qubit_net(0.1), qubit_net(0.1))
    assert np.array_equal(sphere_net(3, 0.2), sphere_net(3, 0.2))


def test_examples():
    ident = HermitianOp(np.eye(4), [2, 2])
    assert product_max(ident, 0.2).value == pytest.approx(1)
    p01 = HermitianOp(np.diag([0.0, 1, 0, 0]), [2, 2])
    assert product_max(p01, 0.05).value == pytest.approx(1)
    res = product_max(max_entangled(2), 0.01)
    assert abs(res.value - 0.5) <= 0.02
    assert res.error_bound == pytest.approx(0.04)
    a, b = res.argmax
    v = np.kron(a, b)
    assert (v.conj() @ max_entangled(2).matrix @ v).real == pytest.approx(res.value)
    assert abs(product_min(SWAP, 0.01).value) < 1e-3


def test_one_sided_matches_two_sided():
    gen = np.random.default_rng(5)
    g = gen.standard_normal((4, 4)) + 1j * gen.standard_normal((4, 4))
    m = HermitianOp((g + g.conj().T) / 2, [2, 2])
    two = product_max(m, 0.02)
    one = product_max(m, 0.02, two_sided=False)
    assert one.value >= two.value - 1e-12
    assert abs(one.value - two.value) <= two.error_bound


def test_qudit_values():
    assert product_max(max_entangled(3), 0.05).value == pytest.approx(1 / 3, abs=1e-9)
    res = product_max(HermitianOp(np.eye(6), [2, 3]), 0.1)
    assert res.value == pytest.approx(1) and res.method == "net+eig"


def test_guards():
    with pytest.raises(NetCostError):
        product_max(HermitianOp(np.eye(25), [5, 5]), 0.1)
    with pytest.raises(NetCostError):
        product_max(max_entangled(3), 0.01)
    with pytest.raises(NetCostError):
        product_max(max_entangled(2), 0.001)
    with pytest.raises(ValueError):
        product_max(max_entangled(2), 0)
    with pytest.raises(ValueError):
        product_max(HermitianOp(np.eye(9), [3, 3]), 0.1, two_sided=True)
