import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from collisim import linalg
from collisim.pauli import build_basis, decompose, purity_from_coeffs, reconstruct
from conftest import random_density, random_pure

PAULIS = [
    np.eye(2),
    np.array([[0, 1], [1, 0]]),
    np.array([[0, -1j], [1j, 0]]),
    np.diag([1, -1]),
]
PHI_PLUS = np.array([1, 0, 0, 1]) / np.sqrt(2)


def test_qubit_basis_is_pauli_set():
    b = build_basis(2)
    assert len(b) == 4
    for got, want in zip(b.elements, PAULIS):
        assert np.array_equal(got, want)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_gram_matrix_and_hermiticity(d):
    b = build_basis(d)
    assert len(b) == d * d
    gram = np.array([[np.trace(x @ y) for y in b.elements] for x in b.elements])
    assert np.allclose(gram, d * np.eye(d * d), atol=1e-12)
    for m in b.elements:
        assert linalg.hermitian_defect(m) <= 1e-12
    traces = [np.trace(m) for m in b.elements]
    assert np.isclose(traces[0], d)
    assert np.allclose(traces[1:], 0, atol=1e-12)


def test_basis_rejects_small_dim():
    with pytest.raises(ValueError):
        build_basis(1)


def test_decompose_maximally_mixed():
    c = decompose(np.eye(4) / 4, 2, 2)
    expected = np.zeros((4, 4))
    expected[0, 0] = 0.25
    assert np.allclose(c.c, expected, atol=1e-15)
    assert purity_from_coeffs(c) == pytest.approx((0.25, 0.5))


def test_decompose_bell_state_by_direct_traces():
    rho = np.outer(PHI_PLUS, PHI_PLUS.conj())
    c = decompose(rho, 2, 2)
    # direct oracle: Tr[rho (s_a (x) s_b)] / 4 with explicit Pauli matrices
    direct = np.array([[np.trace(rho @ np.kron(a, b)).real / 4 for b in PAULIS] for a in PAULIS])
    assert np.allclose(c.c, direct, atol=1e-15)
    expected = np.zeros((4, 4))
    expected[0, 0] = expected[1, 1] = expected[3, 3] = 0.25
    expected[2, 2] = -0.25
    assert np.allclose(c.c, expected, atol=1e-15)
    assert purity_from_coeffs(c) == pytest.approx((1.0, 0.5))


def test_pure_state_purity_constraint(rng):
    for _ in range(20):
        psi = random_pure(4, rng)
        c = decompose(np.outer(psi, psi.conj()), 2, 2)
        assert abs(4 * np.sum(c.c ** 2) - 1.0) <= 1e-9


def test_decompose_rejects_bad_trace():
    with pytest.raises(ValueError):
        decompose(np.eye(4) / 2, 2, 2)
    with pytest.raises(ValueError):
        decompose(np.eye(6) / 6, 2, 2)


DIM_PAIRS = list(itertools.product([2, 3, 4], repeat=2))


@pytest.mark.parametrize("mu,nu", DIM_PAIRS)
def test_round_trip_constraints_and_purities(mu, nu, rng):
    L = mu * nu
    for k in range(100):
        rho = random_density(L, rng, rank=1 + k % L)
        coeffs = decompose(rho, mu, nu)
        assert abs(coeffs.c[0, 0] - 1.0 / L) <= 1e-10
        assert np.max(np.abs(reconstruct(coeffs) - rho)) <= 1e-9
        p_se = linalg.purity(rho)
        rest = np.sum(coeffs.c ** 2) - coeffs.c[0, 0] ** 2
        assert rest == pytest.approx((L * p_se - 1) / L ** 2, abs=1e-12)
        p_joint, p_sys = purity_from_coeffs(coeffs)
        assert p_joint == pytest.approx(p_se, abs=1e-9)
        p_direct = linalg.purity(linalg.partial_trace(rho, [mu, nu], [0]))
        assert p_sys == pytest.approx(p_direct, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(DIM_PAIRS), st.integers(0, 2**32 - 1))
def test_identity_coefficient_property(dims, seed):
    mu, nu = dims
    rho = random_density(mu * nu, np.random.default_rng(seed))
    c = decompose(rho, mu, nu)
    assert abs(c.c[0, 0] - 1 / (mu * nu)) <= 1e-10
    assert np.max(np.abs(reconstruct(c) - rho)) <= 1e-9


def test_flat_layout_is_system_major():
    c = decompose(np.eye(6) / 6, 2, 3)
    assert c.c.shape == (4, 9)
    assert c.flat.shape == (36,)
    assert c.flat[0] == pytest.approx(1 / 6)
    assert np.array_equal(c.squared(), c.flat ** 2)
