import math

import numpy as np
import pytest

from collisim import theory
from collisim.haar import RngStream, haar_state, haar_unitaries, streams
from collisim.linalg import purity, reduced_from_vector
from collisim.pauli import decompose


def test_markov_qubit_entries():
    m = theory.build_markov(2, 2)
    assert m.entries.shape == (16, 16)
    assert m.entries[0, 0] == 1.0
    assert np.all(m.entries[0, 1:] == 0) and np.all(m.entries[1:, 0] == 0)
    assert np.allclose(m.entries[1:, 1:], 1 / 15)


def test_markov_qudit_entries():
    m = theory.build_markov(2, 3)
    assert m.entries.shape == (36, 36)
    assert np.allclose(m.entries[1:, 1:], 1 / 35)


@pytest.mark.parametrize("mu,nu", [(2, 2), (2, 3), (3, 2), (4, 2), (3, 3), (4, 4)])
def test_markov_structure(mu, nu):
    m = theory.build_markov(mu, nu).entries
    assert np.allclose(m.sum(axis=1), 1.0, atol=1e-12)
    w = np.sort(np.linalg.eigvals(m).real)
    n = m.shape[0]
    assert np.allclose(w[-2:], 1.0, atol=1e-12)
    assert np.allclose(w[:-2], 0.0, atol=1e-12)
    # left eigenvectors for eigenvalue 1
    v0 = np.zeros(n)
    v0[0] = 1
    v1 = np.ones(n)
    v1[0] = 0
    v1 /= math.sqrt(n - 1)
    assert np.allclose(v0 @ m, v0) and np.allclose(v1 @ m, v1)
    null = n - np.linalg.matrix_rank(m.T - np.eye(n))
    assert null == 2


def test_markov_evolve_examples(rng):
    m = theory.build_markov(2, 2)
    c2 = rng.random(16)
    c2[0] = 1 / 16
    assert np.array_equal(theory.markov_evolve(c2, m, 0), c2)
    out = theory.markov_evolve(c2, m, 1)
    assert out[0] == pytest.approx(1 / 16)
    assert np.allclose(out[1:], c2[1:].sum() / 15)
    with pytest.raises(ValueError):
        theory.markov_evolve(np.ones(15), m)


def fixed_states(mu, nu):
    """Product pure, entangled pure and a rank-2 mixed two-qudit state."""
    L = mu * nu
    prod = np.zeros(L, complex)
    prod[0] = 1
    ent = np.zeros(L, complex)
    ent[0], ent[L - 1] = math.cos(0.4), math.sin(0.4) * np.exp(0.3j)
    other = np.zeros(L, complex)
    other[1] = 1

    def proj(v):
        return np.outer(v, v.conj())

    return [proj(prod), proj(ent), 0.6 * proj(ent) + 0.4 * proj(other)]


def coefficient_oracle(rho, mu, nu, n, seed=0):
    """Squared coefficients of ``U rho U^+``, one Haar draw per stream ``(seed, k)``."""
    us = haar_unitaries(mu * nu, streams(seed, 0, n))
    out = us @ rho @ np.conj(np.swapaxes(us, 1, 2))
    return np.array([decompose(r, mu, nu).squared() for r in out])


def markov_zscores(rho, mu, nu, n, seed=0):
    samples = coefficient_oracle(rho, mu, nu, n, seed)
    predicted = theory.markov_evolve(decompose(rho, mu, nu).squared(), theory.build_markov(mu, nu))
    se = samples.std(axis=0) / math.sqrt(n)
    identity_err = abs(samples[:, 0].mean() - predicted[0])
    z = (samples.mean(axis=0)[1:] - predicted[1:]) / se[1:]
    return identity_err, z


@pytest.mark.parametrize("mu,nu", [(2, 2), (2, 3)])
def test_markov_matches_monte_carlo_collisions(mu, nu):
    identity_err, z = markov_zscores(fixed_states(mu, nu)[1], mu, nu, 10_000)
    assert identity_err <= 1e-12
    assert np.all(np.abs(z) <= 3)


def test_equilibrium_purity_map():
    assert theory.equilibrium_purity_map(1.0, 2, 2) == pytest.approx(0.8)
    for mu, nu in [(2, 3), (3, 2), (4, 2), (3, 5)]:
        assert theory.equilibrium_purity_map(1.0, mu, nu) == pytest.approx((mu + nu) / (mu * nu + 1))
        assert theory.equilibrium_purity_map(1 / (mu * nu), mu, nu) == pytest.approx(1 / mu)
    for p in np.linspace(0.25, 1, 7):
        assert theory.equilibrium_purity_map(p, 2, 2) == pytest.approx(0.5 + (4 * p - 1) / 10)
    with pytest.raises(ValueError):
        theory.equilibrium_purity_map(0.1, 2, 2)


def test_refreshed_series_qubits():
    s = theory.refreshed_series(2, 2, 1.0, 1.0, 3)
    assert s == pytest.approx([1.0, 0.8, 54 / 75, 258 / 375])


def test_refreshed_series_mixed_environment_limit():
    s = theory.refreshed_series(2, 2, 0.5, 1.0, 60)
    assert s[-1] == pytest.approx(2 / (5 - 2 * 0.5), abs=1e-12)
    assert s[-1] == pytest.approx(0.5)


def test_refreshed_series_qudit_limit():
    s = theory.refreshed_series(4, 2, 1.0, 1.0, 80)
    assert s[-1] == pytest.approx(12 / 33, abs=1e-12)


@pytest.mark.parametrize("p_eta", [0.5, 0.6, 0.75, 0.9, 1.0])
def test_xi_geometric_law_qubits(p_eta):
    s = np.array(theory.refreshed_series(2, 2, p_eta, 0.93, 20))
    xi = s - 2 / (5 - 2 * p_eta)
    t = np.arange(21)
    assert np.allclose(xi, (0.4 * p_eta) ** t * xi[0], atol=1e-15)


@pytest.mark.parametrize("mu,nu", [(2, 2), (2, 3), (3, 2), (4, 2), (3, 3)])
def test_series_converges_to_steady_state_with_ratio_alpha(mu, nu):
    alpha, _ = theory.decay_rate(mu, nu)
    steady = theory.steady_state_purity(mu, nu)
    s = np.array(theory.refreshed_series(mu, nu, 1.0, 1.0, 25))
    xi = s - steady
    assert np.allclose(xi[1:], alpha * xi[:-1], atol=1e-15)
    assert steady == pytest.approx(theory.lubkin_purity(mu, mu * nu))


def test_refreshed_series_rejects_mixed_qudits():
    with pytest.raises(theory.UnsupportedCombinationError):
        theory.refreshed_series(3, 2, 0.8, 1.0, 5)
    with pytest.raises(ValueError):
        theory.refreshed_series(2, 2, 0.3, 1.0, 5)
    with pytest.raises(ValueError):
        theory.refreshed_series(2, 2, 1.0, 0.2, 5)


def test_steady_state_values():
    assert theory.steady_state_purity(2, 2) == pytest.approx(2 / 3)
    assert theory.steady_state_purity(4, 2) == pytest.approx(12 / 33)
    assert theory.steady_state_purity(2, 3) == pytest.approx(8 / 13)


def test_decay_rate_values():
    a, lam = theory.decay_rate(2, 2)
    assert a == pytest.approx(0.4) and lam == pytest.approx(math.log(2.5))
    assert lam == pytest.approx(0.916, abs=5e-4)
    a, lam = theory.decay_rate(4, 2)
    assert a == pytest.approx(10 / 21) and lam == pytest.approx(math.log(2.1))


def test_model_params():
    p = theory.model_params(2, 2, 0.75)
    assert p.alpha == pytest.approx(0.3)
    assert p.steady == pytest.approx(2 / 3.5)
    p = theory.model_params(4, 2)
    assert p.lam == pytest.approx(math.log(2.1))
    with pytest.raises(theory.UnsupportedCombinationError):
        theory.model_params(4, 2, 0.9)


def test_purity_variance_table_values():
    assert math.sqrt(theory.purity_variance(2, 4)) == pytest.approx(0.1005, abs=5e-5)
    assert math.sqrt(theory.purity_variance(3, 9)) == pytest.approx(0.0433, abs=5e-5)


def test_purity_variance_matches_haar_states():
    psi = haar_state(4, RngStream(77), count=100_000)
    p = purity(reduced_from_vector(psi, [2, 2], [0]))
    var = p.var()
    # standard error of the sample variance from the fourth central moment
    n = len(p)
    m4 = np.mean((p - p.mean()) ** 4)
    se = math.sqrt((m4 - var ** 2) / n)
    assert abs(var - theory.purity_variance(2, 2)) <= 3 * se
    assert abs(p.mean() - 0.8) <= 3 * p.std() / math.sqrt(n)
