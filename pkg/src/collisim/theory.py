"""Closed-form predictions for ensemble-averaged purity relaxation.

Ensemble-averaged squared coefficients of the joint state evolve under a
Markov matrix that fixes the identity component and spreads every other
component uniformly. Everything below follows from that structure together
with the refreshed-environment recursion for the system purity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_EPS = 1e-12


class UnsupportedCombinationError(ValueError):
    """The requested (dimensions, environment purity) combination has no closed form here."""


def _check_dims(mu: int, nu: int) -> tuple[int, int]:
    mu, nu = int(mu), int(nu)
    if mu < 2 or nu < 2:
        raise ValueError(f"dimensions must be >= 2, got mu={mu}, nu={nu}")
    return mu, nu


@dataclass(frozen=True)
class MarkovMatrix:
    L: int
    entries: np.ndarray

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def build_markov(mu: int, nu: int) -> MarkovMatrix:
    """Row-stochastic ``(mu*nu)^2`` square matrix acting on squared coefficients."""
    mu, nu = _check_dims(mu, nu)
    L = mu * nu
    n = L * L
    m = np.full((n, n), 1.0 / (n - 1))
    m[0, :] = 0.0
    m[:, 0] = 0.0
    m[0, 0] = 1.0
    return MarkovMatrix(L, m)


def markov_evolve(c2, m: MarkovMatrix, steps: int = 1) -> np.ndarray:
    """Apply ``c2 <- c2 @ M`` ``steps`` times."""
    c2 = np.asarray(c2, dtype=float).ravel()
    if c2.size != m.size:
        raise ValueError(f"vector length {c2.size} does not match Markov size {m.size}")
    if steps < 0:
        raise ValueError("steps must be >= 0")
    out = c2.copy()
    for _ in range(int(steps)):
        out = out @ m.entries
    return out


def lubkin_purity(mu: int, nu: int) -> float:
    """Mean marginal purity of a Haar-random pure state on ``mu x nu``."""
    return (mu + nu) / (mu * nu + 1)


def equilibrium_purity_map(p_se: float, mu: int, nu: int) -> float:
    """System purity of the Markov equilibrium reached from joint purity ``p_se``."""
    mu, nu = _check_dims(mu, nu)
    L = mu * nu
    if not (1.0 / L - _EPS <= p_se <= 1.0 + _EPS):
        raise ValueError(f"joint purity {p_se} outside [1/{L}, 1]")
    return 1.0 / mu + (mu * mu - 1) / (mu * (L * L - 1)) * (L * p_se - 1.0)


def _check_p_eta(p_eta: float, nu: int) -> float:
    p_eta = float(p_eta)
    if not (1.0 / nu - _EPS <= p_eta <= 1.0 + _EPS):
        raise ValueError(f"environment purity {p_eta} outside [1/{nu}, 1]")
    return p_eta


def refreshed_series(mu: int, nu: int, p_eta: float, p0: float, steps: int) -> list[float]:
    """Ensemble-mean system purity ``P(0..steps)`` with a refreshed environment.

    Qubits accept any environment purity; other dimensions require a pure
    environment state (``p_eta == 1``).
    """
    mu, nu = _check_dims(mu, nu)
    p_eta = _check_p_eta(p_eta, nu)
    if not (1.0 / mu - _EPS <= p0 <= 1.0 + _EPS):
        raise ValueError(f"initial purity {p0} outside [1/{mu}, 1]")
    if steps < 0:
        raise ValueError("steps must be >= 0")
    qubits = mu == 2 and nu == 2
    if not qubits and abs(p_eta - 1.0) > _EPS:
        raise UnsupportedCombinationError(
            f"mixed environment (purity {p_eta}) is only supported for mu = nu = 2"
        )
    out = [float(p0)]
    p = float(p0)
    for _ in range(int(steps)):
        if qubits:
            p = 0.5 + (4.0 * p * p_eta - 1.0) / 10.0
        else:
            p = equilibrium_purity_map(p, mu, nu)
        out.append(p)
    return out


def steady_state_purity(mu: int, nu: int) -> float:
    """Long-time mean system purity for a pure environment: Lubkin purity at ``nu_e = mu*nu``."""
    mu, nu = _check_dims(mu, nu)
    return lubkin_purity(mu, mu * nu)


def refreshed_steady_state(mu: int, nu: int, p_eta: float = 1.0) -> float:
    mu, nu = _check_dims(mu, nu)
    p_eta = _check_p_eta(p_eta, nu)
    if mu == 2 and nu == 2:
        return 2.0 / (5.0 - 2.0 * p_eta)
    if abs(p_eta - 1.0) > _EPS:
        raise UnsupportedCombinationError("mixed environment only supported for mu = nu = 2")
    return steady_state_purity(mu, nu)


def decay_rate(mu: int, nu: int) -> tuple[float, float]:
    """Contraction factor ``alpha`` per collision and rate ``lambda = -ln(alpha)``, pure environment."""
    mu, nu = _check_dims(mu, nu)
    L = mu * nu
    alpha = nu * (mu * mu - 1) / (L * L - 1)
    return alpha, -math.log(alpha)


@dataclass(frozen=True)
class ModelParams:
    mu: int
    nu: int
    p_eta: float
    alpha: float
    lam: float
    steady: float


def model_params(mu: int, nu: int, p_eta: float = 1.0) -> ModelParams:
    mu, nu = _check_dims(mu, nu)
    p_eta = _check_p_eta(p_eta, nu)
    steady = refreshed_steady_state(mu, nu, p_eta)
    if mu == 2 and nu == 2:
        alpha = 0.4 * p_eta
    else:
        alpha = decay_rate(mu, nu)[0]
    return ModelParams(mu, nu, p_eta, alpha, -math.log(alpha), steady)


def purity_variance(mu: int, nu_env: int) -> float:
    """Variance of the marginal purity of a Haar-random pure state on ``mu x nu_env``.

    Pass ``nu_env = mu*nu`` for the collision-model steady-state prediction.
    """
    mu, nu_env = _check_dims(mu, nu_env)
    n = mu * nu_env
    return 2.0 * (mu * mu - 1) * (nu_env * nu_env - 1) / ((n + 3) * (n + 2) * (n + 1) ** 2)
