"""Sequential random collisions of a system qudit with environment qudits.

Two equivalent views of the same dynamics are provided:

* refreshed mode: a single environment qudit is reset to ``eta`` after every
  collision; the system is kept as a ``mu x mu`` density matrix. Exact for
  the system marginal, and ``eta`` may be mixed.
* chain mode: the whole system + chain pure state vector is kept, one new
  qudit appended per collision. Needed for entanglement with the chain.

Both modes draw exactly one Haar unitary on ``mu*nu`` per collision from the
trajectory's stream, so with the same stream they produce the same system
marginal up to roundoff.

The ``*_batch`` functions advance many trajectories at once; they are what
the ensemble drivers use.
"""
from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .haar import RngStream, haar_unitaries, haar_unitary
from .linalg import check_density, dagger, purity, reduced_from_vector

DEFAULT_MAX_AMPLITUDES = 1 << 20


class ChainCapacityError(MemoryError):
    """Appending another qudit would exceed the amplitude cap."""


def basis_state(dim: int, index: int = 0) -> np.ndarray:
    v = np.zeros(dim, dtype=np.complex128)
    v[index] = 1.0
    return v


def pure_density(vec) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.complex128)
    return np.outer(vec, vec.conj())


def env_state_with_purity(nu: int, p_eta: float) -> np.ndarray:
    """Diagonal ``nu x nu`` state ``q|0><0| + (1-q) I/nu`` with purity ``p_eta``."""
    if not (1.0 / nu - 1e-12 <= p_eta <= 1.0 + 1e-12):
        raise ValueError(f"environment purity {p_eta} outside [1/{nu}, 1]")
    q = np.sqrt(max(0.0, (p_eta * nu - 1.0) / (nu - 1.0)))
    diag = np.full(nu, (1.0 - q) / nu)
    diag[0] += q
    return np.diag(diag).astype(np.complex128)


# -- refreshed mode ---------------------------------------------------------


@dataclass
class RefreshedConfig:
    mu: int
    nu: int
    eta: np.ndarray
    steps: int
    rng: RngStream

    def __post_init__(self):
        self.mu, self.nu = int(self.mu), int(self.nu)
        if self.mu < 1 or self.nu < 1:
            raise ValueError("dimensions must be positive")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        self.eta = check_density(self.eta, self.nu)


def refreshed_step_batch(rho_s: np.ndarray, eta: np.ndarray, unitaries: np.ndarray) -> np.ndarray:
    """``Tr_E[U (rho_s (x) eta) U^+]`` for stacks ``rho_s (B, mu, mu)``, ``unitaries (B, L, L)``."""
    b, mu, _ = rho_s.shape
    nu = eta.shape[0]
    joint = np.einsum("bij,kl->bikjl", rho_s, eta).reshape(b, mu * nu, mu * nu)
    out = unitaries @ joint @ dagger(unitaries)
    return np.einsum("bikjk->bij", out.reshape(b, mu, nu, mu, nu))


def collide_refreshed(rho_s, config: RefreshedConfig) -> np.ndarray:
    """One collision with a fresh Haar unitary, environment traced out."""
    rho_s = check_density(rho_s, config.mu)
    u = haar_unitary(config.mu * config.nu, config.rng)
    return refreshed_step_batch(rho_s[None], config.eta, u[None])[0]


def run_refreshed_trajectory(config: RefreshedConfig, rho0) -> list[float]:
    """System purity ``P(0), ..., P(steps)`` along one random trajectory."""
    rho = check_density(rho0, config.mu)
    out = [purity(rho)]
    for _ in range(config.steps):
        rho = collide_refreshed(rho, config)
        out.append(purity(rho))
    return out


def refreshed_purities(
    rho0, eta, mu: int, nu: int, steps: int, rngs: Sequence[RngStream]
) -> np.ndarray:
    """Purity trajectories ``(len(rngs), steps + 1)``, one row per stream."""
    rho0 = check_density(rho0, mu)
    eta = check_density(eta, nu)
    b = len(rngs)
    rho = np.broadcast_to(rho0, (b, mu, mu)).copy()
    out = np.empty((b, steps + 1))
    out[:, 0] = purity(rho0)
    for t in range(1, steps + 1):
        rho = refreshed_step_batch(rho, eta, haar_unitaries(mu * nu, rngs))
        out[:, t] = purity(rho)
    return out


# -- chain mode -------------------------------------------------------------


@dataclass
class ChainState:
    """Pure state of the system (subsystem 0) and the collided chain qudits.

    ``eta`` is the pure state vector every new environment qudit starts in.
    """

    amplitudes: np.ndarray
    dims: tuple[int, ...]
    eta: np.ndarray = field(repr=False)

    @property
    def collisions_done(self) -> int:
        return len(self.dims) - 1

    @property
    def mu(self) -> int:
        return self.dims[0]

    @property
    def nu(self) -> int:
        return len(self.eta)

    @classmethod
    def initial(cls, system, eta) -> "ChainState":
        system = np.asarray(system, dtype=np.complex128).ravel()
        eta = np.asarray(eta, dtype=np.complex128).ravel()
        for name, v in (("system", system), ("eta", eta)):
            if abs(np.linalg.norm(v) - 1.0) > 1e-10:
                raise ValueError(f"{name} state vector must be normalized")
        return cls(system.copy(), (len(system),), eta.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def collision_operator(unitaries: np.ndarray, mu: int, eta: np.ndarray) -> np.ndarray:
    """``U (I_mu (x) |eta>)``: the ``(B, mu*nu, mu)`` map from system amplitudes to
    post-collision system+new-qudit amplitudes."""
    nu = len(eta)
    embed = np.kron(np.eye(mu), eta.reshape(nu, 1))
    return unitaries @ embed


def collide_chain_batch(psi: np.ndarray, mu: int, eta: np.ndarray, unitaries: np.ndarray) -> np.ndarray:
    """Append a qudit in ``eta`` to each state of ``psi (B, N)`` and collide it with the system.

    ``N = mu * M``; the result has shape ``(B, N * nu)`` with the new qudit as
    the last tensor factor.
    """
    b, n = psi.shape
    x = psi.reshape(b, mu, n // mu)
    w = collision_operator(unitaries, mu, eta)          # (B, mu*nu, mu)
    y = np.swapaxes(x, 1, 2) @ np.swapaxes(w, 1, 2)     # (B, M, mu*nu)
    nu = len(eta)
    y = y.reshape(b, n // mu, mu, nu).transpose(0, 2, 1, 3)
    return np.ascontiguousarray(y).reshape(b, n * nu)


def collide_chain(
    state: ChainState, rng: RngStream, max_amplitudes: int = DEFAULT_MAX_AMPLITUDES
) -> ChainState:
    """Collide the system with one new environment qudit (fresh Haar unitary)."""
    size = state.amplitudes.size * state.nu
    if size > max_amplitudes:
        raise ChainCapacityError(
            f"collision {state.collisions_done + 1} needs {size} amplitudes (cap {max_amplitudes})"
        )
    u = haar_unitary(state.mu * state.nu, rng)
    amps = collide_chain_batch(state.amplitudes[None], state.mu, state.eta, u[None])[0]
    return ChainState(amps, state.dims + (state.nu,), state.eta)


def reduced_density(state: ChainState, keep: Iterable[int]) -> np.ndarray:
    """Reduced density operator of the listed subsystems (0 = system, j = j-th collided qudit)."""
    return reduced_from_vector(state.amplitudes, state.dims, keep)


def system_purities_chain(psi: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    rho = reduced_from_vector(psi, dims, [0])
    return purity(rho)
