"""Wootters concurrence, one-vs-rest tangles and the multipartite residual tangle.

With ``rho = W W^+`` (``W = V sqrt(Lambda)`` from the Hermitian
eigendecomposition), the square roots of the eigenvalues of
``rho (Y(x)Y) rho* (Y(x)Y)`` are the singular values of the complex
symmetric matrix ``W^+ (Y(x)Y) W*``. This needs only a Hermitian
eigensolver and an SVD, and never takes the square root of a roundoff-level
eigenvalue of a product matrix, so rank-deficient states (pure pairs) keep
full precision. Eigenvalues of ``rho`` below ``RANK_TOL`` are treated as
exact zeros. Complex conjugation is entrywise in the computational basis.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .collision import ChainState, reduced_density
from .linalg import (
    PSD_ERROR_TOL,
    NotPSDError,
    as_matrix,
    check_hermitian,
    dagger,
    reduced_from_vector,
)

log = logging.getLogger(__name__)

YY = np.array(
    [[0, 0, 0, -1], [0, 0, 1, 0], [0, 1, 0, 0], [-1, 0, 0, 0]], dtype=np.complex128
)
TANGLE_TOL = 1e-9


def spin_flip(rho: np.ndarray) -> np.ndarray:
    return YY @ np.conj(rho) @ YY


RANK_TOL = 1e-14


def _alphas(rhos: np.ndarray) -> np.ndarray:
    """Descending ``alpha_k`` for a stack of two-qubit states ``(B, 4, 4)``."""
    w, v = np.linalg.eigh(0.5 * (rhos + dagger(rhos)))
    if np.any(w[:, 0] < -PSD_ERROR_TOL):
        raise NotPSDError(f"state has negative eigenvalue {w[:, 0].min():.3e}")
    root = np.where(w > RANK_TOL, np.sqrt(np.clip(w, 0.0, None)), 0.0)
    wm = v * root[:, None, :]
    m = dagger(wm) @ YY @ np.conj(wm)
    return np.linalg.svd(m, compute_uv=False)


def concurrence_batch(rhos) -> np.ndarray:
    """Concurrence of each state in a stack ``(B, 4, 4)``."""
    rhos = np.asarray(rhos, dtype=np.complex128)
    if rhos.ndim != 3 or rhos.shape[1:] != (4, 4):
        raise ValueError(f"expected a (B, 4, 4) stack of two-qubit states, got {rhos.shape}")
    a = _alphas(rhos)
    return np.maximum(0.0, a[:, 0] - a[:, 1] - a[:, 2] - a[:, 3])


def concurrence(rho) -> float:
    """Concurrence ``max(0, a1 - a2 - a3 - a4)`` of a two-qubit density matrix."""
    rho = as_matrix(rho)
    if rho.shape != (4, 4):
        raise ValueError(f"concurrence needs a 4x4 two-qubit state, got {rho.shape}")
    check_hermitian(rho)
    return float(concurrence_batch(rho[None])[0])


def tangle(rho) -> float:
    return concurrence(rho) ** 2


def _clamp(value, what: str):
    lo = np.min(value)
    hi = np.max(value)
    if lo < -1e-8 or hi > 1 + 1e-8:
        log.warning("%s outside [0, 1] beyond roundoff: [%.3e, %.3e]", what, lo, hi)
    return np.clip(value, 0.0, 1.0)


def one_vs_rest_tangle(rho_i) -> float:
    """``4 det(rho_i)`` for a qubit marginal of a pure joint state."""
    rho_i = as_matrix(rho_i)
    if rho_i.shape != (2, 2):
        raise ValueError("one-vs-rest tangle is defined for qubit marginals only")
    check_hermitian(rho_i)
    return float(_clamp(4.0 * np.real(np.linalg.det(rho_i)), "tau_rest"))


def tangle_vs_rest(state: ChainState, subsystem: int) -> float:
    if not 0 <= subsystem < len(state.dims):
        raise IndexError(f"subsystem {subsystem} out of range")
    if state.dims[subsystem] != 2:
        raise ValueError(
            f"subsystem {subsystem} has dimension {state.dims[subsystem]}; the tangle needs a qubit"
        )
    return one_vs_rest_tangle(reduced_density(state, [subsystem]))


@dataclass(frozen=True)
class TangleRecord:
    step: int
    pairwise: tuple[float, ...]  # tau_{0|j} for j = 1..step
    tau_chain: float
    tau_multi: float


def _check_qubit_chain(dims) -> None:
    if any(d != 2 for d in dims):
        raise ValueError(f"tangle analysis needs qubits only, got dims {tuple(dims)}")


def multipartite_tangle(state: ChainState) -> TangleRecord:
    _check_qubit_chain(state.dims)
    t = state.collisions_done
    if t < 1:
        raise ValueError("need at least one collision")
    pairwise = [float(_clamp(tangle(reduced_density(state, [0, j])), "tau_0j")) for j in range(1, t + 1)]
    chain = tangle_vs_rest(state, 0)
    return TangleRecord(t, tuple(pairwise), chain, chain - sum(pairwise))


def tangles_batch(psi: np.ndarray, dims) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pairwise tangles ``(B, t)``, ``tau_chain (B,)`` and ``tau_multi (B,)`` for a batch of qubit chains."""
    dims = list(dims)
    _check_qubit_chain(dims)
    t = len(dims) - 1
    pair = np.empty((psi.shape[0], t))
    for j in range(1, t + 1):
        pair[:, j - 1] = concurrence_batch(reduced_from_vector(psi, dims, [0, j])) ** 2
    pair = _clamp(pair, "tau_0j")
    rho0 = reduced_from_vector(psi, dims, [0])
    chain = _clamp(4.0 * np.real(np.linalg.det(rho0)), "tau_rest")
    return pair, chain, chain - pair.sum(axis=1)
