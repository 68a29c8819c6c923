"""Hermitian operator bases and two-qudit coefficient decompositions.

The basis for dimension ``d`` is the generalized Gell-Mann set (identity,
then symmetric, antisymmetric and diagonal families) rescaled so that
``Tr[B_a B_b] = d * delta_ab``. For ``d = 2`` this is ``(I, X, Y, Z)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .linalg import as_matrix, check_hermitian


@dataclass(frozen=True)
class HermitianBasis:
    dim: int
    elements: np.ndarray  # (d*d, d, d), element 0 is the identity

    def __len__(self) -> int:
        return len(self.elements)

    def __getitem__(self, i: int) -> np.ndarray:
        return self.elements[i]

    def gram(self) -> np.ndarray:
        return np.real(np.einsum("aij,bji->ab", self.elements, self.elements))


@lru_cache(maxsize=None)
def _basis_elements(d: int) -> np.ndarray:
    mats = [np.eye(d, dtype=np.complex128)]
    pairs = [(j, k) for j in range(d) for k in range(j + 1, d)]
    for j, k in pairs:
        m = np.zeros((d, d), dtype=np.complex128)
        m[j, k] = m[k, j] = 1.0
        mats.append(m)
    for j, k in pairs:
        m = np.zeros((d, d), dtype=np.complex128)
        m[j, k] = -1j
        m[k, j] = 1j
        mats.append(m)
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        mats.append(np.diag(diag * np.sqrt(2.0 / (l * (l + 1)))).astype(np.complex128))
    # Gell-Mann normalization is Tr = 2; rescale the traceless ones to Tr = d.
    out = np.stack(mats)
    out[1:] *= np.sqrt(d / 2.0)
    out.setflags(write=False)
    return out


def build_basis(d: int) -> HermitianBasis:
    """Orthogonal Hermitian basis of ``d x d`` matrices, identity first."""
    d = int(d)
    if d < 2:
        raise ValueError(f"basis dimension must be >= 2, got {d}")
    return HermitianBasis(d, _basis_elements(d))


@dataclass(frozen=True)
class PauliCoefficients:
    """Real coefficients ``c[a0, aE]`` of ``rho = sum c B_a0 (x) B_aE``.

    ``c`` has shape ``(mu**2, nu**2)``; its row-major flattening is the
    squared-coefficient vector layout used by the Markov chain (index 0 is
    the identity component).
    """

    mu: int
    nu: int
    c: np.ndarray

    @property
    def flat(self) -> np.ndarray:
        return self.c.ravel()

    def squared(self) -> np.ndarray:
        return self.flat ** 2


def decompose(rho, mu: int, nu: int, tol: float = 1e-8) -> PauliCoefficients:
    rho = as_matrix(rho)
    mu, nu = int(mu), int(nu)
    L = mu * nu
    if rho.shape != (L, L):
        raise ValueError(f"rho has shape {rho.shape}, expected ({L}, {L})")
    check_hermitian(rho)
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise ValueError(f"rho must have unit trace, got {tr:.12g}")
    bs = build_basis(mu).elements
    be = build_basis(nu).elements
    # Tr[rho (A (x) B)] = sum rho[(i,k),(j,l)] A[j,i] B[l,k]
    c = np.einsum("ikjl,aji,blk->ab", rho.reshape(mu, nu, mu, nu), bs, be) / L
    if np.max(np.abs(c.imag)) > 1e-10:
        raise ValueError("coefficients are not real; input is not Hermitian")
    return PauliCoefficients(mu, nu, np.ascontiguousarray(c.real))


def reconstruct(coeffs: PauliCoefficients) -> np.ndarray:
    bs = build_basis(coeffs.mu).elements
    be = build_basis(coeffs.nu).elements
    L = coeffs.mu * coeffs.nu
    return np.einsum("ab,aij,bkl->ikjl", coeffs.c, bs, be).reshape(L, L)


def purity_from_coeffs(coeffs: PauliCoefficients) -> tuple[float, float]:
    """Joint purity ``mu*nu*sum c^2`` and system purity ``mu*nu^2*sum_a c[a,0]^2``."""
    mu, nu, c = coeffs.mu, coeffs.nu, coeffs.c
    p_joint = mu * nu * float(np.sum(c ** 2))
    p_system = mu * nu * nu * float(np.sum(c[:, 0] ** 2))
    return p_joint, p_system
