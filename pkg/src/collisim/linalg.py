"""Dense complex linear algebra on numpy arrays.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128`` in
row-major (C) order. All functions are pure; inputs are never modified.
"""
from __future__ import annotations

from collections.abc import Iterable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-10
PSD_CLAMP_TOL = 1e-10
PSD_ERROR_TOL = 1e-8


class NotHermitianError(ValueError):
    pass


class NotPSDError(ValueError):
    """Raised when a matrix has an eigenvalue below ``-PSD_ERROR_TOL``."""


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {m.shape}")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def hermitian_defect(a: np.ndarray) -> float:
    """Largest elementwise deviation ``max|A - A^dagger|``."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - dagger(a))))


def check_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    a = np.asarray(a)
    if a.shape[-1] != a.shape[-2]:
        raise NotHermitianError(f"matrix is not square: {a.shape}")
    defect = hermitian_defect(a)
    if defect > tol:
        raise NotHermitianError(f"matrix is not Hermitian (max|A-A^+| = {defect:.3e})")


def kron(a, b) -> np.ndarray:
    """Kronecker product, ``(A (x) B)[i*rb + k, j*cb + l] = A[i, j] B[k, l]``."""
    return np.kron(as_matrix(a), as_matrix(b))


def trace(a) -> complex:
    return complex(np.trace(as_matrix(a)))


def det(a) -> complex:
    return complex(np.linalg.det(as_matrix(a)))


def purity(rho):
    """``Tr[rho^2]`` for a Hermitian ``rho``; a stack ``(B, d, d)`` gives an array of B values."""
    rho = np.asarray(rho)
    p = np.real(np.einsum("...ij,...ji->...", rho, rho))
    return float(p) if p.ndim == 0 else p


def _normalize_keep(keep: Iterable[int], n: int) -> list[int]:
    kept = sorted(set(int(k) for k in keep))
    if not kept:
        raise ValueError("keep must name at least one subsystem")
    if kept[0] < 0 or kept[-1] >= n:
        raise IndexError(f"subsystem index out of range for {n} subsystems: {kept}")
    return kept


def partial_trace(rho, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Reduced density operator of the subsystems in ``keep``.

    The kept subsystems appear in ascending index order in the result. The
    trace is taken by contracting strided axes of ``rho`` viewed as a tensor
    with one row index and one column index per subsystem.
    """
    rho = as_matrix(rho)
    dims = [int(d) for d in dims]
    total = int(np.prod(dims))
    if rho.shape != (total, total):
        raise ValueError(f"rho has shape {rho.shape}, dims {dims} require ({total}, {total})")
    n = len(dims)
    kept = _normalize_keep(keep, n)
    tensor = rho.reshape(dims + dims)
    row = list(range(n))
    col = [k if k not in kept else n + k for k in range(n)]
    out = [k for k in kept] + [n + k for k in kept]
    d_keep = int(np.prod([dims[k] for k in kept]))
    return np.einsum(tensor, row + col, out).reshape(d_keep, d_keep)


def reduced_from_vector(psi, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Reduced density operator of a pure state vector, without forming ``|psi><psi|``.

    ``psi`` may carry one leading batch axis, ``(B, prod(dims))``; the result
    is then ``(B, d_keep, d_keep)``.
    """
    psi = np.asarray(psi, dtype=np.complex128)
    dims = [int(d) for d in dims]
    total = int(np.prod(dims))
    batched = psi.ndim == 2
    if psi.shape[-1] != total or psi.ndim > 2:
        raise ValueError(f"state of shape {psi.shape} does not match dims {dims}")
    kept = _normalize_keep(keep, len(dims))
    rest = [k for k in range(len(dims)) if k not in kept]
    d_keep = int(np.prod([dims[k] for k in kept]))
    lead = psi.shape[:-1]
    off = len(lead)
    axes = list(range(off)) + [k + off for k in kept + rest]
    m = np.transpose(psi.reshape(lead + tuple(dims)), axes).reshape(lead + (d_keep, -1))
    out = m @ dagger(m)
    return out if batched else out.reshape(d_keep, d_keep)


def eig_hermitian(a) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and eigenvectors (columns) of a Hermitian matrix."""
    a = as_matrix(a)
    check_hermitian(a)
    w, v = np.linalg.eigh(0.5 * (a + dagger(a)))
    return w[::-1].copy(), v[:, ::-1].copy()


def sqrt_psd(a) -> np.ndarray:
    """Hermitian square root of a positive semidefinite matrix.

    Eigenvalues in ``[-PSD_ERROR_TOL, 0)`` are treated as roundoff and
    clamped to zero; anything more negative raises :class:`NotPSDError`.
    """
    w, v = eig_hermitian(a)
    if w.size and w[-1] < -PSD_ERROR_TOL:
        raise NotPSDError(f"matrix is not positive semidefinite (min eigenvalue {w[-1]:.3e})")
    root = np.sqrt(np.clip(w, 0.0, None))
    return (v * root) @ dagger(v)


def check_density(rho, dim: int | None = None, tol: float = 1e-8) -> np.ndarray:
    """Validate and return ``rho`` as a density matrix (Hermitian, PSD, unit trace)."""
    rho = as_matrix(rho)
    if rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got {rho.shape}")
    if dim is not None and rho.shape[0] != dim:
        raise ValueError(f"expected a {dim}x{dim} density matrix, got {rho.shape}")
    check_hermitian(rho)
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise ValueError(f"density matrix must have unit trace, got {tr:.12g}")
    w = np.linalg.eigvalsh(0.5 * (rho + dagger(rho)))
    if w[0] < -tol:
        raise NotPSDError(f"density matrix has negative eigenvalue {w[0]:.3e}")
    return rho
