"""Haar-random unitaries and reproducible per-trajectory random streams.

Stream policy
-------------
Every random trajectory ``k`` of an ensemble run with seed ``s`` draws from
its own :class:`RngStream` ``(s, k)``: a PCG64 generator seeded by
``numpy.random.SeedSequence(s, spawn_key=(k,))``. Streams never share state,
so results depend only on ``(s, k)`` and not on how trajectories are split
across worker threads. Normal variates come from numpy's ziggurat sampler
(``Generator.standard_normal``).

Stream ids at or above :data:`RESERVED_STREAM_BASE` are reserved for
auxiliary samplers (e.g. reference distributions) so they never collide with
trajectory streams.
"""
from __future__ import annotations

from collections.abc import Sequence

import numpy as np

RESERVED_STREAM_BASE = 1 << 62


class RngStream:
    """A deterministic random stream identified by ``(seed, stream_id)``."""

    __slots__ = ("seed", "stream_id", "generator")

    def __init__(self, seed: int, stream_id: int = 0):
        seed = int(seed)
        stream_id = int(stream_id)
        if not (0 <= seed < 1 << 64) or not (0 <= stream_id < 1 << 64):
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")
        self.seed = seed
        self.stream_id = stream_id
        ss = np.random.SeedSequence(seed, spawn_key=(stream_id,))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def standard_normal(self, shape) -> np.ndarray:
        return self.generator.standard_normal(shape)


def streams(seed: int, start: int, stop: int) -> list[RngStream]:
    """Trajectory streams ``start .. stop-1`` for ``seed``."""
    return [RngStream(seed, k) for k in range(start, stop)]


def ginibre(dim: int, rng: RngStream) -> np.ndarray:
    """``dim x dim`` matrix of i.i.d. standard complex Gaussians (E|z|^2 = 1).

    Draw order: one ``(2, dim, dim)`` block of normals, real parts first.
    """
    g = rng.standard_normal((2, dim, dim))
    return (g[0] + 1j * g[1]) / np.sqrt(2.0)


def unitaries_from_ginibre(z: np.ndarray) -> np.ndarray:
    """Map a stack of Ginibre matrices ``(..., L, L)`` to Haar unitaries.

    ``Z = QR``; column ``j`` of ``Q`` is multiplied by ``R_jj/|R_jj|`` so the
    triangular factor has a positive diagonal, which makes the map
    independent of the QR sign convention and the result Haar distributed.
    """
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    mag = np.abs(d)
    phase = np.where(mag > 0, d / np.where(mag > 0, mag, 1.0), 1.0)
    return q * phase[..., None, :]


def _check_dim(dim: int) -> int:
    dim = int(dim)
    if dim < 1:
        raise ValueError(f"unitary dimension must be >= 1, got {dim}")
    return dim


def haar_unitary(dim: int, rng: RngStream) -> np.ndarray:
    """Draw one ``dim x dim`` unitary from the Haar measure on U(dim)."""
    dim = _check_dim(dim)
    return unitaries_from_ginibre(ginibre(dim, rng)[None])[0]


def haar_unitaries(dim: int, rngs: Sequence[RngStream]) -> np.ndarray:
    """One Haar unitary per stream, stacked as ``(len(rngs), dim, dim)``.

    Consumes exactly the same draws from each stream as :func:`haar_unitary`.
    """
    dim = _check_dim(dim)
    z = np.stack([ginibre(dim, r) for r in rngs])
    return unitaries_from_ginibre(z)


def haar_state(dim: int, rng: RngStream, count: int | None = None) -> np.ndarray:
    """Haar-random pure state(s): normalized complex Gaussian vectors."""
    dim = _check_dim(dim)
    shape = (2, dim) if count is None else (2, int(count), dim)
    g = rng.standard_normal(shape)
    v = g[0] + 1j * g[1]
    return v / np.linalg.norm(v, axis=-1, keepdims=True)
