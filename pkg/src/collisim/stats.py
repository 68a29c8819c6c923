"""Ensemble drivers, histograms, moment summaries and exponential fits.

Trajectories are processed in fixed-size chunks (chunk size depends only on
the problem, never on the worker count), optionally fanned out to a thread
pool, and reassembled in trajectory order. Results are therefore bitwise
identical for any value of ``COLLISIM_THREADS``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import theory
from .collision import (
    basis_state,
    collide_chain_batch,
    pure_density,
    refreshed_purities,
)
from .entangle import tangles_batch
from .haar import RESERVED_STREAM_BASE, RngStream, haar_state, haar_unitaries, streams
from .linalg import purity, reduced_from_vector

THREADS_ENV = "COLLISIM_THREADS"
DEFAULT_BINS = 50
PURITY_CHUNK = 512
MAX_TANGLE_STEPS = 14
TABLE1_ROWS = ((2, 2), (2, 3), (3, 2), (4, 2), (2, 4), (3, 3))


class FitError(RuntimeError):
    pass


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    n = int(raw)
    if n < 0:
        raise ValueError(f"{THREADS_ENV} must be >= 0, got {n}")
    return n or (os.cpu_count() or 1)


def map_chunks(fn, n_items: int, chunk: int) -> list:
    """Evaluate ``fn(start, stop)`` over consecutive chunks, results in chunk order."""
    bounds = [(s, min(s + chunk, n_items)) for s in range(0, n_items, chunk)]
    workers = min(worker_count(), len(bounds))
    if workers <= 1:
        return [fn(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(lambda ab: fn(*ab), bounds))


def histogram(values, lo: float, hi: float, bins: int = DEFAULT_BINS) -> tuple[np.ndarray, np.ndarray]:
    """Uniform histogram on ``[lo, hi]``; values are clipped into range first so counts sum to ``len(values)``."""
    v = np.clip(np.asarray(values, dtype=float), lo, hi)
    counts, edges = np.histogram(v, bins=bins, range=(lo, hi))
    return counts, edges


@dataclass
class EnsembleSeries:
    steps: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    n_traj: int
    bin_edges: np.ndarray
    counts: np.ndarray  # (len(steps), bins)
    samples: np.ndarray = field(repr=False)  # (n_traj, len(steps))

    @property
    def stderr(self) -> np.ndarray:
        return self.std / math.sqrt(self.n_traj)


def summarize(samples: np.ndarray, lo: float, hi: float, bins: int = DEFAULT_BINS) -> EnsembleSeries:
    samples = np.asarray(samples, dtype=float)
    n, k = samples.shape
    counts = np.empty((k, bins), dtype=np.int64)
    edges = None
    for t in range(k):
        counts[t], edges = histogram(samples[:, t], lo, hi, bins)
    return EnsembleSeries(
        steps=np.arange(k),
        mean=samples.mean(axis=0),
        std=samples.std(axis=0),
        n_traj=n,
        bin_edges=edges,
        counts=counts,
        samples=samples,
    )


def run_purity_ensemble(
    mu: int,
    nu: int,
    steps: int,
    n_traj: int,
    seed: int = 0,
    eta=None,
    rho0=None,
    bins: int = DEFAULT_BINS,
) -> EnsembleSeries:
    """System purity statistics over ``n_traj`` refreshed-environment trajectories.

    Defaults: system starts in ``|0><0|`` and the environment qudits in ``|0><0|``.
    Trajectory ``k`` uses stream ``(seed, k)``.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    if steps < 0:
        raise ValueError("steps must be >= 0")
    eta = pure_density(basis_state(nu)) if eta is None else np.asarray(eta, dtype=np.complex128)
    rho0 = pure_density(basis_state(mu)) if rho0 is None else np.asarray(rho0, dtype=np.complex128)

    def chunk(a, b):
        return refreshed_purities(rho0, eta, mu, nu, steps, streams(seed, a, b))

    samples = np.concatenate(map_chunks(chunk, n_traj, PURITY_CHUNK))
    return summarize(samples, 1.0 / mu, 1.0, bins)


@dataclass
class PurityReference:
    samples: np.ndarray = field(repr=False)
    mean: float
    std: float
    bin_edges: np.ndarray
    counts: np.ndarray


def sample_lubkin_reference(
    mu: int, nu_env: int, n_samples: int, seed: int = 0, bins: int = DEFAULT_BINS
) -> PurityReference:
    """Marginal purity of Haar-random pure states on ``mu x nu_env``.

    Draws from the reserved stream ``(seed, RESERVED_STREAM_BASE)`` so the
    sample is independent of trajectory ensembles run with the same seed.
    """
    if mu < 2 or nu_env < 2:
        raise ValueError("dimensions must be >= 2")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = RngStream(seed, RESERVED_STREAM_BASE)
    psi = haar_state(mu * nu_env, rng, count=n_samples)
    p = purity(reduced_from_vector(psi, [mu, nu_env], [0]))
    counts, edges = histogram(p, 1.0 / mu, 1.0, bins)
    return PurityReference(p, float(p.mean()), float(p.std()), edges, counts)


@dataclass(frozen=True)
class Table1Row:
    mu: int
    nu: int
    predicted_std: float
    simulated_std: float
    steps: int

    @property
    def abs_diff(self) -> float:
        return abs(self.predicted_std - self.simulated_std)


def steady_state_steps(mu: int, nu: int) -> int:
    """Collisions after which the transient is below ``e^-6`` of its start."""
    return math.ceil(6.0 / theory.decay_rate(mu, nu)[1])


def table1_comparison(seed: int = 0, n_traj: int = 10_000, rows=TABLE1_ROWS) -> list[Table1Row]:
    """Predicted (effective dimension ``mu*nu``) vs simulated steady-state purity spread."""
    out = []
    for mu, nu in rows:
        steps = steady_state_steps(mu, nu)
        series = run_purity_ensemble(mu, nu, steps, n_traj, seed)
        predicted = math.sqrt(theory.purity_variance(mu, mu * nu))
        out.append(Table1Row(mu, nu, predicted, float(series.std[-1]), steps))
    return out


@dataclass
class TangleSeries:
    """Ensemble means per collision count ``t = 0..T`` (chain mode, qubits).

    ``pairwise_mean[t, j-1]`` is the mean of ``tau_{0|j}(t)``; NaN for ``j > t``.
    """

    steps: np.ndarray
    pairwise_mean: np.ndarray
    pairwise_std: np.ndarray
    tau_chain_mean: np.ndarray
    tau_chain_std: np.ndarray
    tau_multi_mean: np.ndarray
    tau_multi_std: np.ndarray
    system_purity_mean: np.ndarray
    n_traj: int

    @property
    def fresh_pair_mean(self) -> np.ndarray:
        """``tau_{0|t}(t)`` for ``t = 1..T``."""
        t = len(self.steps) - 1
        return np.array([self.pairwise_mean[k, k - 1] for k in range(1, t + 1)])

    @property
    def fresh_pair_std(self) -> np.ndarray:
        t = len(self.steps) - 1
        return np.array([self.pairwise_std[k, k - 1] for k in range(1, t + 1)])


def tangle_chunk_size(steps: int) -> int:
    return max(1, min(256, (1 << 21) >> (steps + 1)))


def tangle_trajectories(steps: int, rngs) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-trajectory pairwise (B, T+1, T), chain (B, T+1), multi (B, T+1) tangles and system purity (B, T+1)."""
    b = len(rngs)
    eta = basis_state(2)
    psi = np.zeros((b, 2), dtype=np.complex128)
    psi[:, 0] = 1.0
    pair = np.zeros((b, steps + 1, steps))
    chain = np.zeros((b, steps + 1))
    multi = np.zeros((b, steps + 1))
    pur = np.ones((b, steps + 1))
    for t in range(1, steps + 1):
        psi = collide_chain_batch(psi, 2, eta, haar_unitaries(4, rngs))
        dims = [2] * (t + 1)
        p, c, m = tangles_batch(psi, dims)
        pair[:, t, :t] = p
        chain[:, t] = c
        multi[:, t] = m
        pur[:, t] = purity(reduced_from_vector(psi, dims, [0]))
    return pair, chain, multi, pur


def run_tangle_ensemble(
    steps: int, n_traj: int, seed: int = 0, max_steps: int = MAX_TANGLE_STEPS
) -> TangleSeries:
    """Chain-mode qubit ensemble (system and chain start in ``|0>``); trajectory ``k`` uses stream ``(seed, k)``."""
    if steps > max_steps:
        raise ValueError(f"steps={steps} exceeds chain-mode cap {max_steps}")
    if steps < 1 or n_traj < 1:
        raise ValueError("need steps >= 1 and n_traj >= 1")

    def chunk(a, b):
        return tangle_trajectories(steps, streams(seed, a, b))

    parts = map_chunks(chunk, n_traj, tangle_chunk_size(steps))
    pair, chain, multi, pur = (np.concatenate([p[i] for p in parts]) for i in range(4))
    pm = pair.mean(axis=0)
    ps = pair.std(axis=0)
    mask = np.arange(steps)[None, :] >= np.arange(steps + 1)[:, None]
    pm[mask] = np.nan
    ps[mask] = np.nan
    return TangleSeries(
        steps=np.arange(steps + 1),
        pairwise_mean=pm,
        pairwise_std=ps,
        tau_chain_mean=chain.mean(axis=0),
        tau_chain_std=chain.std(axis=0),
        tau_multi_mean=multi.mean(axis=0),
        tau_multi_std=multi.std(axis=0),
        system_purity_mean=pur.mean(axis=0),
        n_traj=n_traj,
    )


# -- fitting ----------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    amplitude: float
    rate: float
    offset: float
    rms_residual: float
    iterations: int = 0

    def __call__(self, t):
        return self.amplitude * np.exp(-self.rate * np.asarray(t, dtype=float)) + self.offset

    def as_dict(self) -> dict:
        return {
            "amplitude": self.amplitude,
            "rate": self.rate,
            "offset": self.offset,
            "rms_residual": self.rms_residual,
            "iterations": self.iterations,
        }


def _rms(r) -> float:
    return float(np.sqrt(np.mean(np.square(r))))


def _initial_rate(ts, ys) -> float:
    dt = np.diff(ts)
    dy = np.diff(ys) / dt
    mid = 0.5 * (ts[1:] + ts[:-1])
    ok = dy != 0
    if ok.sum() >= 2:
        slope = np.polyfit(mid[ok], np.log(np.abs(dy[ok])), 1)[0]
        if np.isfinite(slope) and slope < 0:
            return -slope
    return 1.0 / max(float(np.ptp(ts)), 1e-12)


def fit_exponential(
    ts, ys, fix_offset: float | None = None, max_iter: int = 200, tol: float = 1e-12
) -> FitResult:
    """Least-squares fit of ``y = A exp(-lam t) + B``.

    With ``fix_offset`` the offset is pinned and ``(A, lam)`` come from a
    straight-line fit of ``log|y - B|``. Otherwise Gauss-Newton with
    Levenberg damping, started from ``B = ys[-1]`` and the log-slope of the
    first differences.
    """
    ts = np.asarray(ts, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if ts.shape != ys.shape or ts.ndim != 1:
        raise ValueError("ts and ys must be 1-d arrays of equal length")
    if ts.size < 4:
        raise ValueError("need at least 4 points")
    if np.ptp(ys) == 0:
        raise ValueError("ys is constant")

    if fix_offset is not None:
        d = ys - fix_offset
        sign = np.sign(d)
        if np.any(sign == 0) or np.any(sign != sign[0]):
            raise FitError("y - offset must be nonzero with a single sign for a log-linear fit")
        slope, icpt = np.polyfit(ts, np.log(np.abs(d)), 1)
        res = FitResult(float(sign[0] * np.exp(icpt)), float(-slope), float(fix_offset), 0.0)
        return FitResult(res.amplitude, res.rate, res.offset, _rms(res(ts) - ys))

    lam = _initial_rate(ts, ys)
    b = ys[-1]
    e = np.exp(-lam * ts)
    a = float(np.dot(e, ys - b) / np.dot(e, e))
    p = np.array([a, lam, b])

    def residual(q):
        return q[0] * np.exp(-q[1] * ts) + q[2] - ys

    r = residual(p)
    cost = float(r @ r)
    damping = 1e-3
    for it in range(1, max_iter + 1):
        e = np.exp(-p[1] * ts)
        jac = np.column_stack([e, -p[0] * ts * e, np.ones_like(ts)])
        jtj = jac.T @ jac
        grad = jac.T @ r
        try:
            step = np.linalg.solve(jtj + damping * np.diag(np.diag(jtj)), -grad)
        except np.linalg.LinAlgError:
            damping *= 10.0
            continue
        if np.linalg.norm(step) <= tol * (np.linalg.norm(p) + tol):
            return FitResult(float(p[0]), float(p[1]), float(p[2]), _rms(r), it)
        trial = p + step
        r_trial = residual(trial)
        cost_trial = float(r_trial @ r_trial)
        if np.isfinite(cost_trial) and cost_trial <= cost:
            p, r, cost = trial, r_trial, cost_trial
            damping = max(damping / 10.0, 1e-15)
        else:
            damping *= 10.0
            if damping > 1e16:
                break
    raise FitError(
        f"exponential fit did not converge after {max_iter} iterations "
        f"(A={p[0]:.6g}, lam={p[1]:.6g}, B={p[2]:.6g}, rms={_rms(r):.3e}, damping={damping:.1e})"
    )


def log_linear_rate(ts, xi, stderr=None, min_snr: float = 3.0) -> float:
    """Decay rate from a weighted straight-line fit of ``log(xi)`` against ``t``.

    Points with ``xi <= min_snr * stderr`` are dropped; weights are
    ``(xi / stderr)^2`` (delta method), with exact points given a large
    finite weight.
    """
    ts = np.asarray(ts, dtype=float)
    xi = np.asarray(xi, dtype=float)
    se = np.zeros_like(xi) if stderr is None else np.asarray(stderr, dtype=float)
    keep = xi > min_snr * se
    keep &= xi > 0
    if keep.sum() < 2:
        raise FitError("fewer than two points above the noise floor")
    sigma_log = np.maximum(se[keep] / xi[keep], 1e-6)
    slope = np.polyfit(ts[keep], np.log(xi[keep]), 1, w=1.0 / sigma_log)[0]
    return float(-slope)
