"""Command-line front end.

Subcommands ``purity``, ``hist``, ``table1`` and ``tangles`` each write CSV
(and JSON) files into ``--out`` plus a ``manifest.json`` describing the run.
Exit codes: 0 success, 2 usage error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np
from scipy import stats as sps

from . import __version__, stats, theory
from .collision import env_state_with_purity
from .linalg import NotPSDError

log = logging.getLogger("collisim")

EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return f"{x:.12g}"


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


class UsageError(Exception):
    pass


def _eta(args):
    if args.eta_purity is None:
        return 1.0, None
    p = args.eta_purity
    if not (1.0 / args.nu - 1e-12 <= p <= 1.0 + 1e-12):
        raise UsageError(f"--eta-purity must lie in [1/nu, 1] = [{1.0 / args.nu:.6g}, 1], got {p}")
    return p, env_state_with_purity(args.nu, p)


def _check_dims(args):
    for name in ("mu", "nu"):
        v = getattr(args, name, None)
        if v is not None and v < 2:
            raise UsageError(f"--{name} must be >= 2, got {v}")


def cmd_purity(args, out: Path) -> tuple[list[str], dict]:
    _check_dims(args)
    p_eta, eta = _eta(args)
    series = stats.run_purity_ensemble(args.mu, args.nu, args.steps, args.trajectories, args.seed, eta=eta)
    try:
        analytic = theory.refreshed_series(args.mu, args.nu, p_eta, 1.0, args.steps)
    except theory.UnsupportedCombinationError as exc:
        log.warning("analytic column left empty: %s", exc)
        analytic = [None] * (args.steps + 1)
    rows = zip(series.steps, series.mean, series.std, analytic)
    write_csv(out / "purity_series.csv", ["t", "mc_mean", "mc_std", "analytic"], rows)
    return ["purity_series.csv"], {"mu": args.mu, "nu": args.nu, "steps": args.steps, "eta_purity": p_eta}


def cmd_hist(args, out: Path) -> tuple[list[str], dict]:
    _check_dims(args)
    p_eta, eta = _eta(args)
    ref_nu = args.ref_nu or args.mu * args.nu
    if ref_nu < 2:
        raise UsageError("--ref-nu must be >= 2")
    series = stats.run_purity_ensemble(
        args.mu, args.nu, args.steps, args.trajectories, args.seed, eta=eta, bins=args.bins
    )
    ref = stats.sample_lubkin_reference(args.mu, ref_nu, args.trajectories, args.seed, bins=args.bins)
    files = []
    edges = series.bin_edges
    for t in series.steps:
        name = f"hist_step{t}.csv"
        write_csv(out / name, ["bin_lo", "bin_hi", "count"], zip(edges[:-1], edges[1:], series.counts[t]))
        files.append(name)
    write_csv(out / "hist_reference.csv", ["bin_lo", "bin_hi", "count"], zip(ref.bin_edges[:-1], ref.bin_edges[1:], ref.counts))
    files.append("hist_reference.csv")
    ks = sps.ks_2samp(series.samples[:, -1], ref.samples)
    summary = {
        "steps": [
            {"t": int(t), "mean": float(m), "std": float(s)}
            for t, m, s in zip(series.steps, series.mean, series.std)
        ],
        "reference": {
            "mu": args.mu,
            "nu_env": ref_nu,
            "n_samples": args.trajectories,
            "mean": ref.mean,
            "std": ref.std,
            "lubkin_mean": theory.lubkin_purity(args.mu, ref_nu),
            "predicted_std": math.sqrt(theory.purity_variance(args.mu, ref_nu)),
        },
        "ks_last_step_vs_reference": {"statistic": float(ks.statistic), "pvalue": float(ks.pvalue)},
    }
    write_json(out / "hist_summary.json", summary)
    files.append("hist_summary.json")
    params = {"mu": args.mu, "nu": args.nu, "steps": args.steps, "eta_purity": p_eta, "ref_nu": ref_nu, "bins": args.bins}
    return files, params


def cmd_table1(args, out: Path) -> tuple[list[str], dict]:
    if (args.mu is None) != (args.nu is None):
        raise UsageError("give both --mu and --nu for a single row, or neither")
    _check_dims(args)
    rows = stats.TABLE1_ROWS if args.mu is None else ((args.mu, args.nu),)
    table = stats.table1_comparison(args.seed, args.trajectories, rows)
    write_csv(
        out / "table1.csv",
        ["mu", "nu", "predicted_std", "simulated_std", "abs_diff"],
        ((r.mu, r.nu, r.predicted_std, r.simulated_std, r.abs_diff) for r in table),
    )
    return ["table1.csv"], {"rows": [list(r) for r in rows], "steps": [r.steps for r in table]}


PAIR_FIT_START = 1
MULTI_FIT_START = 2


def _fit_or_none(ts, ys):
    if len(ts) < 4:
        return None
    res = stats.fit_exponential(ts, ys)
    return {**res.as_dict(), "t_first": int(ts[0]), "t_last": int(ts[-1])}


def cmd_tangles(args, out: Path) -> tuple[list[str], dict]:
    if args.steps < 1:
        raise UsageError("--steps must be >= 1")
    if args.steps > stats.MAX_TANGLE_STEPS:
        raise UsageError(f"--steps {args.steps} exceeds the chain-mode cap {stats.MAX_TANGLE_STEPS}")
    ts = stats.run_tangle_ensemble(args.steps, args.trajectories, args.seed)
    T = args.steps
    header = ["t"] + [f"tau_0_{j}" for j in range(1, T + 1)] + ["tau_chain", "tau_multi"]
    rows = (
        [t, *ts.pairwise_mean[t], ts.tau_chain_mean[t], ts.tau_multi_mean[t]]
        for t in ts.steps
    )
    write_csv(out / "tangles.csv", header, rows)
    t_all = np.arange(1, T + 1)
    fits = {
        "pairwise_fresh": _fit_or_none(t_all[PAIR_FIT_START - 1:], ts.fresh_pair_mean[PAIR_FIT_START - 1:]),
        "multipartite": _fit_or_none(t_all[MULTI_FIT_START - 1:], ts.tau_multi_mean[MULTI_FIT_START:]),
    }
    write_json(out / "fits.json", fits)
    return ["tangles.csv", "fits.json"], {"steps": T}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="collisim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--trajectories", type=int, default=10_000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", type=Path, default=Path("."))

    p = sub.add_parser("purity", help="ensemble-mean purity vs collision count")
    p.add_argument("--mu", type=int, required=True)
    p.add_argument("--nu", type=int, required=True)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--eta-purity", type=float, default=None)
    common(p)
    p.set_defaults(func=cmd_purity)

    p = sub.add_parser("hist", help="purity histograms and the Haar reference distribution")
    p.add_argument("--mu", type=int, required=True)
    p.add_argument("--nu", type=int, required=True)
    p.add_argument("--steps", type=int, default=6)
    p.add_argument("--eta-purity", type=float, default=None)
    p.add_argument("--ref-nu", type=int, default=None, help="reference environment size (default mu*nu)")
    p.add_argument("--bins", type=int, default=stats.DEFAULT_BINS)
    common(p)
    p.set_defaults(func=cmd_hist)

    p = sub.add_parser("table1", help="predicted vs simulated steady-state purity spread")
    p.add_argument("--mu", type=int, default=None)
    p.add_argument("--nu", type=int, default=None)
    common(p)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("tangles", help="chain-mode pairwise and multipartite tangles (qubits)")
    p.add_argument("--steps", type=int, default=12)
    common(p)
    p.set_defaults(func=cmd_tangles)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.trajectories < 1:
        parser.error("--trajectories must be >= 1")
    if getattr(args, "steps", 0) < 0:
        parser.error("--steps must be >= 0")
    if args.seed < 0:
        parser.error("--seed must be >= 0")
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    try:
        files, params = args.func(args, out)
    except UsageError as exc:
        parser.error(str(exc))
    except (stats.FitError, NotPSDError) as exc:
        print(f"collisim: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    manifest = {
        "command_line": ["collisim", *(sys.argv[1:] if argv is None else argv)],
        "subcommand": args.command,
        "seed": args.seed,
        "trajectories": args.trajectories,
        "parameters": params,
        "version": __version__,
        "threads": stats.worker_count(),
        "wall_time_s": time.perf_counter() - start,
        "outputs": files,
    }
    write_json(out / "manifest.json", manifest)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
