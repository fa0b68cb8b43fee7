"""Command-line sweep runner.

Example::

    tbp-harness --n 200 --m 100 --k-grid 2:60:4 --snr 6logn \\
        --algo tbp,lasso --lambda 0.2 --trials 40 --out fig1.csv --plot success_vs_k
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import (
    ExperimentConfig,
    parse_algos,
    parse_int_grid,
    parse_snr,
    parse_theta_grid,
    read_config_file,
)
from .plot import PLOT_KINDS, emit_plot
from .runner import run_sweep

__all__ = ["build_parser", "config_from_args", "main"]

_DEFAULTS = {
    "ensemble": "gaussian",
    "noise": "output",
    "trials": "40",
    "seed": "0",
    "algo": "tbp",
    "snr_scale": "entry",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="tbp-harness",
        description="Monte-Carlo sign-pattern recovery sweeps with CSV output.",
    )
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--k-grid", help="start:stop:step (inclusive) or comma list")
    p.add_argument("--m-grid", help="start:stop:step (inclusive) or comma list")
    p.add_argument("--ensemble", choices=("gaussian", "bernoulli"))
    p.add_argument("--noise", choices=("output", "input-det", "input-gauss"))
    p.add_argument("--snr", help='number, "inf", or "<c>logn" (e.g. 6logn)')
    p.add_argument("--theta-grid", help="lo:hi:points with lo, hi as log10 exponents (write --theta-grid=-2:2:17 for a negative lo)")
    p.add_argument("--snr-scale", choices=("entry", "unnormalized"),
                   help="entry: noise variance 1/SNR; unnormalized: 1/(m SNR)")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--algo", help="comma list of tbp, tbp-ols, lasso, maxcorr, ml")
    p.add_argument("--lambda", dest="lam",
                   help="LASSO lambda: number, comma list, candes_plan or tropp")
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--plot", choices=PLOT_KINDS, help="also write <out>.<kind>.svg")
    p.add_argument("--workers", type=int)
    p.add_argument("--timing", action="store_true", default=None,
                   help="record runtime_ms (makes the CSV run-dependent)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _merged(args) -> dict:
    vals = dict(_DEFAULTS)
    if args.config:
        vals.update(read_config_file(args.config))
    for key, v in vars(args).items():
        if key in ("config", "verbose") or v is None:
            continue
        vals["lambda" if key == "lam" else key] = v
    return vals


def config_from_args(argv=None) -> tuple[ExperimentConfig, str | None]:
    args = build_parser().parse_args(argv)
    v = _merged(args)
    if "n" not in v:
        raise SystemExit("--n is required (flag or config file)")
    n = int(v["n"])
    theta = v.get("theta_grid")
    snr = v.get("snr")
    if theta is not None and snr is not None:
        raise SystemExit("give either --snr or --theta-grid, not both")
    if theta is None and snr is None:
        raise SystemExit("one of --snr or --theta-grid is required")
    timing = v.get("timing", False)
    if isinstance(timing, str):
        timing = timing.strip().lower() in ("1", "true", "yes", "on")
    cfg = ExperimentConfig(
        n=n,
        m=int(v["m"]) if v.get("m") is not None else None,
        m_grid=parse_int_grid(v["m_grid"]) if v.get("m_grid") else (),
        k=int(v["k"]) if v.get("k") is not None else None,
        k_grid=parse_int_grid(v["k_grid"]) if v.get("k_grid") else (),
        ensemble=v["ensemble"],
        noise_model=v["noise"],
        snr_mode="theta_scan" if theta is not None else "fixed_snr",
        snr=parse_snr(snr, n) if snr is not None else None,
        theta_grid=parse_theta_grid(theta) if theta is not None else (),
        algorithms=parse_algos(v["algo"], v.get("lambda")),
        trials=int(v["trials"]),
        master_seed=int(v["seed"]),
        out=Path(v["out"]) if v.get("out") else None,
        snr_scale=v["snr_scale"],
        timing=bool(timing),
        workers=int(v["workers"]) if v.get("workers") else None,
    )
    return cfg, v.get("plot")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg, plot = config_from_args(argv)
    except ValueError as exc:
        print(f"tbp-harness: error: {exc}", file=sys.stderr)
        return 2
    table = run_sweep(cfg)
    for row in table.rows:
        p = row.point
        lam = "" if p.algo != "lasso" else f" lambda={p.lam if p.lam is not None else p.lam_rule}"
        where = " ".join(f"{f}={getattr(p, f):.4g}" if isinstance(getattr(p, f), float)
                         else f"{f}={getattr(p, f)}" for f in ("m", "k", "theta")
                         if getattr(p, f) is not None)
        print(f"{p.algo}{lam} {where}: success={row.success_prob:.3f} "
              f"({row.trials} trials, {row.failures} failures)")
    if plot:
        base = cfg.out if cfg.out is not None else Path("sweep.csv")
        svg = emit_plot(table, plot, base.with_suffix(f".{plot}.svg"))
        print(f"wrote {svg}")
    if cfg.out is not None:
        print(f"wrote {cfg.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
