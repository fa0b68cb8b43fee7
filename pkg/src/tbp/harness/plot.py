"""SVG plots of sweep tables, each with a sidecar CSV of the plotted points."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..ensembles import OutputGaussian, RngStream, gen_matrix, gen_measurement, gen_signal
from ..l1_solver import basis_pursuit
from ..recovery import LassoConfig, lasso
from .runner import SweepTable

__all__ = ["PLOT_KINDS", "AmplitudeTable", "amplitude_instance", "emit_plot"]

PLOT_KINDS = ("success_vs_k", "success_vs_m", "success_vs_theta", "amplitude_scatter")
_X_FIELD = {"success_vs_k": "k", "success_vs_m": "m", "success_vs_theta": "theta"}


@dataclass(frozen=True)
class AmplitudeTable:
    """Truth and two estimates on a single instance, for shrinkage plots."""

    truth: np.ndarray
    bp: np.ndarray
    lasso: np.ndarray
    lam: float
    sigma: float

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.truth)

    def mean_abs_on_support(self):
        s = self.support
        return float(np.mean(np.abs(self.bp[s]))), float(np.mean(np.abs(self.lasso[s])))


def amplitude_instance(n: int, m: int, k: int, sigma: float, lam: float | None = None,
                       seed: int = 0, ensemble: str = "gaussian") -> AmplitudeTable:
    """Basis pursuit and LASSO estimates on one seeded ``+-1`` instance.

    ``lam`` defaults to ``2 sigma sqrt(2 log n)``.
    """
    G = gen_matrix(m, n, ensemble, RngStream(seed, 0))
    x = gen_signal(n, k, RngStream(seed, 1))
    y, _ = gen_measurement(G, x, OutputGaussian(sigma), RngStream(seed, 2))
    if lam is None:
        lam = 2.0 * sigma * math.sqrt(2.0 * math.log(n))
    bp = basis_pursuit(G, y)
    if not bp.certified:
        raise RuntimeError(f"basis pursuit failed: {bp.message}")
    la = lasso(G, y, LassoConfig(lam))
    return AmplitudeTable(x.dense(), bp.beta, la.extras["raw"], float(lam), float(sigma))


def _label(point) -> str:
    if point.algo != "lasso":
        return point.algo.upper()
    lam = point.lam_rule if point.lam is None else f"{point.lam:g}"
    return f"LASSO ({lam})"


def _series(table: SweepTable, xfield: str):
    """Group rows into curves by every point field except the x axis."""
    curves: dict = {}
    for r in table.rows:
        key = tuple(
            (f, getattr(r.point, f)) for f in ("algo", "lam", "lam_rule", "ensemble", "n", "m", "k",
                                                "snr", "theta", "noise_model")
            if f != xfield
        )
        curves.setdefault(key, []).append(r)
    out = []
    for key, rows in curves.items():
        rows.sort(key=lambda r: getattr(r.point, xfield))
        out.append((rows[0].point, rows))
    return out


def _save(fig, path: Path):
    import matplotlib

    with matplotlib.rc_context({"svg.hashsalt": "tbp", "svg.fonttype": "path"}):
        fig.savefig(path, format="svg", metadata={"Date": None})


def emit_plot(table, kind: str, path) -> Path:
    """Write an SVG for ``kind`` and a sidecar CSV (same stem, ``.csv``) of its points.

    ``table`` is a :class:`SweepTable` for the success curves and an
    :class:`AmplitudeTable` for ``amplitude_scatter``.
    """
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {PLOT_KINDS}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sidecar = path.with_suffix(".csv")

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    try:
        if kind == "amplitude_scatter":
            if not isinstance(table, AmplitudeTable):
                raise TypeError("amplitude_scatter needs an AmplitudeTable")
            s = table.support
            if s.size == 0:
                raise ValueError("instance has an empty support")
            idx = np.arange(table.truth.size)
            ax.plot(idx[s], table.truth[s], "ks", mfc="none", label="truth")
            ax.plot(idx, table.bp, "o", ms=4, label="basis pursuit")
            ax.plot(idx, table.lasso, "x", ms=4, label=f"LASSO ({table.lam:.3g})")
            ax.axhline(0, color="0.7", lw=0.5)
            ax.set_xlabel("index")
            ax.set_ylabel("amplitude")
            with open(sidecar, "w", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["index", "truth", "bp", "lasso"])
                for i in idx:
                    w.writerow([int(i), repr(float(table.truth[i])), repr(float(table.bp[i])),
                                repr(float(table.lasso[i]))])
        else:
            if not isinstance(table, SweepTable) or not table.rows:
                raise ValueError("need a nonempty SweepTable")
            xfield = _X_FIELD[kind]
            if any(getattr(r.point, xfield) is None for r in table.rows):
                raise ValueError(f"table has no {xfield} axis")
            series = _series(table, xfield)
            with open(sidecar, "w", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["series", xfield, "success_prob", "trials"])
                for point, rows in series:
                    xs = [getattr(r.point, xfield) for r in rows]
                    ps = [r.success_prob for r in rows]
                    lab = _label(point) + ("" if point.ensemble == "gaussian" else f" {point.ensemble}")
                    ax.plot(xs, ps, "o-", ms=4, label=lab)
                    for r, xv in zip(rows, xs):
                        w.writerow([lab, repr(xv), repr(r.success_prob), r.trials])
            if kind == "success_vs_theta":
                ax.set_xscale("log")
            ax.set_xlabel({"k": "sparsity k", "m": "measurements m", "theta": "theta"}[xfield])
            ax.set_ylabel("success probability")
            ax.set_ylim(-0.03, 1.03)
        ax.legend(frameon=False)
        fig.tight_layout()
        _save(fig, path)
    finally:
        plt.close(fig)
    return path
