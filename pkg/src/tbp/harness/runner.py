"""Trial execution, sweep aggregation and CSV output."""
from __future__ import annotations

import csv
import hashlib
import io
import logging
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..ensembles import (
    InputDeterministic,
    InputGaussian,
    OutputGaussian,
    RngStream,
    gen_matrix,
    gen_measurement,
    gen_signal,
    uniform_input_noise,
)
from ..l1_solver import SolverFailure
from ..recovery import LassoConfig, lasso, max_correlation, ml_oracle, tbp, tbp_ols
from .config import ExperimentConfig, GridPoint

__all__ = [
    "CSV_HEADER",
    "WORKERS_ENV",
    "TrialRecord",
    "SweepRow",
    "SweepTable",
    "trial_seed",
    "run_trial",
    "run_sweep",
    "write_csv",
    "read_csv",
    "aggregate",
]

log = logging.getLogger(__name__)

CSV_HEADER = (
    "algo,n,m,k,ensemble,noise_model,snr,theta,lambda,trial,seed,status,"
    "n_miss,n_false,success,l2_err,runtime_ms"
)
WORKERS_ENV = "TBP_MAX_WORKERS"

STATUS_OK = "ok"
STATUS_EMPTY = "empty_signal"  # k = 0: vacuous success, kept and flagged
STATUS_NOT_CONVERGED = "not_converged"
STATUS_FAILURE = "solver_failure"


@dataclass(frozen=True)
class TrialRecord:
    point: GridPoint
    trial: int
    seed: int
    status: str
    n_miss: int | None
    n_false: int | None
    success: int | None
    l2_err: float | None
    runtime_ms: float | None

    @property
    def counted(self) -> bool:
        return self.status != STATUS_FAILURE

    def sort_key(self):
        return (self.point.key(), self.trial)


def trial_seed(point: GridPoint, trial_index: int, master_seed: int) -> int:
    """Stable 63-bit seed from the master seed, every grid field and the trial index."""
    fields = (
        int(master_seed), point.algo, point.n, point.m, point.k, point.ensemble,
        point.noise_model, point.snr, point.theta, point.lam, point.lam_rule,
        point.snr_scale, point.x_min, int(trial_index),
    )
    text = "|".join(repr(f) for f in fields).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "little") >> 1


def _noise(point: GridPoint, rng):
    sigma = point.sigma
    if point.noise_model == "output":
        return OutputGaussian(sigma)
    if point.noise_model == "input-gauss":
        return InputGaussian(sigma)
    return uniform_input_noise(point.n, sigma, rng)


def run_trial(point: GridPoint, trial_index: int, master_seed: int, timing: bool = True) -> TrialRecord:
    """Generate one instance for ``point`` and score the configured algorithm.

    Streams 0, 1 and 2 of the derived seed drive the matrix, the signal and
    the noise. TBP+OLS draws ``3m`` rows and screens with the first ``m``.
    A basis-pursuit failure yields a record with ``status="solver_failure"``.
    """
    seed = trial_seed(point, trial_index, master_seed)
    rows = 3 * point.m if point.algo == "tbp-ols" else point.m
    G = gen_matrix(rows, point.n, point.ensemble, RngStream(seed, 0))
    x = gen_signal(point.n, point.k, RngStream(seed, 1))
    if point.x_min != 1.0:
        x = x.scaled(point.x_min)
    noise = _noise(point, RngStream(seed, 3))
    y, _ = gen_measurement(G, x, noise, RngStream(seed, 2))
    status = STATUS_OK
    try:
        if point.algo == "tbp":
            rep = tbp(G, y, point.x_min, truth=x)
        elif point.algo == "tbp-ols":
            rep = tbp_ols(G, y, point.x_min, truth=x)
        elif point.algo == "lasso":
            if point.lam_rule is not None:
                cfg = LassoConfig(lambda_rule=point.lam_rule)
            else:
                cfg = LassoConfig(point.lam)
            rep = lasso(G, y, cfg, truth=x, sigma=point.sigma)
            if not rep.converged:
                status = STATUS_NOT_CONVERGED
        elif point.algo == "maxcorr":
            if point.k == 0:
                rep = None
            else:
                rep = max_correlation(G, y, point.k, truth=x)
        else:
            rep = ml_oracle(G, y, point.k, truth=x, x_min=point.x_min)
    except SolverFailure as exc:
        log.warning("solver failure at %s trial %d: %s", point, trial_index, exc)
        return TrialRecord(point, trial_index, seed, STATUS_FAILURE, None, None, None, None, None)
    if point.k == 0:
        status = STATUS_EMPTY
        if rep is None:
            return TrialRecord(point, trial_index, seed, status, 0, 0, 1, 0.0, 0.0 if timing else None)
    return TrialRecord(
        point, trial_index, seed, status, int(rep.n_miss), int(rep.n_false),
        int(rep.success), float(rep.l2_error), float(rep.runtime_ms) if timing else None,
    )


def _run_chunk(args):
    point, trials, master_seed, timing = args
    return [run_trial(point, t, master_seed, timing) for t in trials]


def _worker_count(requested: int | None) -> int:
    n = requested if requested else (os.cpu_count() or 1)
    cap = os.environ.get(WORKERS_ENV)
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


@dataclass(frozen=True)
class SweepRow:
    point: GridPoint
    success_prob: float
    mean_l2: float
    trials: int
    failures: int


@dataclass
class SweepTable:
    """Per-point success probabilities plus the raw records they came from."""

    rows: list[SweepRow]
    records: list[TrialRecord] = field(default_factory=list)

    def curve(self, field_name: str, **match):
        """``(x, p)`` arrays of rows whose point fields equal ``match``, sorted by ``field_name``."""
        sel = [r for r in self.rows if all(getattr(r.point, k) == v for k, v in match.items())]
        sel.sort(key=lambda r: getattr(r.point, field_name))
        xs = np.array([getattr(r.point, field_name) for r in sel], dtype=float)
        return xs, np.array([r.success_prob for r in sel]), np.array([r.trials for r in sel])

    def lookup(self, **match) -> SweepRow:
        sel = [r for r in self.rows if all(getattr(r.point, k) == v for k, v in match.items())]
        if len(sel) != 1:
            raise KeyError(f"{len(sel)} rows match {match}")
        return sel[0]

    @property
    def failures(self) -> int:
        return sum(r.failures for r in self.rows)


def aggregate(records) -> SweepTable:
    groups: dict = {}
    for rec in records:
        groups.setdefault(rec.point, []).append(rec)
    rows = []
    for point in sorted(groups, key=GridPoint.key):
        recs = groups[point]
        ok = [r for r in recs if r.counted]
        fails = len(recs) - len(ok)
        p = float(np.mean([r.success for r in ok])) if ok else math.nan
        l2 = float(np.mean([r.l2_err for r in ok])) if ok else math.nan
        rows.append(SweepRow(point, p, l2, len(ok), fails))
    return SweepTable(rows, sorted(records, key=TrialRecord.sort_key))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv_text(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER.split(","))
    for r in records:
        p = r.point
        lam = p.lam if p.lam is not None else p.lam_rule
        w.writerow([_fmt(v) for v in (
            p.algo, p.n, p.m, p.k, p.ensemble, p.noise_model, p.snr, p.theta, lam,
            r.trial, r.seed, r.status, r.n_miss, r.n_false, r.success, r.l2_err, r.runtime_ms,
        )])
    return buf.getvalue()


def write_csv(records, path) -> Path:
    """Write sorted records atomically; a failed write leaves no partial file."""
    path = Path(path)
    text = _csv_text(sorted(records, key=TrialRecord.sort_key))
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
    return path


def read_csv(path) -> list[dict]:
    """Read a sweep CSV back as a list of string dicts (for external checks)."""
    with open(path, encoding="utf-8", newline="") as fh:
        rd = csv.DictReader(fh)
        if ",".join(rd.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"{path} does not have the sweep header")
        return list(rd)


def run_sweep(cfg: ExperimentConfig, workers: int | None = None) -> SweepTable:
    """Run every grid point and trial, aggregate, and write ``cfg.out`` if set.

    Work is split per grid point into chunks and spread over a process
    pool; records are sorted by ``(grid point, trial)`` afterwards, so the
    result does not depend on scheduling. Solver failures are kept in the
    CSV, excluded from the probabilities and logged.
    """
    points = list(cfg.grid())
    nw = _worker_count(workers if workers is not None else cfg.workers)
    chunk = max(1, min(cfg.trials, math.ceil(cfg.trials * len(points) / (4 * nw))))
    jobs = [
        (p, range(s, min(s + chunk, cfg.trials)), cfg.master_seed, cfg.timing)
        for p in points
        for s in range(0, cfg.trials, chunk)
    ]
    records: list[TrialRecord] = []
    if nw == 1 or len(jobs) == 1:
        for job in jobs:
            records.extend(_run_chunk(job))
    else:
        with ProcessPoolExecutor(max_workers=nw) as ex:
            for recs in ex.map(_run_chunk, jobs):
                records.extend(recs)
    table = aggregate(records)
    if table.failures:
        log.warning("%d trials hit solver failures and were excluded", table.failures)
    empty = sum(1 for r in records if r.status == STATUS_EMPTY)
    if empty:
        log.info("%d trials have k = 0 (vacuous success, flagged in status)", empty)
    if cfg.out is not None:
        write_csv(table.records, cfg.out)
    return table
