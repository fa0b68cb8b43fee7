"""Sign-pattern recovery: thresholded basis pursuit and its baselines."""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from .ensembles import SparseSignal, as_array
from .l1_solver import (
    DEFAULT_TOL,
    LpSolution,
    SolverFailure,
    ToleranceSet,
    basis_pursuit,
    least_squares,
)

__all__ = [
    "RecoveryReport",
    "LassoConfig",
    "Metrics",
    "threshold",
    "compute_metrics",
    "tbp",
    "tbp_ols",
    "lasso",
    "lasso_lambda",
    "max_correlation",
    "ml_oracle",
    "ML_CAP",
]

ML_CAP = 10**6


class Metrics(NamedTuple):
    n_miss: int
    n_false: int
    exact_sign_recovery: bool
    l2_error: float


@dataclass
class RecoveryReport:
    """Estimate of one recovery run plus support metrics against the truth.

    Metric fields are ``None`` when no ground truth was supplied.
    ``converged`` is False only for a LASSO run that hit its sweep cap.
    """

    estimate: np.ndarray
    est_support: np.ndarray
    est_signs: np.ndarray
    runtime_ms: float
    n_miss: int | None = None
    n_false: int | None = None
    exact_sign_recovery: bool | None = None
    l2_error: float | None = None
    solver_stats: LpSolution | None = None
    converged: bool = True
    extras: dict = field(default_factory=dict)

    @property
    def success(self) -> bool:
        return bool(self.exact_sign_recovery)


def _report(estimate, t0, truth, zero_tol=0.0, signs=None, **kw) -> RecoveryReport:
    estimate = np.asarray(estimate, dtype=float)
    support = np.flatnonzero(np.abs(estimate) > zero_tol)
    rep = RecoveryReport(
        estimate=estimate,
        est_support=support,
        est_signs=np.sign(estimate[support]).astype(int) if signs is None else signs,
        runtime_ms=(time.perf_counter() - t0) * 1e3,
        **kw,
    )
    if truth is not None:
        met = compute_metrics(truth, estimate, zero_tol)
        rep.n_miss, rep.n_false = met.n_miss, met.n_false
        rep.exact_sign_recovery, rep.l2_error = met.exact_sign_recovery, met.l2_error
    return rep


def compute_metrics(truth: SparseSignal, estimate, zero_tol: float = 0.0) -> Metrics:
    """Miss and false-alarm counts of ``estimate`` against ``truth``.

    A true support entry counts as detected only when the estimate is
    nonzero there with the same sign; entries with ``|estimate| <= zero_tol``
    are treated as zero.
    """
    est = np.asarray(estimate, dtype=float).ravel()
    if est.size != truth.n:
        raise ValueError(f"estimate has length {est.size}, expected {truth.n}")
    est_sign = np.where(np.abs(est) > zero_tol, np.sign(est), 0.0)
    matched = int(np.sum(est_sign[truth.support] == np.sign(truth.values)))
    n_miss = truth.k - matched
    n_false = int(np.count_nonzero(est_sign)) - matched
    l2 = float(np.linalg.norm(est - truth.dense()))
    return Metrics(n_miss, n_false, n_miss == 0 and n_false == 0, l2)


def threshold(v, x_min: float = 1.0) -> np.ndarray:
    """Zero every entry with ``|v_j| < x_min / 2``; keep the rest unchanged."""
    v = np.asarray(v, dtype=float)
    return np.where(np.abs(v) < 0.5 * x_min, 0.0, v)


def _bp(G, y, tol, start=None) -> LpSolution:
    sol = basis_pursuit(G, y, tol, start=start)
    if not sol.certified:
        raise SolverFailure(sol)
    return sol


def tbp(
    G,
    y,
    x_min: float = 1.0,
    tol: ToleranceSet = DEFAULT_TOL,
    truth: SparseSignal | None = None,
    start=None,
) -> RecoveryReport:
    """Thresholded basis pursuit.

    Solves basis pursuit on ``(G, y)`` and thresholds the vertex solution at
    ``x_min / 2``. Raises :class:`SolverFailure` if the LP is not certified.
    """
    if not x_min > 0:
        raise ValueError("x_min must be positive")
    t0 = time.perf_counter()
    sol = _bp(G, y, tol, start)
    return _report(threshold(sol.beta, x_min), t0, truth, solver_stats=sol)


def tbp_ols(
    G,
    y,
    x_min: float = 1.0,
    tol: ToleranceSet = DEFAULT_TOL,
    truth: SparseSignal | None = None,
) -> RecoveryReport:
    """TBP with a least-squares refit on held-out measurements.

    The ``3m`` rows are split into the first ``m`` (support screening by
    basis pursuit; the candidate set is the nonzero entries of the vertex)
    and the last ``2m`` (least-squares amplitudes on the candidate columns),
    followed by thresholding at ``x_min / 2``.
    """
    A = as_array(G)
    y = np.asarray(y, dtype=float).ravel()
    rows, n = A.shape
    if rows % 3:
        raise ValueError(f"row count {rows} is not divisible by 3")
    if not x_min > 0:
        raise ValueError("x_min must be positive")
    m = rows // 3
    t0 = time.perf_counter()
    sol = _bp(A[:m], y[:m], tol)
    cand = np.flatnonzero(sol.beta)
    if cand.size > 2 * m:
        raise RuntimeError("candidate set larger than the refit block")
    est = np.zeros(n)
    if cand.size:
        fit = least_squares(A[m:][:, cand], y[m:])
        est[cand] = fit.x
    return _report(
        threshold(est, x_min), t0, truth, solver_stats=sol, extras={"candidates": cand}
    )


@dataclass(frozen=True)
class LassoConfig:
    """LASSO settings.

    ``lambda_rule`` is ``"explicit"`` (use ``lam``), ``"candes_plan"``
    (``2 sigma sqrt(2 log n)``) or ``"tropp"`` (``2 sigma sqrt(n)``); the
    last two need the noise level at solve time.
    """

    lam: float = 0.0
    max_iters: int = 100_000
    conv_tol: float = 1e-8
    lambda_rule: str = "explicit"
    zero_tol: float = 1e-6

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.lambda_rule not in ("explicit", "candes_plan", "tropp"):
            raise ValueError(f"unknown lambda rule {self.lambda_rule!r}")


def lasso_lambda(cfg: LassoConfig, n: int, sigma: float | None = None) -> float:
    if cfg.lambda_rule == "explicit":
        return cfg.lam
    if sigma is None:
        raise ValueError(f"lambda rule {cfg.lambda_rule!r} needs the noise level")
    if cfg.lambda_rule == "candes_plan":
        return 2.0 * sigma * math.sqrt(2.0 * math.log(n))
    return 2.0 * sigma * math.sqrt(n)


def _soft(z, t):
    return math.copysign(max(abs(z) - t, 0.0), z)


def _kkt_violation(beta, corr, lam):
    nz = beta != 0
    v0 = np.max(np.abs(corr[~nz]), initial=0.0) - lam
    v1 = np.max(np.abs(corr[nz] - lam * np.sign(beta[nz])), initial=0.0)
    return max(v0, v1, 0.0)


def _lasso_cd(A, y, lam, max_iters, conv_tol):
    """Cyclic coordinate descent with active-set sweeps and an exact polish.

    Returns ``(beta, sweeps, converged)``. ``corr`` tracks ``A'(y - A beta)``.
    """
    m, n = A.shape
    gram = A.T @ A
    aty = A.T @ y
    diag = np.diag(gram).copy()
    beta = np.zeros(n)
    corr = aty.copy()
    sweeps = 0
    last_pattern = None

    def sweep(idx):
        for j in idx:
            if diag[j] == 0.0:
                continue
            old = beta[j]
            new = _soft(old * diag[j] + corr[j], lam) / diag[j]
            if new != old:
                beta[j] = new
                corr[:] -= gram[:, j] * (new - old)

    while sweeps < max_iters:
        sweep(range(n))
        sweeps += 1
        if _kkt_violation(beta, corr, lam) <= conv_tol:
            return beta, sweeps, True
        active = np.flatnonzero(beta)
        for _ in range(50):
            if sweeps >= max_iters:
                break
            sweep(active)
            sweeps += 1
            v = np.max(np.abs(corr[active] - lam * np.sign(beta[active])), initial=0.0)
            if v <= 0.1 * conv_tol:
                break
        # once the signed support repeats, try the closed-form solution on it
        pattern = tuple(np.sign(beta).astype(int))
        if pattern == last_pattern and active.size and active.size <= m:
            s = np.sign(beta[active])
            try:
                b_act = sla.solve(gram[np.ix_(active, active)], aty[active] - lam * s, assume_a="pos")
            except (sla.LinAlgError, ValueError):
                b_act = None
            if b_act is not None and np.all(np.sign(b_act) == s):
                trial = np.zeros(n)
                trial[active] = b_act
                tcorr = aty - gram[:, active] @ b_act
                if _kkt_violation(trial, tcorr, lam) <= conv_tol:
                    return trial, sweeps, True
        last_pattern = pattern
    return beta, sweeps, _kkt_violation(beta, corr, lam) <= conv_tol


def lasso(
    G,
    y,
    cfg: LassoConfig,
    truth: SparseSignal | None = None,
    sigma: float | None = None,
    thresholded: float | None = None,
) -> RecoveryReport:
    """Minimize ``0.5 ||y - G b||^2 + lam ||b||_1`` by coordinate descent.

    Support metrics use the raw solution (entries above ``cfg.zero_tol``).
    ``thresholded=x_min`` instead thresholds the solution at ``x_min / 2``
    before scoring; this is an extension for fairness comparisons. A run
    that exhausts ``cfg.max_iters`` sweeps is returned with
    ``converged=False``.
    """
    A = as_array(G)
    y = np.asarray(y, dtype=float).ravel()
    lam = lasso_lambda(cfg, A.shape[1], sigma)
    t0 = time.perf_counter()
    beta, sweeps, ok = _lasso_cd(A, y, lam, cfg.max_iters, cfg.conv_tol)
    est = beta if thresholded is None else threshold(beta, thresholded)
    zt = cfg.zero_tol if thresholded is None else 0.0
    return _report(
        est, t0, truth, zero_tol=zt, converged=ok, extras={"lambda": lam, "sweeps": sweeps, "raw": beta}
    )


def max_correlation(G, y, k: int, truth: SparseSignal | None = None) -> RecoveryReport:
    """Keep the ``k`` columns most correlated with ``y`` and refit them.

    Ties in ``|G_j'y|`` go to the lowest index. ``est_signs`` are the signs of
    the correlations; the estimate holds least-squares amplitudes on the
    selected columns (minimum-norm when ``k > m``).
    """
    A = as_array(G)
    m, n = A.shape
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}")
    t0 = time.perf_counter()
    corr = A.T @ np.asarray(y, dtype=float)
    sel = np.sort(np.argsort(-np.abs(corr), kind="stable")[:k])
    est = np.zeros(n)
    if k <= m:
        est[sel] = least_squares(A[:, sel], y).x
    else:
        est[sel] = sla.lstsq(A[:, sel], y)[0]
    rep = _report(est, t0, truth)
    rep.est_support = sel
    rep.est_signs = np.sign(corr[sel]).astype(int)
    return rep


def ml_oracle(
    G,
    y,
    k: int,
    fit: str = "least_squares",
    truth: SparseSignal | None = None,
    x_min: float = 1.0,
    cap: int = ML_CAP,
) -> RecoveryReport:
    """Exhaustive maximum-likelihood decoder for tiny problems.

    ``fit="least_squares"`` fits free amplitudes on every ``k``-subset;
    ``fit="sign_pattern"`` also enumerates the ``2^k`` sign vectors with
    amplitude ``x_min``. The subset (and signs) with the smallest residual
    wins, first in lexicographic order on ties. Refuses to run when the
    number of candidates exceeds ``cap``.
    """
    A = as_array(G)
    y = np.asarray(y, dtype=float).ravel()
    m, n = A.shape
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}")
    if m < k:
        raise ValueError("exhaustive ML needs m >= k")
    if fit not in ("least_squares", "sign_pattern"):
        raise ValueError(f"unknown fit {fit!r}")
    count = math.comb(n, k) * (2**k if fit == "sign_pattern" else 1)
    if count > cap:
        raise ValueError(f"{count} candidates exceed the enumeration cap {cap}")
    t0 = time.perf_counter()
    best = (np.inf, (), np.zeros(0))
    if fit == "sign_pattern":
        patterns = x_min * np.array(list(itertools.product((-1.0, 1.0), repeat=k))).reshape(-1, k)
    for sub in itertools.combinations(range(n), k):
        cols = A[:, list(sub)]
        if fit == "least_squares":
            x, res, _ = least_squares(cols, y) if k else (np.zeros(0), float(np.linalg.norm(y)), False)
            if res < best[0]:
                best = (res, sub, x)
        else:
            r = np.linalg.norm(y[None, :] - patterns @ cols.T, axis=1)
            i = int(np.argmin(r))
            if r[i] < best[0]:
                best = (float(r[i]), sub, patterns[i])
    est = np.zeros(n)
    est[list(best[1])] = best[2]
    rep = _report(est, t0, truth, extras={"residual": best[0], "subset": best[1], "candidates": count})
    rep.est_support = np.array(best[1], dtype=np.intp)
    rep.est_signs = np.sign(best[2]).astype(int)
    return rep
