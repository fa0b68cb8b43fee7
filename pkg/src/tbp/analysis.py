"""Theory constants, structural verifiers and empirical estimators.

These make the recovery guarantees checkable on concrete instances: exact
restricted-isometry constants at small sizes, the l2 stability constant
``C_s``, the admissible noise level ``epsilon0``, the null-space
reformulation of basis pursuit, the minimum-norm conversion of output noise
to input noise, and a bisection estimate of the largest tolerable input
perturbation.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from .ensembles import SensingMatrix, SparseSignal, _as_generator, as_array
from .l1_solver import DEFAULT_TOL, LpSolution, SolverFailure, ToleranceSet, least_squares
from .recovery import RecoveryReport, tbp

__all__ = [
    "RipReport",
    "TheoryConstants",
    "NullSpaceBasis",
    "BoundReport",
    "Gamma0Estimate",
    "DomainError",
    "RIP_EXACT_CAP",
    "rip_exact",
    "rip_monte_carlo",
    "compute_cs",
    "compute_epsilon0",
    "null_space_basis",
    "verify_null_space_equivalence",
    "min_norm_noise",
    "check_min_norm_bounds",
    "empirical_gamma0",
    "corollary_bound",
    "corollary_bound_check",
]

RIP_EXACT_CAP = 10**6
_CHUNK = 4096


class DomainError(ValueError):
    """An input lies outside the region where a theory constant is defined."""


@dataclass(frozen=True)
class RipReport:
    k: int
    delta_k: float
    extremal_support: tuple
    method: str  # "exact_enumeration" or "monte_carlo_lower_bound"


def _support_deltas(A, supports):
    """Isometry deviation of each support in a (B, k) index batch."""
    sub = A[:, supports]  # (m, B, k)
    gram = np.einsum("mbi,mbj->bij", sub, sub)
    ev = np.linalg.eigvalsh(gram)
    return np.maximum(ev[:, -1] - 1.0, 1.0 - ev[:, 0])


def _scan(A, support_iter):
    best, arg = -np.inf, None
    while True:
        chunk = list(itertools.islice(support_iter, _CHUNK))
        if not chunk:
            break
        batch = np.asarray(chunk, dtype=np.intp)
        d = _support_deltas(A, batch)
        i = int(np.argmax(d))
        if d[i] > best:
            best, arg = float(d[i]), tuple(int(t) for t in batch[i])
    return best, arg


def _check_k(k, n):
    if int(k) != k or not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    return int(k)


def rip_exact(G, k: int) -> RipReport:
    """Restricted isometry constant by enumerating every ``k``-column support.

    ``delta_k = max_T max(lambda_max(G_T'G_T) - 1, 1 - lambda_min(G_T'G_T))``.
    By eigenvalue interlacing, supports of size exactly ``k`` attain the
    maximum over ``|T| <= k``.

    Raises
    ------
    ValueError
        If ``C(n, k)`` exceeds :data:`RIP_EXACT_CAP`; use
        :func:`rip_monte_carlo` instead.
    """
    A = as_array(G)
    n = A.shape[1]
    k = _check_k(k, n)
    if math.comb(n, k) > RIP_EXACT_CAP:
        raise ValueError(
            f"C({n}, {k}) = {math.comb(n, k)} supports exceeds the exact cap {RIP_EXACT_CAP}"
        )
    delta, arg = _scan(A, itertools.combinations(range(n), k))
    return RipReport(k, delta, arg, "exact_enumeration")


def rip_monte_carlo(G, k: int, samples: int, rng=0) -> RipReport:
    """Lower bound on ``delta_k`` from randomly sampled supports.

    When ``samples`` covers every support the scan is exhaustive and the
    result equals :func:`rip_exact` (still tagged as a lower bound).
    """
    A = as_array(G)
    n = A.shape[1]
    k = _check_k(k, n)
    if samples < 1:
        raise ValueError("samples must be at least 1")
    if samples >= math.comb(n, k):
        delta, arg = _scan(A, itertools.combinations(range(n), k))
    else:
        gen = _as_generator(rng)
        draws = (np.sort(gen.choice(n, size=k, replace=False)) for _ in range(samples))
        delta, arg = _scan(A, draws)
    return RipReport(k, delta, arg, "monte_carlo_lower_bound")


def compute_cs(delta_2k: float, delta_3k: float) -> float:
    """Constant of the l2 stability bound ``||h||_2 <= C_s ||w||_1 / sqrt(k)``.

    ``C_s = sqrt(2) (sqrt(1 + d2k) (1 + 1/sqrt(2)) / C_M + 1)`` with
    ``C_M = sqrt(1 - d3k) - sqrt((1 + d2k) / 2)``.

    Raises
    ------
    DomainError
        If ``C_M <= 0`` or a delta is negative.
    """
    if delta_2k < 0 or delta_3k < 0:
        raise DomainError("isometry constants must be nonnegative")
    if delta_3k >= 1:
        raise DomainError(f"delta_3k = {delta_3k} >= 1")
    c_m = math.sqrt(1.0 - delta_3k) - math.sqrt((1.0 + delta_2k) / 2.0)
    if c_m <= 0:
        raise DomainError(f"C_M = {c_m:.3g} <= 0 for delta_2k={delta_2k}, delta_3k={delta_3k}")
    return math.sqrt(2.0) * (math.sqrt(1.0 + delta_2k) * (1.0 + 1.0 / math.sqrt(2.0)) / c_m + 1.0)


@dataclass(frozen=True)
class TheoryConstants:
    alpha: float
    C: float
    C_s: float
    n: int
    d1: float
    d2: float
    epsilon0: float


def compute_epsilon0(alpha: float, C: float, C_s: float, n: int) -> TheoryConstants:
    """Admissible l-inf input noise level in the linear-sparsity regime.

    With ``r = sqrt(C / (C - 1))``::

        d1 = 2 sqrt(2) / alpha * C_s / (r - 1)
        d2 = 2 sqrt(2) / sqrt(alpha) * r * C_s / (r - 1)
        epsilon0 = 1 / (2 (1 + d1 + d2 sqrt(2 log n)))

    Both ``d1`` and ``d2`` grow with ``C``: fewer measurements per unknown
    shrink the admissible noise.
    """
    if not C > 1:
        raise DomainError(f"need C = n/m > 1, got {C}")
    if not 0 < alpha < 1:
        raise DomainError(f"need 0 < alpha < 1, got {alpha}")
    if not C_s > 0 or n < 2:
        raise DomainError("need C_s > 0 and n >= 2")
    r = math.sqrt(C / (C - 1.0))
    inv = 1.0 / (r - 1.0)
    d1 = 2.0 * math.sqrt(2.0) / alpha * inv * C_s
    d2 = 2.0 * math.sqrt(2.0) / math.sqrt(alpha) * inv * r * C_s
    eps0 = 0.5 / (1.0 + d1 + d2 * math.sqrt(2.0 * math.log(n)))
    return TheoryConstants(alpha, C, C_s, int(n), d1, d2, eps0)


@dataclass(frozen=True)
class NullSpaceBasis:
    """Orthonormal basis ``A`` (n x (n - m)) of the null space of ``source``."""

    A: np.ndarray
    source: SensingMatrix


def null_space_basis(G) -> NullSpaceBasis:
    """Orthonormal null-space basis from the full QR factorization of ``G'``."""
    src = G if isinstance(G, SensingMatrix) else SensingMatrix(as_array(G))
    A = src.entries
    m, n = A.shape
    if m > n:
        raise ValueError("need m <= n")
    Q, R = sla.qr(A.T, mode="full")
    rd = np.abs(np.diag(R))
    if rd.size == 0 or np.min(rd) <= max(m, n) * np.finfo(float).eps * np.max(np.abs(R)):
        raise ValueError("sensing matrix is not full row rank")
    return NullSpaceBasis(np.ascontiguousarray(Q[:, m:]), src)


def verify_null_space_equivalence(
    G, y, x_plus_w, sol: LpSolution, basis: NullSpaceBasis | None = None,
    tol: ToleranceSet = DEFAULT_TOL,
) -> float:
    """Distance of the basis-pursuit vertex from the affine set ``x + w + range(A)``.

    Every feasible point of basis pursuit equals ``x + w + A v`` for some
    ``v``; this fits ``v`` by least squares and returns
    ``||x + w + A v - beta||_inf``. A small value certifies the
    correspondence.
    """
    M = as_array(G)
    y = np.asarray(y, dtype=float).ravel()
    z = np.asarray(x_plus_w, dtype=float).ravel()
    scale = max(1.0, float(np.max(np.abs(y), initial=0.0)))
    if np.max(np.abs(M @ z - y), initial=0.0) > tol.feas_tol * scale:
        raise ValueError("y is not consistent with x + w")
    if basis is None:
        basis = null_space_basis(G)
    A = basis.A
    if A.shape[1] == 0:
        return float(np.max(np.abs(z - sol.beta), initial=0.0))
    v = least_squares(A, sol.beta - z).x
    return float(np.max(np.abs(z + A @ v - sol.beta)))


def min_norm_noise(G, e) -> np.ndarray:
    """Minimum-l2 ``w`` with ``G w = e``, computed as ``V S^-1 U' e`` from the SVD."""
    A = as_array(G)
    m, n = A.shape
    e = np.asarray(e, dtype=float).ravel()
    if e.size != m:
        raise ValueError(f"e has length {e.size}, expected {m}")
    if m > n:
        raise ValueError("need m <= n")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s[-1] <= max(m, n) * np.finfo(float).eps * s[0]:
        raise ValueError("sensing matrix is not full row rank")
    return Vt.T @ ((U.T @ e) / s)


class BoundReport(NamedTuple):
    linf: float
    l1: float
    linf_bound: float
    l1_bound: float
    residual: float
    linf_ok: bool
    l1_ok: bool


def check_min_norm_bounds(G, e, w, eps: float) -> BoundReport:
    """Check the l-inf and l1 size bounds for minimum-norm noise.

    For ``e ~ N(0, eps^2 I)`` and ``C = n / m``::

        ||w||_inf <= 2 eps / (sqrt(C) - 1) * sqrt(2 log n)
        ||w||_1   <= 2 sqrt(2 C) / (sqrt(C) - 1) * m * eps
    """
    A = as_array(G)
    m, n = A.shape
    C = n / m
    if not C > 1:
        raise DomainError("need n > m")
    w = np.asarray(w, dtype=float).ravel()
    e = np.asarray(e, dtype=float).ravel()
    root = math.sqrt(C) - 1.0
    linf_b = 2.0 * eps / root * math.sqrt(2.0 * math.log(n))
    l1_b = 2.0 * math.sqrt(2.0 * C) / root * m * eps
    linf, l1 = float(np.max(np.abs(w), initial=0.0)), float(np.sum(np.abs(w)))
    res = float(np.max(np.abs(A @ w - e), initial=0.0))
    return BoundReport(linf, l1, linf_b, l1_b, res, linf <= linf_b, l1 <= l1_b)


class Gamma0Estimate(NamedTuple):
    """Bisection result: ``value`` is 0 with ``flagged`` set when even the
    smallest perturbation breaks recovery."""

    value: float
    flagged: bool
    solves: int

    def __float__(self):
        return float(self.value)


def empirical_gamma0(
    G,
    x: SparseSignal,
    w_direction,
    tol: float = 1e-9,
    lp_tol: ToleranceSet = DEFAULT_TOL,
    bisection_steps: int = 40,
) -> Gamma0Estimate:
    """Largest input-noise scale along ``w_direction`` that TBP tolerates.

    Measurements are ``y = G (x + eps w)``; recovery means no missed
    support entries after thresholding at ``x_min / 2``. The bracket grows
    by doubling from ``eps = 2**-20`` until recovery fails, then is bisected
    ``bisection_steps`` times (stopping early once its relative width is
    below ``tol``). Each solve warm-starts from the last successful basis.

    Raises
    ------
    ValueError
        If ``||w_direction||_inf != 1`` or the noiseless instance is not
        recovered exactly.
    """
    A = as_array(G)
    w = np.asarray(w_direction, dtype=float).ravel()
    if w.size != x.n:
        raise ValueError("w_direction has the wrong length")
    if not np.isclose(np.max(np.abs(w), initial=0.0), 1.0, rtol=0, atol=1e-12):
        raise ValueError("w_direction must have unit l-inf norm")
    if x.k == 0:
        raise ValueError("signal must be nonempty")
    xd = x.dense()
    Gx, Gw = A @ xd, A @ w
    solves = 0
    state = {"start": None}

    def ok(eps):
        nonlocal solves
        solves += 1
        try:
            rep = tbp(A, Gx + eps * Gw, x.x_min, lp_tol, truth=x, start=state["start"])
        except SolverFailure:
            # warm start went singular; retry cold
            rep = tbp(A, Gx + eps * Gw, x.x_min, lp_tol, truth=x)
        if rep.n_miss == 0:
            state["start"] = rep.solver_stats.basis
            return True
        return False

    pre = tbp(A, Gx, x.x_min, lp_tol, truth=x)
    solves += 1
    if not pre.success:
        raise ValueError("noiseless instance is not recovered exactly")
    state["start"] = pre.solver_stats.basis

    lo, hi = 0.0, 2.0**-20
    while ok(hi):
        lo, hi = hi, 2.0 * hi
        if hi > 2.0**40:
            raise RuntimeError("recovery never failed along this direction")
    if lo == 0.0:
        return Gamma0Estimate(0.0, True, solves)
    for _ in range(bisection_steps):
        if hi - lo <= tol * hi:
            break
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return Gamma0Estimate(lo, False, solves)


def corollary_bound(n: int, k: int, C_s: float, eps: float) -> float:
    """Cap on miss and false-alarm counts: ``n^2 eps^2 C_s^2 / (k (1/2 - eps)^2)``.

    Equal to ``(n / alpha) (2 C_s eps / (1 - 2 eps))^2`` when ``k = alpha n``.
    """
    if not eps < 0.5:
        raise DomainError(f"need eps < 1/2, got {eps}")
    if k < 1:
        raise DomainError("need k >= 1")
    return n * n * eps * eps * C_s * C_s / (k * (0.5 - eps) ** 2)


def corollary_bound_check(
    report: RecoveryReport, C_s: float, alpha: float, eps: float, k: int | None = None
) -> bool:
    """True iff both ``n_miss`` and ``n_false`` are within :func:`corollary_bound`.

    ``k`` defaults to ``alpha * n``; pass the true sparsity for sublinear
    instances.
    """
    if not eps < 0.5:
        raise DomainError(f"need eps < 1/2, got {eps}")
    if report.n_miss is None:
        raise ValueError("report carries no metrics; run recovery with truth=")
    n = report.estimate.size
    kk = alpha * n if k is None else k
    bound = corollary_bound(n, kk, C_s, eps)
    return report.n_miss <= bound and report.n_false <= bound
