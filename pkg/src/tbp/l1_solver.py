"""Basis pursuit as a linear program, solved to a vertex by revised simplex.

The program ``min ||b||_1 s.t. G b = y`` is written in split form::

    min 1'(u + v)   s.t.   G u - G v = y,   u, v >= 0

with variable ``j < n`` standing for ``u_j`` (column ``G_j``) and ``j >= n``
for ``v_{j-n}`` (column ``-G_j``). Reduced costs of the pair are
``1 - G_j'pi`` and ``1 + G_j'pi``, so dual feasibility of the split program
is exactly ``max_j |G_j'pi| <= 1``.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla
from scipy.linalg.blas import dger

from .ensembles import as_array

__all__ = [
    "ToleranceSet",
    "LpStatus",
    "LpSolution",
    "CertificateReport",
    "LeastSquaresResult",
    "basis_pursuit",
    "extract_dual_certificate",
    "least_squares",
]


@dataclass(frozen=True)
class ToleranceSet:
    """Numerical tolerances of the simplex solve and its certificate.

    ``feas_tol`` is relative to ``max(1, ||y||_inf)``; ``max_iter=None``
    means ``50 * (n + m)``.
    """

    feas_tol: float = 1e-8
    pivot_tol: float = 1e-9
    dual_tol: float = 1e-7
    gap_tol: float = 1e-6
    max_iter: int | None = None
    refactor_every: int = 100
    bland_after: int = 50


DEFAULT_TOL = ToleranceSet()


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    # certified optimum at a primal-degenerate vertex (fewer than m nonzeros)
    DEGENERATE = "degenerate"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class LpSolution:
    """Vertex solution of basis pursuit.

    Attributes
    ----------
    beta : ndarray (n,)
        Primal estimate ``u - v``.
    basis : ndarray (m,)
        Columns of ``G`` in the optimal basis (sorted).
    duals : ndarray (m,)
        Dual vector ``pi`` with ``max_j |pi'G_j| <= 1``.
    objective : float
        ``||beta||_1``.
    status : LpStatus
    iterations : int
        Simplex pivots performed.
    basis_signs : ndarray (m,)
        +1 where ``u_j`` is basic, -1 where ``v_j`` is basic.
    """

    beta: np.ndarray
    basis: np.ndarray
    duals: np.ndarray
    objective: float
    status: LpStatus
    iterations: int
    basis_signs: np.ndarray | None = None
    message: str = ""

    @property
    def certified(self) -> bool:
        return self.status in (LpStatus.OPTIMAL, LpStatus.DEGENERATE)

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.beta))


class SolverFailure(RuntimeError):
    """Raised by callers that require a certified basis-pursuit solution."""

    def __init__(self, solution: LpSolution):
        super().__init__(f"basis pursuit failed: {solution.message}")
        self.solution = solution


def _failure(n, m, it, msg) -> LpSolution:
    return LpSolution(
        beta=np.full(n, np.nan),
        basis=np.zeros(0, dtype=np.intp),
        duals=np.full(m, np.nan),
        objective=np.nan,
        status=LpStatus.NUMERICAL_FAILURE,
        iterations=it,
        message=msg,
    )


def _basis_columns(A, basic):
    n = A.shape[1]
    cols = basic % n
    return A[:, cols] * np.where(basic < n, 1.0, -1.0)


def _crash_values(A, cols, y, tol):
    lu, piv = sla.lu_factor(A[:, cols], check_finite=False)
    u = np.abs(np.diag(lu))
    if u.min() <= tol.pivot_tol * max(u.max(), 1.0):
        return None
    return sla.lu_solve((lu, piv), y)


def basis_pursuit(G, y, tol: ToleranceSet = DEFAULT_TOL, start=None) -> LpSolution:
    """Solve ``min ||b||_1 s.t. G b = y`` to an optimal vertex.

    Starts from a primal-feasible crash basis: the ``m`` largest entries of
    the minimum-l2 solution (falling back to column-pivoted QR when those
    columns are singular), each entered as ``u_j`` or ``v_j`` according to
    the sign of its coefficient. Dantzig pricing is used, with
    Bland's rule after ``tol.bland_after`` consecutive degenerate pivots.
    The explicit basis inverse is rebuilt from an LU factorization every
    ``tol.refactor_every`` pivots and before certification.

    ``start`` optionally names ``m`` columns for the crash basis (for
    example the optimal basis of a nearby right-hand side); any nonsingular
    choice is primal feasible once each column takes the sign of its
    coefficient.

    Never returns an uncertified solution: rank deficiency, exhausting the
    iteration cap, or a failed final certificate give ``NUMERICAL_FAILURE``.
    """
    with warnings.catch_warnings():
        # singular trial bases are detected and handled explicitly
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        return _simplex(G, y, tol, start)


def _simplex(G, y, tol, start):
    A = as_array(G)
    m, n = A.shape
    y = np.asarray(y, dtype=float).ravel()
    if y.size != m:
        raise ValueError(f"y has length {y.size}, expected {m}")
    if m > n:
        raise ValueError("basis pursuit needs m <= n")
    max_iter = tol.max_iter if tol.max_iter is not None else 50 * (n + m)
    scale = max(1.0, float(np.max(np.abs(y), initial=0.0)))
    feas = tol.feas_tol * scale
    opt_tol = 1e-2 * tol.dual_tol

    cols = None
    if start is not None:
        cols = np.asarray(start, dtype=np.intp)
        if cols.size != m:
            raise ValueError(f"start must name exactly {m} columns")
    else:
        # largest entries of the minimum-l2 solution seed the basis
        try:
            b2 = A.T @ sla.solve(A @ A.T, y, assume_a="pos")
            cols = np.argsort(-np.abs(b2), kind="stable")[:m]
        except (sla.LinAlgError, ValueError):
            cols = None
    z = _crash_values(A, cols, y, tol) if cols is not None else None
    if z is None:
        _, R, piv = sla.qr(A, mode="economic", pivoting=True)
        rdiag = np.abs(np.diag(R))
        if rdiag[0] == 0 or rdiag[m - 1] <= tol.pivot_tol * rdiag[0]:
            return _failure(n, m, 0, "sensing matrix is numerically rank deficient")
        cols = piv[:m]
        z = _crash_values(A, cols, y, tol)
        if z is None:
            return _failure(n, m, 0, "singular crash basis")
    basic = np.where(z >= 0, cols, cols + n).astype(np.intp)
    is_basic = np.zeros(2 * n, dtype=bool)
    is_basic[basic] = True

    def refactor():
        lu = sla.lu_factor(_basis_columns(A, basic))
        if np.min(np.abs(np.diag(lu[0]))) <= tol.pivot_tol * np.max(np.abs(np.diag(lu[0]))):
            return None, None
        binv = np.asfortranarray(sla.lu_solve(lu, np.eye(m)))
        return lu, binv

    lu, Binv = refactor()
    if lu is None:
        return _failure(n, m, 0, "singular crash basis")
    xB = np.maximum(sla.lu_solve(lu, y), 0.0)
    ones = np.ones(m)

    it = 0
    since_refactor = 0
    degenerate_run = 0
    fresh = True
    while True:
        pi = Binv.T @ ones
        g = A.T @ pi
        rc = np.concatenate((1.0 - g, 1.0 + g))
        rc[is_basic] = np.inf
        if degenerate_run >= tol.bland_after:
            cand = np.flatnonzero(rc < -opt_tol)
            q = int(cand[0]) if cand.size else -1
        else:
            q = int(np.argmin(rc))
            if rc[q] >= -opt_tol:
                q = -1
        if q < 0:
            if fresh:
                break
            # re-verify optimality on a fresh factorization
            lu, Binv = refactor()
            if lu is None:
                return _failure(n, m, it, "basis became singular")
            xB = sla.lu_solve(lu, y)
            if np.min(xB) < -feas:
                return _failure(n, m, it, "primal infeasibility after refactorization")
            xB = np.maximum(xB, 0.0)
            since_refactor = 0
            fresh = True
            continue

        if it >= max_iter:
            return _failure(n, m, it, f"iteration cap {max_iter} exceeded")

        col = A[:, q % n] if q < n else -A[:, q - n]
        d = Binv @ col
        mask = d > tol.pivot_tol
        if not np.any(mask):
            return _failure(n, m, it, "unbounded ray (numerical breakdown)")
        rows = np.flatnonzero(mask)
        ratios = xB[rows] / d[rows]
        theta = float(np.min(ratios))
        tied = rows[ratios <= theta + 1e-12 * max(1.0, theta)]
        if degenerate_run >= tol.bland_after:
            r = int(tied[np.argmin(basic[tied])])
        else:
            r = int(tied[np.argmax(d[tied])])
        theta = xB[r] / d[r]

        xB -= theta * d
        xB[r] = theta
        np.maximum(xB, 0.0, out=xB)
        prow = Binv[r] / d[r]
        dger(-1.0, d, prow, a=Binv, overwrite_a=1)
        Binv[r] = prow
        is_basic[basic[r]] = False
        is_basic[q] = True
        basic[r] = q

        it += 1
        degenerate_run = degenerate_run + 1 if theta <= 1e-12 * scale else 0
        since_refactor += 1
        fresh = False
        if since_refactor >= tol.refactor_every:
            lu, Binv = refactor()
            if lu is None:
                return _failure(n, m, it, "basis became singular")
            xB = np.maximum(sla.lu_solve(lu, y), 0.0)
            since_refactor = 0
            fresh = True

    pi = sla.lu_solve(lu, ones, trans=1)
    xB = np.where(xB <= 1e-12 * scale, 0.0, xB)
    beta = np.zeros(n)
    signs = np.where(basic < n, 1.0, -1.0)
    beta[basic % n] = signs * xB
    order = np.argsort(basic % n)
    sol = LpSolution(
        beta=beta,
        basis=(basic % n)[order],
        duals=pi,
        objective=float(np.sum(np.abs(beta))),
        status=LpStatus.OPTIMAL,
        iterations=it,
        basis_signs=signs[order].astype(int),
    )
    cert = extract_dual_certificate(sol, A, y)
    if not cert.passed(tol, scale):
        return _failure(n, m, it, f"final certificate failed: {cert}")
    if sol.nnz < m:
        sol = replace(sol, status=LpStatus.DEGENERATE)
    return sol


@dataclass(frozen=True)
class CertificateReport:
    """Optimality evidence for a basis-pursuit vertex.

    ``dual_max`` is ``max_j |pi'G_j|``; ``slackness`` the worst
    ``|pi'G_j - sgn(beta_j)|`` over nonzero ``beta_j``; ``gap`` is
    ``|pi'y - ||beta||_1|``; ``residual`` is ``||G beta - y||_inf`` (NaN when
    ``y`` is not supplied).
    """

    dual_max: float
    slackness: float
    gap: float
    residual: float
    nnz: int
    m: int

    def passed(self, tol: ToleranceSet = DEFAULT_TOL, scale: float = 1.0) -> bool:
        ok = (
            self.dual_max <= 1.0 + tol.dual_tol
            and self.slackness <= tol.dual_tol
            and self.gap <= tol.gap_tol * scale
            and self.nnz <= self.m
        )
        if not np.isnan(self.residual):
            ok = ok and self.residual <= tol.feas_tol * scale
        return bool(ok)


def extract_dual_certificate(sol: LpSolution, G, y=None) -> CertificateReport:
    """Evaluate dual feasibility, complementary slackness and the duality gap.

    ``y`` defaults to ``G @ sol.beta`` (so the residual is then not checked
    and the gap measures ``pi'G beta`` against ``||beta||_1``).
    """
    A = as_array(G)
    g = A.T @ sol.duals
    nz = np.flatnonzero(sol.beta)
    slack = float(np.max(np.abs(g[nz] - np.sign(sol.beta[nz])), initial=0.0))
    if y is None:
        rhs = A @ sol.beta
        residual = np.nan
    else:
        rhs = np.asarray(y, dtype=float)
        residual = float(np.max(np.abs(A @ sol.beta - rhs), initial=0.0))
    return CertificateReport(
        dual_max=float(np.max(np.abs(g), initial=0.0)),
        slackness=slack,
        gap=float(abs(sol.duals @ rhs - np.sum(np.abs(sol.beta)))),
        residual=residual,
        nnz=int(nz.size),
        m=A.shape[0],
    )


class LeastSquaresResult(NamedTuple):
    x: np.ndarray
    residual: float
    rank_deficient: bool


def least_squares(A, b, rcond: float = 1e-12) -> LeastSquaresResult:
    """Minimize ``||A x - b||_2`` with a column-pivoted QR factorization.

    When ``A`` is numerically rank deficient the minimum-norm minimizer is
    returned (via SVD) and ``rank_deficient`` is set.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    if A.ndim == 1:
        A = A[:, None]
    p, q = A.shape
    if b.size != p:
        raise ValueError("dimension mismatch between A and b")
    if p < q:
        raise ValueError(f"least squares needs p >= q, got {p} x {q}")
    if q == 0:
        return LeastSquaresResult(np.zeros(0), float(np.linalg.norm(b)), False)
    Q, R, piv = sla.qr(A, mode="economic", pivoting=True)
    rdiag = np.abs(np.diag(R))
    if rdiag[0] == 0 or rdiag[-1] <= rcond * rdiag[0] * max(p, q):
        x = sla.lstsq(A, b, cond=rcond)[0]
        return LeastSquaresResult(x, float(np.linalg.norm(A @ x - b)), True)
    x = np.empty(q)
    x[piv] = sla.solve_triangular(R, Q.T @ b)
    return LeastSquaresResult(x, float(np.linalg.norm(A @ x - b)), False)
