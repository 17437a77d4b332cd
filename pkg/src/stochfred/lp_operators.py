"""Finite windows of infinite matrices acting on l_p sequence spaces.

Matrices act on row vectors: ``A(x)_j = sum_i a_ij x_i``.  All quantities are
computed on an ``N x N`` truncation; limits are never claimed unless the
caller supplies the analytic value.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .diagnostics import BoundCheck, ConditionDiagnostic, chain_diagnostic
from .errors import (
    AlphaOutOfRangeError,
    ConditionViolatedError,
    DimensionMismatchError,
    NoConvergenceError,
    NoSolutionError,
)


@dataclass(frozen=True, eq=False)
class TruncatedMatrix:
    entries: np.ndarray
    p_exponent: float = 2.0

    def __post_init__(self):
        entries = np.atleast_2d(np.asarray(self.entries, dtype=float))
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] < 1:
            raise DimensionMismatchError(f"need a square N x N window, got {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise ValueError("matrix entries must be finite")
        if not 1.0 < self.p_exponent < np.inf:
            raise ValueError("p must lie in (1, inf)")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "p_exponent", float(self.p_exponent))

    @property
    def N(self) -> int:
        return self.entries.shape[0]

    @property
    def q_exponent(self) -> float:
        p = self.p_exponent
        return p / (p - 1.0)

    @classmethod
    def diagonal(cls, diag, p: float = 2.0) -> "TruncatedMatrix":
        return cls(np.diag(np.asarray(diag, dtype=float)), p)


@dataclass(frozen=True, eq=False)
class DiagonalOperator:
    """Diagonal operator given by a rule ``i -> a_ii`` (``i`` is 1-based)."""

    diag_rule: Callable[[np.ndarray], np.ndarray]
    N: int
    analytic_inf: Optional[float] = None
    analytic_sup: Optional[float] = None
    _entries: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        idx = np.arange(1, self.N + 1)
        entries = np.broadcast_to(np.asarray(self.diag_rule(idx), dtype=float), idx.shape).copy()
        if not np.all(np.isfinite(entries)):
            raise ValueError("diagonal entries must be finite")
        entries.setflags(write=False)
        object.__setattr__(self, "_entries", entries)

    @classmethod
    def from_values(cls, values, analytic_inf=None, analytic_sup=None) -> "DiagonalOperator":
        values = np.asarray(values, dtype=float)
        return cls(lambda i: values[i - 1], values.size, analytic_inf, analytic_sup)

    @classmethod
    def constant(cls, c: float, N: int) -> "DiagonalOperator":
        return cls(lambda i: np.full(i.shape, float(c)), N, abs(c), abs(c))

    def entries(self) -> np.ndarray:
        return self._entries

    def truncate(self, N: int) -> "DiagonalOperator":
        return DiagonalOperator(self.diag_rule, N, self.analytic_inf, self.analytic_sup)

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.N,):
            raise DimensionMismatchError(f"expected length {self.N}, got {x.shape}")
        return self._entries * x

    def as_matrix(self, p: float = 2.0) -> TruncatedMatrix:
        return TruncatedMatrix.diagonal(self._entries, p)


def lp_norm(x, p: float = 2.0) -> float:
    return float(np.linalg.norm(np.asarray(x, dtype=float), ord=p))


def apply_matrix(A: TruncatedMatrix, x) -> np.ndarray:
    """Row vector times matrix: ``out_j = sum_i a_ij x_i``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (A.N,):
        raise DimensionMismatchError(f"expected length {A.N}, got {x.shape}")
    return x @ A.entries


def norm_upper_bound(A: TruncatedMatrix) -> float:
    """Hoelder bound ``(sum_j (sum_i |a_ij|^q)^(p/q))^(1/p)`` on ``||A||_op``."""
    p, q = A.p_exponent, A.q_exponent
    col = np.sum(np.abs(A.entries) ** q, axis=0) ** (p / q)
    return float(np.sum(col) ** (1.0 / p))


def transpose_norm_upper_bound(A: TruncatedMatrix) -> float:
    """Hoelder bound ``(sum_i (sum_j |a_ij|^p)^(q/p))^(1/q)`` on the adjoint norm."""
    p, q = A.p_exponent, A.q_exponent
    row = np.sum(np.abs(A.entries) ** p, axis=1) ** (q / p)
    return float(np.sum(row) ** (1.0 / q))


def diagonal_stats(D: DiagonalOperator) -> Tuple[float, float]:
    """``(min |a_ii|, max |a_ii|)`` over the truncation; the max is the exact norm."""
    mags = np.abs(D.entries())
    return float(mags.min()), float(mags.max())


def diagonal_covering_constant(D: DiagonalOperator) -> float:
    """Truncated estimate ``min_{i<=N} |a_ii|`` of the covering constant.

    Nonincreasing in ``N``; the infinite-dimensional value is ``D.analytic_inf``
    when the caller knows it.
    """
    return diagonal_stats(D)[0]


def basis_vector_covering_upper_bound(A: TruncatedMatrix) -> float:
    """``min_m ||A^*(s_m)||_q`` over unit vectors ``s_m``.

    Under the row-vector convention the adjoint sends ``s_m`` to column ``m``
    of the matrix, so this is the smallest column ``l_q`` norm.  It bounds the
    covering constant from above; it is not an estimate of it.
    """
    q = A.q_exponent
    col = np.sum(np.abs(A.entries) ** q, axis=0) ** (1.0 / q)
    return float(col.min())


def min_singular_estimate(A: TruncatedMatrix, tol: float = 1e-12,
                          max_iter: int = 100_000, seed: int = 0, block: int = 8) -> float:
    """``inf_{||y||_2=1} ||A^T y||_2`` by block inverse iteration on ``A A^T``.

    Each step solves with the LU factors of ``M = A A^T``, re-orthonormalises
    the block and takes Rayleigh-Ritz values, so nearly equal smallest
    singular values inside the block do not slow convergence.  The lowest
    Ritz value ``mu`` decreases monotonically.  Iteration stops when either

    * the eigen-residual ``||M x - mu x||`` drops below ``tol * mu`` (or the
      rounding floor of ``M``), which bounds the distance to an eigenvalue, or
    * the geometric extrapolation of the decrements of ``mu`` puts the
      remaining error below ``tol * mu``.  This covers clusters wider than the
      block, where ``mu`` is accurate long before the residual is small.

    When the decrement ratio shows slow convergence (a cluster wider than the
    block) the block doubles; at full size the Ritz step is exact, so the
    iteration always terminates.  Returns 0 for a numerically singular window.
    """
    if A.p_exponent != 2.0:
        raise ValueError("min_singular_estimate needs p = 2")
    M = A.entries @ A.entries.T
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu = scipy.linalg.lu_factor(M, check_finite=True)
    except (ValueError, np.linalg.LinAlgError):
        return 0.0
    if np.any(np.abs(np.diag(lu[0])) <= np.finfo(float).eps * max(np.abs(M).max(), 1e-300)):
        return 0.0
    floor = 64 * np.finfo(float).eps * np.linalg.norm(M)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((A.N, min(block, A.N)))
    mu_prev, step_prev, hits, since_growth = np.inf, np.inf, 0, 0
    for _ in range(max_iter):
        since_growth += 1
        Q, _ = np.linalg.qr(scipy.linalg.lu_solve(lu, X))
        theta, V = np.linalg.eigh(Q.T @ M @ Q)
        X = Q @ V
        mu, x = float(theta[0]), X[:, 0]
        if np.linalg.norm(M @ x - mu * x) <= max(tol * abs(mu), floor):
            return float(np.sqrt(max(mu, 0.0)))
        step = mu_prev - mu
        slow = since_growth >= 32
        # two consecutive small extrapolated errors guard against a pre-asymptotic ratio
        if np.isfinite(step_prev) and 0.0 <= step < step_prev:
            q = step / step_prev
            hits = hits + 1 if step * q / (1.0 - q) <= tol * abs(mu) else 0
            if hits >= 2:
                return float(np.sqrt(max(mu, 0.0)))
            slow |= q > 0.95 and since_growth >= 10
        else:
            hits = 0
        if slow and X.shape[1] < A.N:
            extra = min(A.N, 2 * X.shape[1]) - X.shape[1]
            X = np.hstack([X, rng.standard_normal((A.N, extra))])
            since_growth, step, hits = 0, np.inf, 0
        mu_prev, step_prev = mu, step
    raise NoConvergenceError(f"inverse iteration did not settle in {max_iter} steps", max_iter)


def check_conditions_diagonal(A: DiagonalOperator, B: DiagonalOperator) -> ConditionDiagnostic:
    """Check ``0 < M_B < m_A <= M_A <= 1`` over the common truncation.

    The admissible ``(alpha, lambda)`` range is ``(M_B, m_A]``; the returned
    interval holds its endpoints.
    """
    if A.N != B.N:
        raise DimensionMismatchError(f"truncations differ: {A.N} vs {B.N}")
    m_A, M_A = diagonal_stats(A)
    m_B, M_B = diagonal_stats(B)
    return chain_diagnostic(
        M_B, m_A, M_A,
        details={"m_A": m_A, "M_A": M_A, "m_B": m_B, "M_B": M_B, "N": A.N},
        labels={
            "zero-kernel": "M_B = 0",
            "modulus >= covering": "M_B >= m_A",
            "operator norm > 1": "M_A > 1",
            "covering constant = 0": "m_A = 0",
        },
    )


def solve_stochastic_diagonal(A: DiagonalOperator, B: DiagonalOperator,
                              omega_coeffs: Callable[[float], Sequence[float]],
                              s: float) -> np.ndarray:
    """Componentwise ``sigma_i = omega_i(s) / (a_ii - b_ii)``.

    A component with ``a_ii = b_ii`` and ``omega_i(s) = 0`` is set to zero.
    """
    if A.N != B.N:
        raise DimensionMismatchError(f"truncations differ: {A.N} vs {B.N}")
    omega = np.asarray(omega_coeffs(s), dtype=float)
    if omega.shape != (A.N,):
        raise DimensionMismatchError(f"noise has shape {omega.shape}, expected ({A.N},)")
    diff = A.entries() - B.entries()
    zero = diff == 0.0
    bad = zero & (omega != 0.0)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0]) + 1
        raise NoSolutionError(f"a_ii = b_ii but omega_i(s) != 0 at i = {i}")
    sigma = np.zeros(A.N)
    sigma[~zero] = omega[~zero] / diff[~zero]
    return sigma


def diagonal_residual(A: DiagonalOperator, B: DiagonalOperator, sigma, omega) -> np.ndarray:
    """Componentwise ``a_ii sigma_i - b_ii sigma_i - omega_i``."""
    sigma = np.asarray(sigma, dtype=float)
    return A.apply(sigma) - B.apply(sigma) - np.asarray(omega, dtype=float)


def diagonal_bound_rhs(A: DiagonalOperator, B: DiagonalOperator, omega, x,
                       alpha: float, p: float = 2.0) -> float:
    """Right side ``||B(x) + omega - A(x)||_p / (alpha - M_B)`` of the distance bound."""
    M_B = diagonal_stats(B)[1]
    if not alpha > M_B:
        raise AlphaOutOfRangeError(f"alpha = {alpha} must exceed M_B = {M_B}")
    x = np.asarray(x, dtype=float)
    r = B.apply(x) + np.asarray(omega, dtype=float) - A.apply(x)
    return lp_norm(r, p) / (alpha - M_B)


@dataclass
class DiagonalSolveReport:
    s: float
    sigma: np.ndarray
    residual_max: float
    condition: ConditionDiagnostic
    bound_guaranteed: bool
    bound_checks: list = field(default_factory=list)


def run_diagonal_system(A: DiagonalOperator, B: DiagonalOperator,
                        omega_coeffs: Callable[[float], Sequence[float]], s: float,
                        anchors=(), p: float = 2.0, alpha: Optional[float] = None,
                        force: bool = False) -> DiagonalSolveReport:
    """Check the hypotheses, solve at ``s`` and evaluate the distance bound.

    Without ``force`` a failed check raises :class:`ConditionViolatedError`.
    With ``force`` the explicit solver still runs and the report says the
    bound is not guaranteed; no bound checks are evaluated then.
    """
    diag = check_conditions_diagonal(A, B)
    if not diag.passes and not force:
        raise ConditionViolatedError(
            "diagonal conditions fail: " + "; ".join(diag.reasons), diag)
    sigma = solve_stochastic_diagonal(A, B, omega_coeffs, s)
    omega = np.asarray(omega_coeffs(s), dtype=float)
    res = diagonal_residual(A, B, sigma, omega)
    checks = []
    if diag.passes and diag.admissible_interval is not None:
        a = diag.midpoint_alpha() if alpha is None else alpha
        for k, x in enumerate(anchors):
            x = np.asarray(x, dtype=float)
            lhs = lp_norm(sigma - x, p)
            rhs = diagonal_bound_rhs(A, B, omega, x, a, p)
            checks.append(BoundCheck(f"anchor{k}", a, lhs, rhs, lhs <= rhs + 1e-12))
    return DiagonalSolveReport(s, sigma, float(np.max(np.abs(res))), diag,
                               bound_guaranteed=diag.passes, bound_checks=checks)
