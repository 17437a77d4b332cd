"""Solvers for ``lambda sigma(s) = K sigma(s) + omega(s)`` and its coefficient form."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .diagnostics import BoundCheck, ConditionDiagnostic
from .errors import (
    ConditionViolatedError,
    DenominatorSingularError,
    DimensionMismatchError,
    NoConvergenceError,
    ParameterOutOfRangeError,
    SingularSystemError,
)
from .function_space import CoeffFunction, GridFunction, inner_product, l2_norm
from .kernel_operators import (
    CoeffKernel,
    GridKernel,
    Kernel,
    MultiplicationOperator,
    TensorKernel,
    apply_kernel,
    hs_norm,
    kernel_matrix,
    truncate_kernel_param,
)

FunctionValue = Union[GridFunction, CoeffFunction]

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000
SINGULAR_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class NoiseFamily:
    """Parameterised forcing term ``s -> omega(s)`` on a parameter interval."""

    evaluator: Callable[[float], FunctionValue]
    domain: Tuple[float, float]

    def __call__(self, s: float) -> FunctionValue:
        lo, hi = self.domain
        if not lo <= s <= hi:
            raise ParameterOutOfRangeError(f"s = {s} outside parameter domain [{lo}, {hi}]")
        return self.evaluator(s)


@dataclass
class SolveReport:
    solution: FunctionValue
    residual_norm: float
    iterations: int = 0
    contraction_estimate: Optional[float] = None
    condition_diagnostic: Optional[ConditionDiagnostic] = None
    bound_checks: List[BoundCheck] = field(default_factory=list)
    info: dict = field(default_factory=dict)


def residual_norm(k: Kernel, lam, sigma: FunctionValue, omega: FunctionValue) -> float:
    """``||lam sigma - K sigma - omega||`` through the dense operator matrix.

    ``lam`` is a scalar, or a :class:`MultiplicationOperator` for the
    coefficient form ``a_m sigma_m = sum_n k_mn sigma_n + omega_m``.  The
    kernel action goes through :func:`kernel_matrix`, not through the
    solver's own code path.
    """
    Kmat = kernel_matrix(k)
    if isinstance(sigma, CoeffFunction):
        a = lam.a_seq if isinstance(lam, MultiplicationOperator) else float(lam)
        r = a * sigma.coeffs - Kmat @ sigma.coeffs - omega.coeffs
        return float(np.sqrt(np.dot(r, r)))
    r = float(lam) * sigma.values - Kmat @ sigma.values - omega.values
    return float(np.sqrt(max(np.dot(sigma.grid.weights * r, r), 0.0)))


def _check_lambda_condition(knorm: float, lam: float, force: bool, what: str):
    if abs(lam) <= knorm and not force:
        raise ConditionViolatedError(
            f"{what}: need |lambda| > ||k||, got |lambda| = {abs(lam):.6g}, ||k|| = {knorm:.6g}")
    if abs(lam) > 1.0:
        warnings.warn(f"|lambda| = {abs(lam):.6g} > 1 lies outside the covering hypothesis; "
                      "only the ratio ||k||/|lambda| matters for convergence", stacklevel=3)


def solve_tensor_closed_form(g: GridFunction, h: GridFunction, lam: float,
                             omega: Union[NoiseFamily, GridFunction], s: Optional[float] = None,
                             force: bool = False) -> SolveReport:
    """Closed form for the rank-one kernel ``g(u) h(v)``.

    ``sigma = (1/lam) (<h, omega>/(lam - <g, h>)) g + (1/lam) omega``.
    """
    omega_s = omega(s) if isinstance(omega, NoiseFamily) else omega
    k = TensorKernel(g, h)
    gh = inner_product(g, h)
    denom = lam - gh
    if abs(denom) <= SINGULAR_EPS:
        raise DenominatorSingularError(f"lambda - <g, h> = {denom:.3g}")
    _check_lambda_condition(hs_norm(k), lam, force, "closed form")
    moment = inner_product(h, omega_s) / denom
    sigma = (g * moment + omega_s) / lam
    return SolveReport(sigma, residual_norm(k, lam, sigma, omega_s),
                       info={"method": "closed_form", "g_dot_h": gh, "h_dot_sigma": moment})


def solve_neumann(k: Kernel, lam: float, omega_s: GridFunction, tol: float = DEFAULT_TOL,
                  max_iter: int = DEFAULT_MAX_ITER, force: bool = False) -> SolveReport:
    """Fixed-point iteration ``sigma <- (K sigma + omega)/lam`` from ``omega/lam``.

    Stops when ``||sigma_new - sigma|| < tol * max(1, ||sigma||)``.  The
    reported contraction estimate is the largest observed step ratio; ratios
    are only recorded while the steps are above the rounding floor.
    """
    knorm = hs_norm(k)
    _check_lambda_condition(knorm, lam, force, "Neumann iteration")
    sigma = omega_s / lam
    prev_step = None
    ratios = []
    for it in range(1, max_iter + 1):
        new = (apply_kernel(k, sigma) + omega_s) / lam
        step = l2_norm(new - sigma)
        scale = max(1.0, l2_norm(sigma))
        if prev_step is not None and prev_step > 1e3 * np.finfo(float).eps * scale:
            ratios.append(step / prev_step)
        sigma = new
        if step < tol * scale:
            rho = max(ratios) if ratios else 0.0
            return SolveReport(sigma, residual_norm(k, lam, sigma, omega_s), iterations=it,
                               contraction_estimate=rho,
                               info={"method": "neumann", "step_ratios": ratios,
                                     "rate_bound": knorm / abs(lam)})
        prev_step = step
    raise NoConvergenceError(f"Neumann iteration did not converge in {max_iter} steps", max_iter)


def solve_coefficient_system(A: MultiplicationOperator, k: CoeffKernel, omega_coeffs: CoeffFunction,
                             method: str = "direct", tol: float = DEFAULT_TOL,
                             max_iter: int = DEFAULT_MAX_ITER, force: bool = False) -> SolveReport:
    """Solve ``(diag(a) - K) sigma = omega`` on the truncation.

    ``direct`` uses LU with partial pivoting; ``iterative`` runs
    ``sigma <- (K sigma + omega)/a``.
    """
    N = omega_coeffs.N
    if k.k_mn.shape != (N, N) or A.N != N:
        raise DimensionMismatchError(
            f"kernel {k.k_mn.shape}, operator {A.N}, noise {N} do not agree")
    a = A.a_seq
    knorm = hs_norm(k)
    if not np.min(np.abs(a)) > knorm and not force:
        raise ConditionViolatedError(
            f"need min|a_n| > ||k||, got {np.min(np.abs(a)):.6g} <= {knorm:.6g}")
    system = np.diag(a) - k.k_mn
    w = omega_coeffs.coeffs
    if method == "direct":
        cond = np.linalg.cond(system)
        if not np.isfinite(cond) or cond > 1.0 / np.finfo(float).eps:
            raise SingularSystemError(f"system matrix is numerically singular (cond = {cond:.3g})")
        sigma = np.linalg.solve(system, w)
        iterations = 0
    elif method == "iterative":
        if np.any(a == 0.0):
            raise SingularSystemError("iterative method needs nonzero a_n")
        sigma = w / a
        for iterations in range(1, max_iter + 1):
            new = (k.k_mn @ sigma + w) / a
            step = float(np.linalg.norm(new - sigma))
            sigma = new
            if step < tol * max(1.0, float(np.linalg.norm(sigma))):
                break
        else:
            raise NoConvergenceError(f"coefficient iteration did not converge in {max_iter} steps",
                                     max_iter)
    else:
        raise ValueError(f"unknown method {method!r}; use 'direct' or 'iterative'")
    sol = CoeffFunction(sigma)
    return SolveReport(sol, residual_norm(k, A, sol, omega_coeffs), iterations=iterations,
                       info={"method": f"coefficient-{method}"})


def solve_rank_one_unit(g_coeffs: CoeffFunction, h_coeffs: CoeffFunction,
                        omega_coeffs: CoeffFunction) -> CoeffFunction:
    """``sigma_m = <omega, h>/(1 - <g, h>) g_m + omega_m`` for ``a_n = 1``."""
    if not g_coeffs.N == h_coeffs.N == omega_coeffs.N:
        raise DimensionMismatchError("coefficient sequences have different lengths")
    gh = float(np.dot(g_coeffs.coeffs, h_coeffs.coeffs))
    denom = 1.0 - gh
    if abs(denom) <= SINGULAR_EPS:
        raise DenominatorSingularError(f"1 - <g, h> = {denom:.3g}")
    wh = float(np.dot(omega_coeffs.coeffs, h_coeffs.coeffs))
    return CoeffFunction(wh / denom * g_coeffs.coeffs + omega_coeffs.coeffs)


def moment_check(g: GridFunction, h: GridFunction, lam: float, omega_s: GridFunction,
                 sigma_s: GridFunction) -> Tuple[float, float, bool]:
    """Compare ``<h, sigma>`` with ``<h, omega>/(lam - <g, h>)``."""
    denom = lam - inner_product(g, h)
    if abs(denom) <= SINGULAR_EPS:
        raise DenominatorSingularError(f"lambda - <g, h> = {denom:.3g}")
    lhs = inner_product(h, sigma_s)
    rhs = inner_product(h, omega_s) / denom
    return lhs, rhs, abs(lhs - rhs) < 1e-8 * max(1.0, abs(rhs))


@dataclass
class FamilyReport:
    s_values: List[float]
    reports: List[SolveReport]
    truncated_norms: List[float]
    cut_norm: float

    @property
    def norms_nondecreasing(self) -> bool:
        n = np.asarray(self.truncated_norms)
        return bool(np.all(np.diff(n) >= -1e-15 * max(1.0, float(np.max(n, initial=0.0)))))


def solve_parameterized_family(k: Kernel, lam: float, omega: NoiseFamily, s_grid: Sequence[float],
                               c: float, tol: float = DEFAULT_TOL,
                               max_iter: int = DEFAULT_MAX_ITER,
                               force: bool = False) -> FamilyReport:
    """Solve ``lam sigma(s) = int_a^s k(., v) sigma(s)(v) dv + omega(s)`` over ``s_grid``.

    Each ``s`` uses the kernel truncated at ``v <= s``; every ``s`` must lie
    in ``[c, b]`` and the kernel truncated at ``c`` must be nonzero.
    """
    knorm = hs_norm(k)
    _check_lambda_condition(knorm, lam, force, "parameterized family")
    k_c = truncate_kernel_param(k, c)
    cut_norm = hs_norm(k_c)
    if not cut_norm > 0.0 and not force:
        raise ConditionViolatedError(f"kernel truncated at c = {c} has zero norm")
    b_end = k_c.v_grid.b_end
    s_sorted = sorted(float(s) for s in s_grid)
    reports, norms = [], []
    for s in s_sorted:
        if not c <= s <= b_end:
            raise ParameterOutOfRangeError(f"s = {s} outside [c, b] = [{c}, {b_end}]")
        k_s = truncate_kernel_param(k, s)
        rep = solve_neumann(k_s, lam, omega(s), tol=tol, max_iter=max_iter, force=True)
        rep.info["s"] = s
        reports.append(rep)
        norms.append(hs_norm(k_s))
    return FamilyReport(s_sorted, reports, norms, cut_norm)
