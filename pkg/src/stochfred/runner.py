"""Turn a :class:`ProblemConfig` into solves, bound checks and reports."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .amz_verification import (
    check_conditions_coefficient,
    check_conditions_kernel,
    evaluate_bounds,
)
from .config import ProblemConfig, serialize
from .diagnostics import ConditionDiagnostic
from .errors import ConditionViolatedError, StochFredError
from .function_space import CoeffFunction, GridFunction, QuadGrid, l2_norm, make_grid
from .kernel_operators import (
    CoeffKernel,
    GridKernel,
    MultiplicationOperator,
    TensorKernel,
)
from .solvers import (
    NoiseFamily,
    SolveReport,
    residual_norm,
    solve_coefficient_system,
    solve_neumann,
    solve_parameterized_family,
    solve_rank_one_unit,
    solve_tensor_closed_form,
)

CSV_HEADER = ("s", "residual", "solution_norm", "iterations", "bound_checks_passed",
              "bound_checks_total")


@dataclass
class Problem:
    """Numerical objects built from a config."""

    lam: float
    kernel: object
    omega: NoiseFamily
    grid: Optional[QuadGrid] = None
    mult: Optional[MultiplicationOperator] = None
    g_coeffs: Optional[CoeffFunction] = None
    h_coeffs: Optional[CoeffFunction] = None


@dataclass
class RunRow:
    s: float
    residual: float
    solution_norm: float
    iterations: int
    bound_passed: int
    bound_total: int
    flagged: bool = False
    error: Optional[str] = None


@dataclass
class RunReport:
    rows: List[RunRow]
    condition: ConditionDiagnostic
    seed: Optional[int]
    config_text: str
    timing: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return not any(r.flagged for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([format(r.s, ".17g"), format(r.residual, ".17g"),
                        format(r.solution_norm, ".17g"), r.iterations, r.bound_passed,
                        r.bound_total])
        return buf.getvalue()

    def table(self) -> str:
        lines = [self.condition.summary()]
        if self.seed is not None:
            lines.append(f"seed: {self.seed}")
        lines.append(f"{'s':>12} {'residual':>12} {'||sigma||':>14} {'iter':>6} {'bounds':>8}  flag")
        for r in self.rows:
            flag = "FAIL" if r.flagged else "ok"
            if r.error:
                flag += f" ({r.error})"
            lines.append(f"{r.s:12.6g} {r.residual:12.3e} {r.solution_norm:14.8g} "
                         f"{r.iterations:6d} {r.bound_passed:>3d}/{r.bound_total:<3d}  {flag}")
        lines.append(f"rows: {len(self.rows)}, failed: {sum(r.flagged for r in self.rows)}")
        return "\n".join(lines)


def sample_parameters(cfg: ProblemConfig) -> np.ndarray:
    sw = cfg.sweep
    if sw.mode == "list":
        s = np.array(sw.values, dtype=float)
    elif sw.mode == "grid":
        s = np.linspace(sw.interval[0], sw.interval[1], sw.points)
    else:
        s = np.random.default_rng(sw.seed).uniform(sw.interval[0], sw.interval[1], sw.points)
    return np.sort(s)


def build_problem(cfg: ProblemConfig) -> Problem:
    k = cfg.kernel
    if cfg.sweep.mode == "list":
        s_lo, s_hi = min(cfg.sweep.values), max(cfg.sweep.values)
    else:
        s_lo, s_hi = cfg.sweep.interval
    if k.type == "coeff":
        n = np.arange(1, k.N + 1, dtype=float)
        a = np.broadcast_to(k.a(n=n), n.shape) if k.a is not None else np.ones(k.N)
        mult = MultiplicationOperator(np.array(a, dtype=float))
        if k.expr is not None:
            mm, nn = np.meshgrid(n, n, indexing="ij")
            kernel = CoeffKernel(np.broadcast_to(k.expr(m=mm, n=nn), mm.shape).copy(), k.tail)
            gc = hc = None
        else:
            gc = CoeffFunction(np.broadcast_to(k.g(n=n), n.shape).copy())
            hc = CoeffFunction(np.broadcast_to(k.h(n=n), n.shape).copy())
            kernel = CoeffKernel(np.outer(gc.coeffs, hc.coeffs), k.tail)
        omega = NoiseFamily(
            lambda s: CoeffFunction(np.broadcast_to(cfg.omega(s=s, n=n), n.shape).copy()),
            (s_lo, s_hi))
        return Problem(cfg.lam, kernel, omega, mult=mult, g_coeffs=gc, h_coeffs=hc)

    grid = make_grid(cfg.domain[0], cfg.domain[1], cfg.panels, cfg.rule)
    x = grid.nodes
    if k.type == "tensor":
        kernel = TensorKernel(GridFunction(grid, np.broadcast_to(k.g(x=x), x.shape).copy()),
                              GridFunction(grid, np.broadcast_to(k.h(x=x), x.shape).copy()))
    else:
        kernel = GridKernel.from_function(grid, k.expr.bivariate)
    omega = NoiseFamily(
        lambda s: GridFunction(grid, np.broadcast_to(cfg.omega(x=x, s=s), x.shape).copy()),
        (s_lo, s_hi))
    return Problem(cfg.lam, kernel, omega, grid=grid)


def check_problem(cfg: ProblemConfig, problem: Optional[Problem] = None) -> ConditionDiagnostic:
    problem = problem or build_problem(cfg)
    if cfg.kernel.type == "coeff":
        return check_conditions_coefficient(problem.mult, problem.kernel)
    return check_conditions_kernel(problem.kernel, cfg.lam)


def _anchor_values(cfg: ProblemConfig, problem: Problem, s: float):
    out = []
    for i, a in enumerate(cfg.anchors):
        if problem.grid is not None:
            x = problem.grid.nodes
            out.append((f"anchor{i}", GridFunction(problem.grid,
                                                   np.broadcast_to(a(x=x, s=s), x.shape).copy())))
        else:
            n = np.arange(1, cfg.kernel.N + 1, dtype=float)
            out.append((f"anchor{i}", CoeffFunction(np.broadcast_to(a(n=n, s=s), n.shape).copy())))
    return out


def _solve_one(cfg: ProblemConfig, problem: Problem, s: float) -> SolveReport:
    so = cfg.solver
    omega_s = problem.omega(s)
    if so.method == "closed_form":
        return solve_tensor_closed_form(problem.kernel.g, problem.kernel.h, cfg.lam, omega_s,
                                        force=so.force)
    if so.method == "neumann":
        return solve_neumann(problem.kernel, cfg.lam, omega_s, so.tol, so.max_iter, so.force)
    if so.method in ("coefficient", "coefficient_iterative"):
        method = "direct" if so.method == "coefficient" else "iterative"
        return solve_coefficient_system(problem.mult, problem.kernel, omega_s, method, so.tol,
                                        so.max_iter, so.force)
    if so.method == "rank_one":
        if problem.g_coeffs is None or not np.all(problem.mult.a_seq == 1.0):
            raise ConditionViolatedError("rank_one needs a rank-one kernel given by g, h and a = 1")
        sol = solve_rank_one_unit(problem.g_coeffs, problem.h_coeffs, omega_s)
        return SolveReport(sol, residual_norm(problem.kernel, problem.mult, sol, omega_s))
    raise ValueError(f"method {so.method!r} is not a single-solve method")


def _norm(f) -> float:
    return f.norm() if isinstance(f, CoeffFunction) else l2_norm(f)


def run_problem(cfg: ProblemConfig) -> RunReport:
    """Solve at every sampled ``s``, recompute residuals and evaluate bounds.

    Raises :class:`ConditionViolatedError` before any solve when the
    hypotheses fail and ``force`` is off.  With ``force`` the rows are still
    computed but no bound checks are made, since the bound is not guaranteed.
    """
    t0 = time.perf_counter()
    problem = build_problem(cfg)
    diag = check_problem(cfg, problem)
    if not diag.passes and not cfg.solver.force:
        raise ConditionViolatedError("conditions fail: " + "; ".join(diag.reasons), diag)
    alpha = cfg.alpha if cfg.alpha is not None else diag.midpoint_alpha()
    bound_op = problem.mult if problem.mult is not None else cfg.lam
    s_values = sample_parameters(cfg)
    rows: List[RunRow] = []

    if cfg.solver.method == "family":
        fam = solve_parameterized_family(problem.kernel, cfg.lam, problem.omega, s_values,
                                         cfg.solver.cut, cfg.solver.tol, cfg.solver.max_iter,
                                         force=cfg.solver.force)
        extra = {"truncated_norms": fam.truncated_norms,
                 "norms_nondecreasing": fam.norms_nondecreasing, "cut_norm": fam.cut_norm}
        for s, rep in zip(fam.s_values, fam.reports):
            rows.append(_row(cfg, problem, s, rep, None, bound_op, None))
    else:
        extra = {}
        for s in s_values:
            s = float(s)
            try:
                rep = _solve_one(cfg, problem, s)
            except StochFredError as exc:
                rows.append(RunRow(s, float("nan"), float("nan"), 0, 0, len(cfg.anchors),
                                   flagged=True, error=type(exc).__name__))
                continue
            rows.append(_row(cfg, problem, s, rep, diag if diag.passes else None, bound_op, alpha))
    rows.sort(key=lambda r: r.s)
    seed = cfg.sweep.seed if cfg.sweep.mode == "random" else None
    return RunReport(rows, diag, seed, serialize(cfg), time.perf_counter() - t0, extra)


def _row(cfg, problem, s, rep, diag, bound_op, alpha) -> RunRow:
    checks = []
    if diag is not None and alpha is not None and cfg.anchors:
        checks = evaluate_bounds(problem.kernel, bound_op, problem.omega(s), rep.solution,
                                 _anchor_values(cfg, problem, s), alpha)
        rep.bound_checks = checks
    passed = sum(c.passed for c in checks)
    flagged = not rep.residual_norm < cfg.solver.residual_tol or passed < len(checks)
    return RunRow(s, rep.residual_norm, _norm(rep.solution), rep.iterations, passed, len(checks),
                  flagged)
