"""Hypothesis checks, a-posteriori bounds and a sampled planar covering-rate bracket."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .diagnostics import BoundCheck, ConditionDiagnostic, chain_diagnostic
from .errors import AlphaOutOfRangeError, DegenerateMapError, RepresentationMismatchError
from .function_space import CoeffFunction, GridFunction, l2_norm
from .kernel_operators import (
    CoeffKernel,
    Kernel,
    MultiplicationOperator,
    apply_kernel,
    hs_norm,
    hs_norm_upper,
    mult_apply,
    mult_covering_constant,
)


def scalar_identity_covering(lam: float) -> float:
    """Covering constant ``|lam|`` of ``lam * I``; stated for ``|lam| <= 1``."""
    if abs(lam) > 1.0:
        warnings.warn(f"|lambda| = {abs(lam):.6g} > 1 is outside the hypothesis of the "
                      "scalar covering formula", stacklevel=2)
    return abs(float(lam))


def check_conditions_kernel(k: Kernel, lam: float) -> ConditionDiagnostic:
    """``0 < ||k|| < |lam| <= 1`` with covering constant ``|lam|``."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cov = scalar_identity_covering(lam)
    return chain_diagnostic(
        hs_norm_upper(k), cov, abs(lam),
        details={"lambda": float(lam), "hs_norm": hs_norm(k)},
        labels={"operator norm > 1": "|lambda| > 1", "covering constant = 0": "lambda = 0"},
    )


def check_conditions_coefficient(A: MultiplicationOperator, k: CoeffKernel) -> ConditionDiagnostic:
    """``0 < ||k|| < inf|a_n| <= sup|a_n| <= 1`` on the truncation.

    The modulus includes the kernel's declared tail so that truncation can
    only make the check stricter.
    """
    cov = mult_covering_constant(A)
    return chain_diagnostic(
        hs_norm_upper(k), cov.covering, cov.op_norm,
        details={"hs_norm": hs_norm(k), "tail_bound": k.tail_bound, "N": A.N,
                 "analytic_inf": A.analytic_inf},
        labels={"operator norm > 1": "sup|a_n| > 1", "covering constant = 0": "inf|a_n| = 0"},
    )


def _check_alpha(knorm: float, alpha: float, upper: float):
    if not knorm < alpha < upper:
        raise AlphaOutOfRangeError(
            f"alpha = {alpha:.6g} must lie strictly between {knorm:.6g} and {upper:.6g}")


def error_bound_rhs(k: Kernel, lam: float, omega_s: GridFunction, anchor_f: GridFunction,
                    alpha: float) -> float:
    """``||K f + omega - lam f|| / (alpha - ||k||)`` for ``||k|| < alpha < |lam|``."""
    if isinstance(k, CoeffKernel):
        raise RepresentationMismatchError("use error_bound_rhs_coeff for coefficient kernels")
    knorm = hs_norm(k)
    _check_alpha(knorm, alpha, abs(lam))
    r = apply_kernel(k, anchor_f) + omega_s - anchor_f * lam
    return l2_norm(r) / (alpha - knorm)


def error_bound_rhs_coeff(A: MultiplicationOperator, k: CoeffKernel, omega_s: CoeffFunction,
                          anchor_f: CoeffFunction, alpha: float) -> float:
    """Coefficient version: ``sqrt(sum_m (sum_n k_mn f_n + omega_m - a_m f_m)^2) / (alpha - ||k||)``."""
    knorm = hs_norm(k)
    _check_alpha(knorm, alpha, mult_covering_constant(A).covering)
    r = apply_kernel(k, anchor_f).coeffs + omega_s.coeffs - mult_apply(A, anchor_f).coeffs
    return float(np.sqrt(np.dot(r, r))) / (alpha - knorm)


def evaluate_bounds(k: Kernel, lam, omega_s, sigma_s, anchors: Sequence[Tuple[str, object]],
                    alpha: float, tol: float = 1e-12) -> list:
    """Bound checks ``||sigma - f|| <= rhs`` for every named anchor ``f``."""
    checks = []
    for name, f in anchors:
        if isinstance(sigma_s, CoeffFunction):
            lhs = (sigma_s - f).norm()
            rhs = error_bound_rhs_coeff(lam, k, omega_s, f, alpha)
        else:
            lhs = l2_norm(sigma_s - f)
            rhs = error_bound_rhs(k, lam, omega_s, f, alpha)
        checks.append(BoundCheck(name, float(alpha), float(lhs), float(rhs), lhs <= rhs + tol))
    return checks


@dataclass(frozen=True)
class CoveringRateEstimate:
    center: Tuple[float, float]
    radii: Tuple[float, ...]
    alpha_lower: float
    alpha_upper: float
    grid_resolution: Tuple[int, int]
    covered_radius: float = 0.0
    margin: float = 0.0
    degenerate: bool = False

    @property
    def width(self) -> float:
        return self.alpha_upper - self.alpha_lower


def _ball_samples(center, r, n_rad, n_ang):
    radii = np.linspace(0.0, r, n_rad + 1)
    # half-cell stagger on alternate rings keeps angular gaps from lining up
    offsets = 0.5 * (np.arange(n_rad + 1) % 2)[:, None]
    ang = 2.0 * np.pi * (np.arange(n_ang)[None, :] + offsets) / n_ang
    x = center[0] + radii[:, None] * np.cos(ang)
    y = center[1] + radii[:, None] * np.sin(ang)
    return x.ravel(), y.ravel()


def covering_rate_estimate(map2d: Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]],
                           center=(0.0, 0.0), r: float = 1.0,
                           resolution: Tuple[int, int] = (400, 400),
                           oversample: int = 4, strict: bool = False) -> CoveringRateEstimate:
    """Bracket the covering rate of a planar map on the ball ``B(center, r)``.

    ``map2d(x, y)`` is vectorised and returns the image coordinates.  The
    ball is sampled on a polar grid ``oversample`` times finer than the
    ``(radial, angular)`` occupancy grid that is laid around the image of
    the center.  The covered radius is the outer edge of the last ring whose
    bins are all occupied; the bracket is that radius plus or minus one bin
    diagonal, divided by ``r``.

    A map whose image collapses below one bin gives a zero estimate flagged
    ``degenerate`` (or :class:`DegenerateMapError` with ``strict``).
    """
    if r <= 0:
        raise ValueError("r must be positive")
    n_rad, n_ang = int(resolution[0]), int(resolution[1])
    if n_rad < 64 or n_ang < 64:
        raise ValueError("resolution must be at least 64 per axis")
    cx, cy = float(center[0]), float(center[1])
    x, y = _ball_samples((cx, cy), r, oversample * n_rad, oversample * n_ang)
    fx, fy = map2d(x, y)
    f0x, f0y = map2d(np.array([cx]), np.array([cy]))
    dx = np.asarray(fx, dtype=float) - float(np.asarray(f0x).ravel()[0])
    dy = np.asarray(fy, dtype=float) - float(np.asarray(f0y).ravel()[0])
    rho = np.hypot(dx, dy)
    rho_max = float(rho.max())
    if rho_max <= 1e-12 * r:
        if strict:
            raise DegenerateMapError("image of the ball collapses to a point")
        return CoveringRateEstimate((cx, cy), (r,), 0.0, 0.0, (n_rad, n_ang), degenerate=True)

    d_rho = rho_max / n_rad
    d_theta = 2.0 * np.pi / n_ang
    ring = np.minimum((rho / d_rho).astype(np.int64), n_rad - 1)
    theta = np.mod(np.arctan2(dy, dx), 2.0 * np.pi)
    sector = np.minimum((theta / d_theta).astype(np.int64), n_ang - 1)
    occupied = np.zeros((n_rad, n_ang), dtype=bool)
    occupied[ring, sector] = True
    full = occupied.all(axis=1)
    n_full = n_rad if full.all() else int(np.argmin(full))
    covered = n_full * d_rho
    margin = float(np.hypot(d_rho, max(covered, d_rho) * d_theta))
    return CoveringRateEstimate(
        center=(cx, cy), radii=(r,),
        alpha_lower=max(covered - margin, 0.0) / r,
        alpha_upper=(covered + margin) / r,
        grid_resolution=(n_rad, n_ang),
        covered_radius=covered, margin=margin,
    )


def covering_rate_over_radii(map2d, center=(0.0, 0.0), radii=(0.5, 1.0),
                             resolution=(400, 400)) -> CoveringRateEstimate:
    """Intersect the brackets obtained at several radii (the widest envelope)."""
    ests = [covering_rate_estimate(map2d, center, r, resolution) for r in radii]
    return CoveringRateEstimate(
        center=ests[0].center, radii=tuple(float(r) for r in radii),
        alpha_lower=min(e.alpha_lower for e in ests),
        alpha_upper=max(e.alpha_upper for e in ests),
        grid_resolution=ests[0].grid_resolution,
        covered_radius=min(e.covered_radius for e in ests),
        margin=max(e.margin for e in ests),
        degenerate=any(e.degenerate for e in ests),
    )


def angle_doubling_map(x, y):
    """``(x1^2 - x2^2, 2 x1 x2) / |x|`` with the origin fixed."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.hypot(x, y)
    safe = np.where(r > 0, r, 1.0)
    return np.where(r > 0, (x * x - y * y) / safe, 0.0), np.where(r > 0, 2 * x * y / safe, 0.0)
