"""Hilbert-Schmidt kernels, integral operators and multiplication operators.

Three kernel representations are supported:

* :class:`TensorKernel` -- ``k(u, v) = g(u) h(v)`` with ``g, h`` on a grid;
* :class:`CoeffKernel` -- coefficients ``k_mn`` against an orthonormal basis;
* :class:`GridKernel` -- samples ``k(u_i, v_j)`` at node pairs, with the
  ``v`` quadrature weights stored separately so they can be masked.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import (
    DimensionMismatchError,
    GridMismatchError,
    ParameterOutOfRangeError,
    RepresentationMismatchError,
)
from .function_space import (
    Basis,
    CoeffFunction,
    GridFunction,
    QuadGrid,
    coeff_expand,
    inner_product,
    l2_norm,
)


@dataclass(frozen=True, eq=False)
class TensorKernel:
    g: GridFunction
    h: GridFunction

    def __post_init__(self):
        if not self.g.grid.same_as(self.h.grid):
            raise GridMismatchError("tensor factors must share a grid")

    @property
    def grid(self) -> QuadGrid:
        return self.g.grid


@dataclass(frozen=True, eq=False)
class CoeffKernel:
    k_mn: np.ndarray
    tail_bound: float = 0.0

    def __post_init__(self):
        k = np.atleast_2d(np.asarray(self.k_mn, dtype=float))
        if k.ndim != 2:
            raise DimensionMismatchError("coefficient kernel must be a matrix")
        if self.tail_bound < 0:
            raise ValueError("tail_bound must be nonnegative")
        object.__setattr__(self, "k_mn", k)
        object.__setattr__(self, "tail_bound", float(self.tail_bound))

    @classmethod
    def rank_one(cls, g: CoeffFunction, h: CoeffFunction, tail_bound: Optional[float] = None):
        """``k_mn = g_m h_n``; the default tail comes from the factors' tails."""
        k = np.outer(g.coeffs, h.coeffs)
        if tail_bound is None:
            full_sq = (g.norm() ** 2 + g.tail_bound ** 2) * (h.norm() ** 2 + h.tail_bound ** 2)
            tail_bound = np.sqrt(max(full_sq - float(np.sum(k * k)), 0.0))
        return cls(k, tail_bound)


@dataclass(frozen=True, eq=False)
class GridKernel:
    u_grid: QuadGrid
    v_grid: QuadGrid
    values: np.ndarray
    v_weights: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.u_grid.size, self.v_grid.size):
            raise GridMismatchError(
                f"samples have shape {values.shape}, expected "
                f"({self.u_grid.size}, {self.v_grid.size})")
        w = self.v_grid.weights if self.v_weights is None else np.asarray(self.v_weights, float)
        if w.shape != (self.v_grid.size,):
            raise GridMismatchError("v_weights length does not match the v grid")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "v_weights", w)

    @classmethod
    def from_function(cls, grid: QuadGrid, fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
                      v_grid: Optional[QuadGrid] = None) -> "GridKernel":
        v_grid = grid if v_grid is None else v_grid
        uu, vv = np.meshgrid(grid.nodes, v_grid.nodes, indexing="ij")
        values = np.broadcast_to(np.asarray(fn(uu, vv), dtype=float), uu.shape)
        return cls(grid, v_grid, np.array(values))

    @classmethod
    def from_tensor(cls, k: TensorKernel) -> "GridKernel":
        return cls(k.grid, k.grid, np.outer(k.g.values, k.h.values))


Kernel = Union[TensorKernel, CoeffKernel, GridKernel]


@dataclass(frozen=True, eq=False)
class MultiplicationOperator:
    """Scales the ``n``-th basis coefficient by ``a_seq[n-1]``."""

    a_seq: np.ndarray
    analytic_inf: Optional[float] = None
    analytic_sup: Optional[float] = None

    def __post_init__(self):
        a = np.asarray(self.a_seq, dtype=float).ravel()
        if a.size < 1 or not np.all(np.isfinite(a)):
            raise ValueError("a_seq must be a nonempty finite sequence")
        if self.analytic_sup is not None and np.max(np.abs(a)) > self.analytic_sup + 1e-12:
            raise ValueError("entries exceed the declared analytic supremum")
        object.__setattr__(self, "a_seq", a)

    @property
    def N(self) -> int:
        return self.a_seq.size


def hs_norm(k: Kernel) -> float:
    """Hilbert-Schmidt norm of the kernel as represented.

    Tensor kernels give ``||g|| ||h||``, coefficient kernels the Frobenius
    norm of the stored window (the tail is not included), grid kernels the
    tensorised double quadrature of ``k^2``.
    """
    if isinstance(k, TensorKernel):
        return l2_norm(k.g) * l2_norm(k.h)
    if isinstance(k, CoeffKernel):
        return float(np.sqrt(np.sum(k.k_mn * k.k_mn)))
    if isinstance(k, GridKernel):
        sq = k.u_grid.weights @ (k.values * k.values) @ k.v_weights
        return float(np.sqrt(max(sq, 0.0)))
    raise RepresentationMismatchError(f"not a kernel: {type(k).__name__}")


def hs_norm_upper(k: Kernel) -> float:
    """``hs_norm`` widened by the declared truncation tail."""
    tail = k.tail_bound if isinstance(k, CoeffKernel) else 0.0
    return float(np.hypot(hs_norm(k), tail))


def op_norm_bound(k: Kernel) -> float:
    """Upper bound on the induced operator norm: the Hilbert-Schmidt norm."""
    return hs_norm(k)


def apply_kernel(k: Kernel, f):
    """``(Kf)(u) = int k(u, v) f(v) dv`` in the representation of ``f``."""
    if isinstance(k, CoeffKernel):
        if not isinstance(f, CoeffFunction):
            raise RepresentationMismatchError("coefficient kernels act on CoeffFunction")
        if f.N != k.k_mn.shape[1]:
            raise DimensionMismatchError(
                f"kernel has {k.k_mn.shape[1]} columns, function has {f.N} coefficients")
        return CoeffFunction(k.k_mn @ f.coeffs)
    if not isinstance(f, GridFunction):
        raise RepresentationMismatchError("tensor and grid kernels act on GridFunction")
    if isinstance(k, TensorKernel):
        return k.g * inner_product(k.h, f)
    if isinstance(k, GridKernel):
        if not f.grid.same_as(k.v_grid):
            raise GridMismatchError("function does not live on the kernel's v grid")
        return GridFunction(k.u_grid, k.values @ (k.v_weights * f.values))
    raise RepresentationMismatchError(f"not a kernel: {type(k).__name__}")


def kernel_matrix(k: Kernel) -> np.ndarray:
    """Dense matrix of the discretised operator (Nystroem matrix for grid kernels).

    Built from the kernel samples directly, so it gives a code path for
    ``Kf`` that is independent of :func:`apply_kernel`.
    """
    if isinstance(k, CoeffKernel):
        return k.k_mn.copy()
    if isinstance(k, TensorKernel):
        return np.outer(k.g.values, k.h.values * k.grid.weights)
    if isinstance(k, GridKernel):
        return k.values * k.v_weights[None, :]
    raise RepresentationMismatchError(f"not a kernel: {type(k).__name__}")


def kernel_grid(k: Kernel) -> QuadGrid:
    if isinstance(k, TensorKernel):
        return k.grid
    if isinstance(k, GridKernel):
        return k.u_grid
    raise RepresentationMismatchError("coefficient kernels carry no grid")


def scale_kernel(k: Kernel, c: float) -> Kernel:
    if isinstance(k, TensorKernel):
        return TensorKernel(k.g * c, k.h)
    if isinstance(k, CoeffKernel):
        return CoeffKernel(c * k.k_mn, abs(c) * k.tail_bound)
    return GridKernel(k.u_grid, k.v_grid, c * k.values, k.v_weights)


def tensor_to_coeff(k: TensorKernel, basis: Basis, N: Optional[int] = None) -> CoeffKernel:
    """Expand both factors against ``basis``: ``k_mn = g_m h_n``."""
    g = coeff_expand(k.g, basis, N)
    h = coeff_expand(k.h, basis, N)
    return CoeffKernel.rank_one(g, h)


def mult_apply(A: MultiplicationOperator, f: CoeffFunction) -> CoeffFunction:
    if f.N != A.N:
        raise DimensionMismatchError(f"operator has {A.N} entries, function has {f.N}")
    return CoeffFunction(A.a_seq * f.coeffs, float(np.max(np.abs(A.a_seq))) * f.tail_bound)


@dataclass(frozen=True)
class MultCovering:
    covering: float
    op_norm: float
    sup_le_one: bool
    N: int
    analytic_inf: Optional[float] = None

    def __float__(self):
        return self.covering


def mult_covering_constant(A: MultiplicationOperator) -> MultCovering:
    """Truncated covering constant ``min |a_n|`` with ``||A||_op = max |a_n|``."""
    mags = np.abs(A.a_seq)
    op = float(mags.max())
    return MultCovering(float(mags.min()), op, op <= 1.0, A.N, A.analytic_inf)


def truncate_kernel_param(k: Kernel, s: float) -> GridKernel:
    """``k_s(u, v) = k(u, v) [v <= s]`` realised by zeroing ``v`` weights beyond ``s``.

    Nodes never move, so solutions for different ``s`` share a grid.  When
    ``s`` falls inside a panel the cut costs an O(panel width) quadrature
    error relative to the exact truncated integral.
    """
    if isinstance(k, TensorKernel):
        k = GridKernel.from_tensor(k)
    if not isinstance(k, GridKernel):
        raise RepresentationMismatchError("truncation needs a tensor or grid kernel")
    if not k.v_grid.a_end <= s <= k.v_grid.b_end:
        raise ParameterOutOfRangeError(
            f"s = {s} outside [{k.v_grid.a_end}, {k.v_grid.b_end}]")
    w = np.where(k.v_grid.nodes <= s, k.v_weights, 0.0)
    return GridKernel(k.u_grid, k.v_grid, k.values, w)


def cut_quadrature_error(k: GridKernel, s: float) -> float:
    """Width of the panel split by ``s`` (0 when ``s`` is a panel break)."""
    edges = k.v_grid.breakpoints
    if np.any(np.isclose(edges, s, rtol=0.0, atol=1e-14)):
        return 0.0
    return float(edges[1] - edges[0])
