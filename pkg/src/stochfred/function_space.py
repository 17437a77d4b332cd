"""Quadrature grids and square-integrable functions on an interval.

Functions live in two representations: values at the nodes of a composite
Gauss-Legendre grid (:class:`GridFunction`), or a truncated coefficient
sequence with respect to an orthonormal basis (:class:`CoeffFunction`).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import legendre as npleg

from .errors import (
    DimensionMismatchError,
    GridMismatchError,
    InsufficientBasisError,
    InvalidIntervalError,
)

DEFAULT_PANELS = 8
DEFAULT_ORDER = 8
DEFAULT_RULE = f"gauss-legendre-{DEFAULT_ORDER}"
DEFAULT_TRUNCATION = 64

_RULE_RE = re.compile(r"^gauss-legendre-(\d+)$")


@dataclass(frozen=True, eq=False)
class QuadGrid:
    """Composite quadrature rule on ``[a_end, b_end]``.

    ``exactness_degree`` is the highest polynomial degree integrated exactly
    on every panel (``2m - 1`` for an ``m``-point Gauss-Legendre rule).
    """

    a_end: float
    b_end: float
    nodes: np.ndarray
    weights: np.ndarray
    rule: str = DEFAULT_RULE
    panels: int = DEFAULT_PANELS
    exactness_degree: int = 2 * DEFAULT_ORDER - 1

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def length(self) -> float:
        return self.b_end - self.a_end

    @property
    def breakpoints(self) -> np.ndarray:
        return np.linspace(self.a_end, self.b_end, self.panels + 1)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, np.asarray(values, dtype=float)))

    def function(self, fn: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        """Sample a vectorised callable at the nodes."""
        values = np.broadcast_to(np.asarray(fn(self.nodes), dtype=float), self.nodes.shape)
        return GridFunction(self, np.array(values))

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.size))

    def same_as(self, other: "QuadGrid") -> bool:
        if self is other:
            return True
        return (
            self.a_end == other.a_end
            and self.b_end == other.b_end
            and np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.weights, other.weights)
        )


def parse_rule(rule: str) -> int:
    match = _RULE_RE.match(rule.strip().lower())
    if match is None:
        raise ValueError(f"unsupported quadrature rule {rule!r}; expected 'gauss-legendre-<m>'")
    order = int(match.group(1))
    if order < 1:
        raise ValueError("quadrature order must be at least 1")
    return order


def make_grid(a_end: float, b_end: float, panels: int = DEFAULT_PANELS,
              rule: str = DEFAULT_RULE) -> QuadGrid:
    """Build a composite Gauss-Legendre grid with ``panels`` equal panels.

    >>> g = make_grid(-1.0, 1.0, 8, "gauss-legendre-8")
    >>> g.size, round(g.weights.sum(), 12)
    (64, 2.0)
    """
    a_end, b_end = float(a_end), float(b_end)
    if not (np.isfinite(a_end) and np.isfinite(b_end)) or a_end >= b_end:
        raise InvalidIntervalError(f"need a_end < b_end, got [{a_end}, {b_end}]")
    if panels < 1:
        raise ValueError("panels must be >= 1")
    order = parse_rule(rule)
    ref_nodes, ref_weights = npleg.leggauss(order)
    edges = np.linspace(a_end, b_end, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * ref_nodes[None, :]).ravel()
    weights = (half[:, None] * ref_weights[None, :]).ravel()
    return QuadGrid(a_end, b_end, nodes, weights, rule=f"gauss-legendre-{order}",
                    panels=panels, exactness_degree=2 * order - 1)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values of a function at the nodes of ``grid``."""

    grid: QuadGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.size,):
            raise GridMismatchError(
                f"expected {self.grid.size} values, got shape {values.shape}")
        object.__setattr__(self, "values", values)

    def _check(self, other: "GridFunction"):
        if not self.grid.same_as(other.grid):
            raise GridMismatchError("functions live on different grids")

    def __add__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return GridFunction(self.grid, self.values + other.values)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return GridFunction(self.grid, self.values - other.values)
        return NotImplemented

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            return GridFunction(self.grid, float(scalar) * self.values)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __truediv__(self, scalar):
        if np.isscalar(scalar):
            return GridFunction(self.grid, self.values / float(scalar))
        return NotImplemented

    def norm(self) -> float:
        return l2_norm(self)


@dataclass(frozen=True, eq=False)
class CoeffFunction:
    """Truncated coefficient sequence; ``coeffs[0]`` is the first basis coefficient.

    ``tail_bound`` bounds the l2 norm of the omitted coefficients.
    """

    coeffs: np.ndarray
    tail_bound: float = 0.0

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float).ravel()
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coefficients must be finite")
        if self.tail_bound < 0:
            raise ValueError("tail_bound must be nonnegative")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "tail_bound", float(self.tail_bound))

    def __len__(self):
        return self.coeffs.size

    @property
    def N(self) -> int:
        return self.coeffs.size

    def norm(self) -> float:
        """sqrt of the squared sum of the stored coefficients."""
        return float(np.sqrt(np.dot(self.coeffs, self.coeffs)))

    def _check(self, other: "CoeffFunction"):
        if other.N != self.N:
            raise DimensionMismatchError(f"lengths differ: {self.N} vs {other.N}")

    def __add__(self, other):
        if isinstance(other, CoeffFunction):
            self._check(other)
            return CoeffFunction(self.coeffs + other.coeffs, self.tail_bound + other.tail_bound)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, CoeffFunction):
            self._check(other)
            return CoeffFunction(self.coeffs - other.coeffs, self.tail_bound + other.tail_bound)
        return NotImplemented

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            return CoeffFunction(float(scalar) * self.coeffs, abs(float(scalar)) * self.tail_bound)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return CoeffFunction(-self.coeffs, self.tail_bound)

    def __truediv__(self, scalar):
        if np.isscalar(scalar):
            return self * (1.0 / float(scalar))
        return NotImplemented


@dataclass(frozen=True, eq=False)
class Basis:
    """Orthonormal family ``e_1..e_N`` realised on a grid, or an abstract marker.

    An abstract basis has no grid; coefficients built against it can be
    manipulated but never synthesised into values.
    """

    grid: Optional[QuadGrid] = None
    functions: Optional[np.ndarray] = field(default=None)  # shape (N, nodes)

    @classmethod
    def abstract(cls) -> "Basis":
        return cls()

    @property
    def is_abstract(self) -> bool:
        return self.functions is None

    @property
    def size(self) -> int:
        return 0 if self.functions is None else self.functions.shape[0]

    def member(self, n: int) -> GridFunction:
        """Basis function ``e_n`` with 1-based ``n``."""
        self._require(n)
        return GridFunction(self.grid, self.functions[n - 1])

    def gram(self) -> np.ndarray:
        self._require(1)
        e = self.functions
        return (e * self.grid.weights) @ e.T

    def _require(self, n: int):
        if self.is_abstract:
            raise InsufficientBasisError("abstract basis has no realisation on a grid")
        if n > self.size:
            raise InsufficientBasisError(f"basis has {self.size} members, need {n}")


def legendre_basis(grid: QuadGrid, N: int = DEFAULT_TRUNCATION) -> Basis:
    """Normalised Legendre polynomials on ``[a_end, b_end]``, orthonormal on ``grid``.

    Low degrees coincide with the analytic normalised Legendre polynomials.
    High degrees exceed the composite rule's exactness, so the family is
    re-orthonormalised in the discrete inner product (Householder QR of the
    weighted Vandermonde matrix); column signs follow the Legendre ones.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if N > grid.size:
        raise InsufficientBasisError(
            f"a grid with {grid.size} nodes supports at most {grid.size} orthonormal functions")
    t = (2.0 * grid.nodes - (grid.a_end + grid.b_end)) / grid.length
    vander = npleg.legvander(t, N - 1)
    vander *= np.sqrt((2.0 * np.arange(N) + 1.0) / grid.length)
    sw = np.sqrt(grid.weights)
    q, r = np.linalg.qr(sw[:, None] * vander)
    q *= np.sign(np.diag(r))
    functions = (q / sw[:, None]).T
    functions.setflags(write=False)
    return Basis(grid, functions)


def _check_same_grid(f: GridFunction, g: GridFunction):
    if not f.grid.same_as(g.grid):
        raise GridMismatchError("functions live on different grids")


def inner_product(f: GridFunction, g: GridFunction) -> float:
    """Quadrature value of the L2 inner product, ``sum_i w_i f_i g_i``."""
    _check_same_grid(f, g)
    return float(np.dot(f.grid.weights * f.values, g.values))


def l2_norm(f: GridFunction) -> float:
    return float(np.sqrt(max(inner_product(f, f), 0.0)))


def coeff_expand(f: GridFunction, basis: Basis, N: Optional[int] = None) -> CoeffFunction:
    """Coefficients ``<f, e_n>`` for ``n = 1..N`` plus a Bessel tail bound."""
    if basis.is_abstract:
        raise InsufficientBasisError("cannot expand against an abstract basis")
    N = basis.size if N is None else N
    basis._require(N)
    if not f.grid.same_as(basis.grid):
        raise GridMismatchError("function and basis live on different grids")
    coeffs = basis.functions[:N] @ (f.grid.weights * f.values)
    tail_sq = l2_norm(f) ** 2 - float(np.dot(coeffs, coeffs))
    return CoeffFunction(coeffs, np.sqrt(max(tail_sq, 0.0)))


def coeff_synth(c: CoeffFunction, basis: Basis) -> GridFunction:
    """Pointwise sum ``sum_n c_n e_n`` on the basis grid."""
    basis._require(c.N)
    return GridFunction(basis.grid, c.coeffs @ basis.functions[:c.N])
