"""Quadrature grids, grid-sampled functions and discretized integral operators.

Everything downstream (dictionaries, inverse images, estimators) lives on
these objects.  A :class:`Grid` carries composite trapezoid weights, a
:class:`GridFunction` is a vector of samples, and a :class:`DiscreteOperator`
is a dense matrix that already absorbs the domain quadrature weights, so that
``apply`` is a plain matrix-vector product and the adjoint is the weighted
transpose.  Defining the adjoint as the exact weighted transpose (rather than
re-discretizing the adjoint kernel) makes the discrete duality

    <Q f, u> = <f, Q* u>

hold to rounding error, which in turn makes the inverse-image systems solvable
exactly at the discrete level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grid:
    """A 1-D quadrature grid on [a, b] with strictly increasing nodes.

    Attributes
    ----------
    a, b : float
        Domain endpoints, ``b > a``.
    nodes : ndarray of shape (n_nodes,)
        Strictly increasing nodes with ``nodes[0] == a``, ``nodes[-1] == b``.
    weights : ndarray of shape (n_nodes,)
        Positive quadrature weights summing to ``b - a``.
    """

    a: float
    b: float
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if self.b <= self.a:
            raise ValueError(f"domain endpoints must satisfy b > a, got [{self.a}, {self.b}]")
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("a grid needs at least two nodes")
        if weights.shape != nodes.shape:
            raise ValueError("weights and nodes must have the same length")
        if not (nodes[0] == self.a and nodes[-1] == self.b):
            raise ValueError("nodes must start at a and end at b")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be positive")
        nodes.setflags(write=False)
        weights.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return self.nodes.size

    @property
    def length(self) -> float:
        """Domain length T = b - a."""
        return self.b - self.a

    def function(self, values) -> "GridFunction":
        """Wrap an array (or broadcastable scalar) of samples on this grid."""
        return GridFunction(self, np.broadcast_to(np.asarray(values, dtype=float), self.nodes.shape).copy())

    def sample(self, f) -> "GridFunction":
        """Sample a callable on the nodes."""
        return GridFunction(self, np.asarray(f(self.nodes), dtype=float))


def make_uniform_grid(a: float, b: float, n_nodes: int) -> Grid:
    """Uniform grid on [a, b] with composite trapezoid weights.

    Interior nodes get weight ``dx = (b - a) / (n_nodes - 1)``, the two
    endpoints get ``dx / 2``, so the weights sum to ``b - a`` exactly and
    polynomials of degree <= 1 are integrated exactly.
    """
    if b <= a:
        raise ValueError(f"need b > a, got a={a}, b={b}")
    if n_nodes < 2:
        raise ValueError(f"need at least 2 nodes, got {n_nodes}")
    nodes = np.linspace(a, b, n_nodes)
    dx = (b - a) / (n_nodes - 1)
    weights = np.full(n_nodes, dx)
    weights[0] = weights[-1] = 0.5 * dx
    return Grid(a=float(a), b=float(b), nodes=nodes, weights=weights)


@dataclass(frozen=True)
class GridFunction:
    """A function known by its samples on a :class:`Grid`."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape != self.grid.nodes.shape:
            raise ValueError(
                f"values length {values.size} does not match grid with {self.grid.n_nodes} nodes"
            )

    def norm2(self) -> float:
        """Quadrature L2 norm sqrt(<f, f>)."""
        return float(np.sqrt(np.sum(self.grid.weights * self.values**2)))

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _require_same_grid(self, other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _require_same_grid(self, other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "GridFunction":
        return GridFunction(self.grid, self.values * float(c))

    __rmul__ = __mul__


def _require_same_grid(f: GridFunction, g: GridFunction) -> None:
    if f.grid is g.grid:
        return
    if f.grid.n_nodes != g.grid.n_nodes or not np.array_equal(f.grid.nodes, g.grid.nodes):
        raise ValueError("grid functions live on different grids")


def inner_product(f: GridFunction, g: GridFunction) -> float:
    """Quadrature approximation of the L2 scalar product <f, g>."""
    _require_same_grid(f, g)
    return float(np.sum(f.grid.weights * f.values * g.values))


@dataclass(frozen=True)
class DiscreteOperator:
    """Matrix realization of an integral operator between two grids.

    ``matrix`` has shape (range nodes, domain nodes) and absorbs the domain
    quadrature weights, so ``apply`` is ``matrix @ f.values``.  The adjoint is
    the weighted transpose ``diag(1/w_dom) @ matrix.T @ diag(w_ran)``, which
    satisfies the discrete duality identity exactly.
    """

    domain_grid: Grid
    range_grid: Grid
    matrix: np.ndarray
    _adjoint_matrix: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", matrix)
        if matrix.shape != (self.range_grid.n_nodes, self.domain_grid.n_nodes):
            raise ValueError(
                f"matrix shape {matrix.shape} does not match "
                f"(range {self.range_grid.n_nodes}, domain {self.domain_grid.n_nodes})"
            )

    @property
    def adjoint_matrix(self) -> np.ndarray:
        """(domain nodes, range nodes) matrix of the adjoint, built lazily."""
        if self._adjoint_matrix is None:
            adj = (self.matrix * self.range_grid.weights[:, None]).T / self.domain_grid.weights[:, None]
            object.__setattr__(self, "_adjoint_matrix", adj)
        return self._adjoint_matrix


def identity_operator(grid: Grid) -> DiscreteOperator:
    """The identity on a grid (useful as a well-posed reference operator)."""
    return DiscreteOperator(grid, grid, np.eye(grid.n_nodes))


def apply(Q: DiscreteOperator, f: GridFunction) -> GridFunction:
    """Apply the forward operator; f must live on the domain grid."""
    _require_grid(f, Q.domain_grid, "domain")
    return GridFunction(Q.range_grid, Q.matrix @ f.values)


def adjoint_apply(Q: DiscreteOperator, u: GridFunction) -> GridFunction:
    """Apply the adjoint operator; u must live on the range grid."""
    _require_grid(u, Q.range_grid, "range")
    return GridFunction(Q.domain_grid, Q.adjoint_matrix @ u.values)


def _require_grid(f: GridFunction, grid: Grid, which: str) -> None:
    if f.grid is grid:
        return
    if f.grid.n_nodes != grid.n_nodes or not np.array_equal(f.grid.nodes, grid.nodes):
        raise ValueError(f"grid function does not live on the operator's {which} grid")


def interpolate(f: GridFunction, x) -> np.ndarray:
    """Linear interpolation of a grid function at arbitrary points in [a, b]."""
    return np.interp(np.asarray(x, dtype=float), f.grid.nodes, f.values)


def interpolation_matrix(x, grid: Grid) -> np.ndarray:
    """Matrix P with (P v)_i = linear interpolation of samples v at x[i]."""
    x = np.asarray(x, dtype=float)
    n = grid.n_nodes
    P = np.zeros((x.size, n))
    idx = np.clip(np.searchsorted(grid.nodes, x, side="right") - 1, 0, n - 2)
    x0 = grid.nodes[idx]
    x1 = grid.nodes[idx + 1]
    t = np.clip((x - x0) / (x1 - x0), 0.0, 1.0)
    rows = np.arange(x.size)
    P[rows, idx] = 1.0 - t
    P[rows, idx + 1] = t
    return P
