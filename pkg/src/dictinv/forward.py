"""Forward models: causal (Volterra) convolution, test signals, data generation.

The default experiment geometry follows the convolution-on-a-half-line setup:
kernel g(x) = exp(-x) on [0, T] with T = 10, a fine analysis grid for all
dictionary math, and a coarse grid of n observation points where data

    y_i = q(x_i) + n^(-1/2) * sigma * xi_i,   q = Q f,

is recorded.  A generic grid-based mixture channel (conditional density
g(y|x)) is provided for the latent-mixture observation model.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .grids import (
    DiscreteOperator,
    Grid,
    GridFunction,
    apply,
    interpolate,
)


@dataclass(frozen=True)
class LaplaceKernel:
    """Convolution kernel g for q(x) = int_0^x g(x - t) f(t) dt on [0, T]."""

    g: Callable[[np.ndarray], np.ndarray] = lambda x: np.exp(-x)
    T: float = 10.0


def _prefix_trapezoid_row(t: np.ndarray, x: float, g: Callable) -> np.ndarray:
    """Quadrature weights*kernel for int_0^x g(x - t) f(t) dt over nodes t.

    Composite trapezoid over the nodes below x, plus a trapezoid correction on
    the partial cell [t_K, x] (with f linearly interpolated at x), so the rule
    stays second order when x falls between nodes.
    """
    row = np.zeros(t.size)
    if x <= t[0]:
        # Degenerate prefix [a, a]: keep the composite rule's half-cell weight
        # at t = a instead of an identically zero row.  A zero row would make
        # the weighted-transpose adjoint singular and the inverse-image
        # systems unsolvable; the price is an O(dx) defect in q at the single
        # node x = a.
        if x == t[0]:
            row[0] = 0.5 * (t[1] - t[0]) * float(g(np.zeros(1))[0])
        return row
    K = int(np.searchsorted(t, x, side="right") - 1)
    tk = t[: K + 1]
    if K >= 1:
        w = np.empty(K + 1)
        w[0] = 0.5 * (tk[1] - tk[0])
        w[-1] = 0.5 * (tk[-1] - tk[-2])
        if K >= 2:
            w[1:-1] = 0.5 * (tk[2:] - tk[:-2])
        row[: K + 1] = w * g(x - tk)
    r = x - t[K]
    if r > 0:
        g0 = float(g(np.zeros(1))[0])
        if K + 1 < t.size:
            s = r / (t[K + 1] - t[K])
            row[K] += 0.5 * r * (float(g(np.array([r]))[0]) + g0 * (1.0 - s))
            row[K + 1] += 0.5 * r * g0 * s
        else:
            row[K] += 0.5 * r * (float(g(np.array([r]))[0]) + g0)
    return row


def laplace_operator(kernel: LaplaceKernel, domain_grid: Grid, range_grid: Grid) -> DiscreteOperator:
    """Discretize the causal convolution q(x) = int_0^x g(x - t) f(t) dt.

    The matrix is lower triangular up to the quadrature stencil: q(x) never
    depends on f(t) for t > x.  Its weighted transpose discretizes the adjoint
    (Q* u)(z) = int_z^T g(x - z) u(x) dx consistently.
    """
    t = domain_grid.nodes
    A = np.empty((range_grid.n_nodes, domain_grid.n_nodes))
    for i, x in enumerate(range_grid.nodes):
        A[i] = _prefix_trapezoid_row(t, float(x), kernel.g)
    return DiscreteOperator(domain_grid, range_grid, A)


def fredholm_operator(g2: Callable[[np.ndarray, np.ndarray], np.ndarray],
                      domain_grid: Grid, range_grid: Grid) -> DiscreteOperator:
    """Discretize q(x) = int g(x, t) f(t) dt with the domain grid's weights."""
    X = range_grid.nodes[:, None]
    T = domain_grid.nodes[None, :]
    A = g2(X, T) * domain_grid.weights[None, :]
    return DiscreteOperator(domain_grid, range_grid, A)


def load_tabulated_kernel(path) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Read a kernel tabulated as CSV rows (x, t, g) on a product lattice.

    Returns a callable g(x, t) that interpolates bilinearly, for use with
    :func:`fredholm_operator`.
    """
    xs, ts, gs = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip().lower() for h in header[:3]] != ["x", "t", "g"]:
            raise ValueError(f"expected header x,t,g in {path}, got {header}")
        for rec in reader:
            if not rec:
                continue
            xs.append(float(rec[0]))
            ts.append(float(rec[1]))
            gs.append(float(rec[2]))
    x_ax = np.unique(xs)
    t_ax = np.unique(ts)
    if x_ax.size * t_ax.size != len(gs):
        raise ValueError("tabulated kernel is not on a full product lattice")
    G = np.full((x_ax.size, t_ax.size), np.nan)
    ix = np.searchsorted(x_ax, xs)
    it = np.searchsorted(t_ax, ts)
    G[ix, it] = gs
    if np.any(np.isnan(G)):
        raise ValueError("tabulated kernel has missing lattice entries")
    interp = RegularGridInterpolator((x_ax, t_ax), G, bounds_error=False, fill_value=None)

    def g2(x, t):
        x, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))
        pts = np.stack([x.ravel(), t.ravel()], axis=-1)
        return interp(pts).reshape(x.shape)

    return g2


@dataclass(frozen=True)
class TestFunction:
    """A named target function, sampled and scaled to unit grid L2 norm."""

    id: str
    values: GridFunction


_TEST_SHAPES = {
    "f1": lambda x: np.exp(-x / 2.0),
    "f2": lambda x: x**2 * np.exp(-x),
    "f3": lambda x: x**4 * np.exp(-4.0 * x),
}


def test_function(id: str, grid: Grid, custom: Callable | None = None) -> TestFunction:
    """Build test target f1/f2/f3 (or a custom callable), unit-normalized."""
    key = id.lower()
    if key == "custom":
        if custom is None:
            raise ValueError("custom test function requires a callable")
        shape = custom
    elif key in _TEST_SHAPES:
        shape = _TEST_SHAPES[key]
    else:
        raise ValueError(f"unknown test function {id!r}; expected f1, f2, f3 or custom")
    f = grid.sample(shape)
    nrm = f.norm2()
    if nrm == 0.0:
        raise ValueError("test function vanishes on the grid")
    return TestFunction(key, GridFunction(grid, f.values / nrm))


def generate_observations(f: TestFunction, Q: DiscreteOperator, sigma: float,
                          obs_grid: Grid, seed: int) -> np.ndarray:
    """Noisy samples y_i = q(x_i) + n^(-1/2) sigma xi_i at the observation nodes.

    q = Q f is computed on the operator's (fine) range grid and linearly
    interpolated to the observation nodes; xi is i.i.d. standard normal from a
    generator seeded with ``seed``, so fixed seeds give bit-identical data.
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    q = apply(Q, f.values)
    q_obs = interpolate(q, obs_grid.nodes)
    n = obs_grid.n_nodes
    rng = np.random.default_rng(seed)
    return q_obs + sigma / np.sqrt(n) * rng.standard_normal(n)


def white_noise_observation(q: GridFunction, eps: float, seed: int) -> GridFunction:
    """Realize y = q + sqrt(eps) * eta on the fine grid.

    The Gaussian process eta is realized as independent node noises with
    variance 1/w_i, so that the functional <eta, g> has variance ||g||_2^2 up
    to quadrature error.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    rng = np.random.default_rng(seed)
    eta = rng.standard_normal(q.grid.n_nodes) / np.sqrt(q.grid.weights)
    return GridFunction(q.grid, q.values + np.sqrt(eps) * eta)


@dataclass(frozen=True)
class MixtureKernel:
    """A known conditional density g(y|x) on a product of grids.

    ``g_cond(y, x)`` must broadcast over numpy arrays and integrate to one in
    y (checked by quadrature on the y grid for every x node at construction).
    """

    g_cond: Callable[[np.ndarray, np.ndarray], np.ndarray]
    x_grid: Grid
    y_grid: Grid

    def __post_init__(self):
        masses = self.y_grid.weights @ self.column_matrix(self.x_grid.nodes)
        worst = float(np.max(np.abs(masses - 1.0)))
        if worst > 1e-3:
            raise ValueError(
                f"g(.|x) must integrate to 1 on the y grid; worst deviation {worst:.2e}"
            )

    def column_matrix(self, x) -> np.ndarray:
        """Matrix of conditional densities: entry (i, j) = g(y_i | x_j)."""
        x = np.atleast_1d(np.asarray(x, float))
        return self.g_cond(self.y_grid.nodes[:, None], x[None, :])


def mixture_operator(kernel: MixtureKernel) -> DiscreteOperator:
    """The mixing operator (Qf)(y) = int g(y|x) f(x) dx as a DiscreteOperator."""
    A = kernel.column_matrix(kernel.x_grid.nodes) * kernel.x_grid.weights[None, :]
    return DiscreteOperator(kernel.x_grid, kernel.y_grid, A)


def exponential_mixture_kernel(x_grid: Grid | None = None,
                               y_grid: Grid | None = None) -> MixtureKernel:
    """Demo channel g(y|x) = (1/x) exp(-y/x), truncated to the y grid.

    Defaults: x in [0.5, 3], y in [0, 30].  The truncated column mass
    1 - exp(-y_max/x) is divided out so each column is a proper density.
    """
    from .grids import make_uniform_grid

    if x_grid is None:
        x_grid = make_uniform_grid(0.5, 3.0, 251)
    if y_grid is None:
        y_grid = make_uniform_grid(0.0, 30.0, 1501)
    y_max = y_grid.b

    def g_cond(y, x):
        return np.exp(-y / x) / (x * (1.0 - np.exp(-y_max / x)))

    return MixtureKernel(g_cond, x_grid, y_grid)


def _inverse_cdf_sample(u: np.ndarray, nodes: np.ndarray, weights: np.ndarray,
                        density: np.ndarray) -> np.ndarray:
    """Map uniforms through the piecewise-linear CDF of a grid density."""
    cell = 0.5 * np.diff(nodes) * (density[:-1] + density[1:])
    cdf = np.concatenate([[0.0], np.cumsum(cell)])
    total = cdf[-1]
    if total <= 0:
        raise ValueError("density has no mass on the grid")
    return np.interp(u * total, cdf, nodes)


def sample_mixture(f_true: GridFunction, kernel: MixtureKernel, n: int, seed: int) -> np.ndarray:
    """Draw Y_1..Y_n from the mixture q(y) = int g(y|x) f(x) dx.

    X is drawn from f_true by inverse CDF on the x grid, then Y from
    g(.|X) by inverse CDF on the y grid.  f_true must be a density on the
    x grid; small normalization drift is fixed with a warning.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    f = f_true.values
    if np.any(f < -1e-12 * max(1.0, float(np.max(np.abs(f))))):
        raise ValueError("mixing density has negative mass beyond tolerance")
    f = np.clip(f, 0.0, None)
    mass = float(np.sum(kernel.x_grid.weights * f))
    if abs(mass - 1.0) > 1e-6:
        warnings.warn(f"mixing density integrates to {mass:.6f}; renormalizing")
    f = f / mass

    rng = np.random.default_rng(seed)
    x_samples = _inverse_cdf_sample(rng.random(n), kernel.x_grid.nodes,
                                    kernel.x_grid.weights, f)
    y_samples = np.empty(n)
    u = rng.random(n)
    y_nodes = kernel.y_grid.nodes
    chunk = 512
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        cols = kernel.column_matrix(x_samples[lo:hi])
        cell = 0.5 * np.diff(y_nodes)[:, None] * (cols[:-1] + cols[1:])
        cdf = np.vstack([np.zeros(hi - lo), np.cumsum(cell, axis=0)])
        for j in range(hi - lo):
            y_samples[lo + j] = np.interp(u[lo + j] * cdf[-1, j], cdf[:, j], y_nodes)
    return y_samples
