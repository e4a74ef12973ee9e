"""Overcomplete exponential-monomial dictionary and its Gram geometry.

The dictionary elements are

    phi_{l,b}(z) = exp(-b z) z^l (2b)^(l + 1/2) / sqrt((2l)!),

which have unit L2(0, inf) norm; on a truncated grid they are renormalized to
unit quadrature norm.  The closed form of the infinite-domain Gram entries,

    <phi_{l1,b1}, phi_{l2,b2}> = sqrt(R1 * R2),
    R1 = ((l1+l2)!)^2 / ((2 l1)! (2 l2)!),
    R2 = 2^(2l1+2l2+2) b1^(2l1+1) b2^(2l2+1) / (b1+b2)^(2l1+2l2+2),

is exposed as an independent oracle for the quadrature Gram, together with the
coherence bound

    rho(lj, lk; bj, bk) <= exp{ -(2 lk + 1)/2 * ( |log(bj/bk)| - log 4 ) }

valid whenever lj <= lk and bj >= bk.  All factorials are evaluated in log
space ((2l)! overflows double precision near l = 86; we cap l at 80).

The orthonormal exponential-polynomial basis of L2(0, inf),

    L_k(t; a) = sqrt(2a) exp(-a t) sum_{j=0}^k (-1)^j C(k,j) (2 a t)^j / j!,

is also provided; the alternating sum is evaluated through the standard
three-term recurrence, which is algebraically identical and numerically
stable for large k.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc, gammaln

from .grids import Grid, GridFunction

MAX_DEGREE = 80


def _phi_raw(l: int, b: float, z: np.ndarray) -> np.ndarray:
    """exp(-bz) z^l (2b)^(l+1/2) / sqrt((2l)!), evaluated in log space."""
    out = np.zeros_like(z, dtype=float)
    const = (l + 0.5) * np.log(2.0 * b) - 0.5 * gammaln(2 * l + 1)
    if l == 0:
        out[:] = np.exp(const - b * z)
    else:
        pos = z > 0
        out[pos] = np.exp(const - b * z[pos] + l * np.log(z[pos]))
    return out


def _check_label(l: int, b: float) -> None:
    if l < 0 or int(l) != l:
        raise ValueError(f"monomial degree must be a nonnegative integer, got {l}")
    if l > MAX_DEGREE:
        raise ValueError(f"degree {l} exceeds log-space factorial cap {MAX_DEGREE}")
    if b <= 0:
        raise ValueError(f"decay rate must be positive, got {b}")


def laguerre_monomial(l: int, b: float, grid: Grid) -> GridFunction:
    """Dictionary element phi_{l,b}, renormalized to unit grid norm."""
    _check_label(l, b)
    vals = _phi_raw(int(l), float(b), grid.nodes)
    nrm = np.sqrt(np.sum(grid.weights * vals**2))
    if nrm == 0.0:
        raise ValueError(f"phi_({l},{b}) vanishes on the grid; domain too short")
    return GridFunction(grid, vals / nrm)


def truncation_tail(l: int, b: float, T: float) -> float:
    """Analytic tail mass int_T^inf phi_{l,b}^2 dz (regularized upper gamma)."""
    _check_label(l, b)
    return float(gammaincc(2 * l + 1, 2.0 * b * T))


def laguerre_function(k: int, a: float, grid: Grid) -> GridFunction:
    """Orthonormal basis function L_k(t; a) sampled on the grid."""
    if k < 0 or int(k) != k:
        raise ValueError(f"order must be a nonnegative integer, got {k}")
    if a <= 0:
        raise ValueError(f"scale must be positive, got {a}")
    x = 2.0 * a * grid.nodes
    # three-term recurrence for the alternating binomial sum
    prev = np.ones_like(x)
    if k == 0:
        poly = prev
    else:
        curr = 1.0 - x
        for m in range(1, k):
            prev, curr = curr, ((2 * m + 1 - x) * curr - m * prev) / (m + 1)
        poly = curr
    return GridFunction(grid, np.sqrt(2.0 * a) * np.exp(-a * grid.nodes) * poly)


@dataclass(frozen=True)
class Dictionary:
    """p unit-norm columns phi_{l,b} with their labels, on a common grid.

    Attributes
    ----------
    grid : Grid
    labels : list of (l, b)
        Pairwise distinct labels.
    columns : ndarray of shape (n_nodes, p)
        Unit-grid-norm samples, one column per label.
    tails : ndarray of shape (p,)
        Analytic truncation residual int_T^inf phi^2 per column (mass the
        grid cannot see; large values flag columns dominated by truncation).
    """

    grid: Grid
    labels: tuple
    columns: np.ndarray
    tails: np.ndarray

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("dictionary labels must be pairwise distinct")
        if self.columns.shape != (self.grid.n_nodes, len(self.labels)):
            raise ValueError("columns shape does not match grid/labels")

    @property
    def p(self) -> int:
        return len(self.labels)

    def column(self, j: int) -> GridFunction:
        return GridFunction(self.grid, self.columns[:, j])

    def synthesize(self, t: np.ndarray) -> GridFunction:
        """Expansion f_t = sum_j t_j phi_j as a grid function."""
        t = np.asarray(t, dtype=float)
        if t.shape != (self.p,):
            raise ValueError(f"coefficient vector must have length {self.p}")
        return GridFunction(self.grid, self.columns @ t)


def build_dictionary(p1: int, p2: int, b_step: float, grid: Grid) -> Dictionary:
    """Cartesian-product dictionary with l in 0..p1-1 and b in b_step..p2*b_step.

    The degree range uses p1 values (0 through p1-1) so that p = p1 * p2
    exactly; the default experiment uses p1 = 10, p2 = 40, b_step = 0.1 for
    p = 400 columns.
    """
    if p1 < 1 or p2 < 1:
        raise ValueError("need p1 >= 1 and p2 >= 1")
    if b_step <= 0:
        raise ValueError("b_step must be positive")
    labels = tuple((l, round(k * b_step, 12)) for l in range(p1) for k in range(1, p2 + 1))
    cols = np.empty((grid.n_nodes, len(labels)))
    tails = np.empty(len(labels))
    for j, (l, b) in enumerate(labels):
        cols[:, j] = laguerre_monomial(l, b, grid).values
        tails[j] = truncation_tail(l, b, grid.b)
    return Dictionary(grid=grid, labels=labels, columns=cols, tails=tails)


@dataclass(frozen=True)
class GramMatrix:
    """Symmetric p x p matrix of column inner products, unit diagonal."""

    entries: np.ndarray

    def __post_init__(self):
        E = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "entries", E)
        if E.ndim != 2 or E.shape[0] != E.shape[1]:
            raise ValueError("Gram matrix must be square")
        if not np.allclose(E, E.T, atol=1e-12):
            raise ValueError("Gram matrix must be symmetric")

    @property
    def p(self) -> int:
        return self.entries.shape[0]


def gram(d: Dictionary) -> GramMatrix:
    """Quadrature Gram matrix Phi_{jk} = <phi_j, phi_k> of the dictionary."""
    WC = d.grid.weights[:, None] * d.columns
    E = d.columns.T @ WC
    return GramMatrix(0.5 * (E + E.T))


def gram_closed_form(l1: int, l2: int, b1: float, b2: float) -> float:
    """Infinite-domain Gram entry sqrt(R1 * R2), computed in log space."""
    _check_label(l1, b1)
    _check_label(l2, b2)
    log_r1 = 2.0 * gammaln(l1 + l2 + 1) - gammaln(2 * l1 + 1) - gammaln(2 * l2 + 1)
    log_r2 = ((2 * l1 + 2 * l2 + 2) * np.log(2.0)
              + (2 * l1 + 1) * np.log(b1) + (2 * l2 + 1) * np.log(b2)
              - (2 * l1 + 2 * l2 + 2) * np.log(b1 + b2))
    return float(np.exp(0.5 * (log_r1 + log_r2)))


def coherence_bound(lj: int, lk: int, bj: float, bk: float) -> float:
    """Upper bound on the Gram entry for an oriented pair (lj <= lk, bj >= bk)."""
    _check_label(lj, bj)
    _check_label(lk, bk)
    if lj > lk or bj < bk:
        raise ValueError("pair must be oriented with lj <= lk and bj >= bk")
    return float(np.exp(-0.5 * (2 * lk + 1) * (abs(np.log(bj / bk)) - np.log(4.0))))


def save_dictionary_csv(d: Dictionary, path) -> None:
    """Write the dictionary as CSV: a z column, then one column per element.

    Each element's header cell is its label written as "l,b".
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["z"] + [f"{l},{b:g}" for l, b in d.labels])
        for i in range(d.grid.n_nodes):
            writer.writerow([repr(float(d.grid.nodes[i]))] + [repr(float(v)) for v in d.columns[i]])


def load_dictionary_csv(path) -> Dictionary:
    """Read a dictionary written by :func:`save_dictionary_csv`.

    The grid is reconstructed as uniform from the z column (spacing must be
    uniform to 1e-9 relative).
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[0] != "z":
            raise ValueError("first column must be the grid column 'z'")
        labels = []
        for cell in header[1:]:
            l_str, b_str = cell.split(",")
            labels.append((int(l_str), float(b_str)))
        rows = [[float(v) for v in rec] for rec in reader if rec]
    data = np.asarray(rows)
    nodes = data[:, 0]
    gaps = np.diff(nodes)
    if np.max(np.abs(gaps - gaps[0])) > 1e-9 * abs(gaps[0]):
        raise ValueError("dictionary CSV grid is not uniform")
    from .grids import make_uniform_grid

    grid = make_uniform_grid(nodes[0], nodes[-1], nodes.size)
    cols = data[:, 1:]
    tails = np.array([truncation_tail(l, b, grid.b) for l, b in labels])
    return Dictionary(grid=grid, labels=tuple(labels), columns=cols, tails=tails)
