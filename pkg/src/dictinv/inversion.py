"""Inverse images of dictionary columns and their statistical weights.

For each dictionary element phi_j we need psi_j solving the adjoint equation
Q* psi_j = phi_j; its norm nu_j = ||psi_j|| is the price of estimating the
j-th coefficient.  Because the discrete adjoint is the exact weighted
transpose of the forward matrix, the discrete systems are solved essentially
exactly by a truncated-SVD pseudo-inverse (one SVD shared by all columns).

When a column admits no acceptable exact inverse image, regularized images

    psi_delta = (Q Q* + delta I)^(-1) Q phi

are available, with delta chosen by minimizing the estimated coefficient MSE

    eps * ||psi_delta||^2 + <q_est, psi_delta - psi>^2 .
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, svd

from .dictionary import Dictionary
from .grids import DiscreteOperator, Grid, GridFunction, inner_product, interpolate
from .forward import MixtureKernel

EXACT_RESIDUAL_TOL = 1e-6

WEIGHT_MODELS = ("white_noise", "observational", "mixture_sup", "mixture_var_bound")


@dataclass(frozen=True)
class InverseImages:
    """Inverse images psi_j (columns) on the operator's range grid.

    Attributes
    ----------
    grid : Grid
        The range grid the images live on.
    psi : ndarray of shape (range nodes, p)
    residuals : ndarray of shape (p,)
        Relative residual ||Q* psi_j - phi_j|| / ||phi_j|| per column, in the
        domain quadrature norm.
    method : str
        "exact" for the pseudo-inverse solve, "tikhonov" for regularized
        images.
    deltas : ndarray or None
        Per-column regularization parameter when method == "tikhonov".
    """

    grid: Grid
    psi: np.ndarray
    residuals: np.ndarray
    method: str = "exact"
    deltas: np.ndarray | None = None

    @property
    def p(self) -> int:
        return self.psi.shape[1]

    def image(self, j: int) -> GridFunction:
        return GridFunction(self.grid, self.psi[:, j])

    def bad_columns(self, tol: float = EXACT_RESIDUAL_TOL) -> np.ndarray:
        """Indices violating the discrete solvability assumption at ``tol``."""
        return np.flatnonzero(self.residuals > tol)


@dataclass(frozen=True)
class WeightVector:
    """Positive penalty weights nu_j, tagged with the observation model."""

    nu: np.ndarray
    model: str

    def __post_init__(self):
        nu = np.asarray(self.nu, dtype=float)
        object.__setattr__(self, "nu", nu)
        if self.model not in WEIGHT_MODELS:
            raise ValueError(f"unknown weight model {self.model!r}")
        if not np.all(np.isfinite(nu)) or np.any(nu <= 0):
            raise ValueError("all weights must be finite and positive; "
                             "a vanishing weight would void the penalty")


def _adjoint_svd(Q: DiscreteOperator):
    return svd(Q.adjoint_matrix, full_matrices=False)


def _solve_adjoint(Q: DiscreteOperator, rhs: np.ndarray, svd_tol: float,
                   factor=None) -> np.ndarray:
    """Minimum-norm least-squares solution of Q* psi = rhs via truncated SVD."""
    U, s, Vt = factor if factor is not None else _adjoint_svd(Q)
    keep = s > svd_tol * s[0]
    coef = U[:, keep].T @ rhs
    coef /= s[keep][:, None] if rhs.ndim == 2 else s[keep]
    return Vt[keep].T @ coef


def invert_exact(Q: DiscreteOperator, d: Dictionary, svd_tol: float = 1e-10) -> InverseImages:
    """Solve Q* psi_j = phi_j for every dictionary column.

    Uses the truncated-SVD pseudo-inverse of the discrete adjoint (singular
    values below ``svd_tol`` times the largest are dropped); the SVD is
    computed once and shared by all columns.  Columns whose relative residual
    exceeds 1e-6 are reported through ``bad_columns`` rather than raised: they
    violate the discrete solvability assumption and should be re-inverted with
    :func:`invert_tikhonov`.
    """
    if d.grid.n_nodes != Q.domain_grid.n_nodes or not np.array_equal(d.grid.nodes, Q.domain_grid.nodes):
        raise ValueError("dictionary grid must coincide with the operator domain grid")
    factor = _adjoint_svd(Q)
    Psi = _solve_adjoint(Q, d.columns, svd_tol, factor=factor)
    resid_vec = Q.adjoint_matrix @ Psi - d.columns
    w = Q.domain_grid.weights[:, None]
    resid = np.sqrt(np.sum(w * resid_vec**2, axis=0))
    norms = np.sqrt(np.sum(w * d.columns**2, axis=0))
    return InverseImages(grid=Q.range_grid, psi=Psi, residuals=resid / norms, method="exact")


def invert_tikhonov(Q: DiscreteOperator, phi: GridFunction, delta: float) -> GridFunction:
    """Regularized inverse image (Q Q* + delta I)^(-1) Q phi.

    The system is symmetrized with the quadrature weights and solved by a
    Cholesky factorization.
    """
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    wr = Q.range_grid.weights
    wd = Q.domain_grid.weights
    S = np.sqrt(wr)[:, None] * Q.matrix / np.sqrt(wd)[None, :]
    M = S @ S.T
    M[np.diag_indices_from(M)] += delta
    rhs = np.sqrt(wr) * (Q.matrix @ phi.values)
    sol = cho_solve(cho_factor(M, lower=True), rhs)
    return GridFunction(Q.range_grid, sol / np.sqrt(wr))


def select_delta(Q: DiscreteOperator, phi: GridFunction, q_est: GridFunction,
                 eps: float, delta_grid) -> tuple[float, np.ndarray]:
    """Pick delta minimizing the estimated MSE of the regularized coefficient.

    For each delta the criterion is eps * ||psi_delta||^2 plus the squared
    estimated bias <q_est, psi_delta - psi>^2, where psi is the exact inverse
    image when the adjoint system is solvable (relative residual <= 1e-6) and
    otherwise the smallest-delta image serves as the reference.

    Returns the minimizing delta and the full MSE curve.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    deltas = np.asarray(delta_grid, dtype=float)
    if deltas.size == 0 or np.any(deltas <= 0):
        raise ValueError("delta_grid must be nonempty and positive")

    images = [invert_tikhonov(Q, phi, float(dl)) for dl in deltas]

    psi_exact = _solve_adjoint(Q, phi.values, 1e-10)
    resid = Q.adjoint_matrix @ psi_exact - phi.values
    wd = Q.domain_grid.weights
    rel = np.sqrt(np.sum(wd * resid**2)) / np.sqrt(np.sum(wd * phi.values**2))
    if rel <= EXACT_RESIDUAL_TOL:
        ref = GridFunction(Q.range_grid, psi_exact)
    else:
        ref = images[int(np.argmin(deltas))]

    mse = np.empty(deltas.size)
    for k, img in enumerate(images):
        bias = inner_product(q_est, img - ref)
        mse[k] = eps * img.norm2() ** 2 + bias**2
    return float(deltas[int(np.argmin(mse))]), mse


def invert_auto(Q: DiscreteOperator, d: Dictionary, q_est: GridFunction,
                eps: float, delta_grid=None, svd_tol: float = 1e-10,
                residual_tol: float = EXACT_RESIDUAL_TOL) -> InverseImages:
    """Exact inversion with automatic regularized fallback per column.

    Columns whose exact solve misses ``residual_tol`` are replaced by the
    regularized image at the delta minimizing the coefficient-MSE criterion of
    :func:`select_delta` (default grid: 30 log-spaced points in [1e-8, 1]).
    The returned ``deltas`` entry is 0 for columns kept exact.
    """
    if delta_grid is None:
        delta_grid = np.logspace(-8, 0, 30)
    deltas_grid = np.asarray(delta_grid, dtype=float)
    base = invert_exact(Q, d, svd_tol=svd_tol)
    bad = base.bad_columns(residual_tol)
    if bad.size == 0:
        return base
    psi = base.psi.copy()
    residuals = base.residuals.copy()
    deltas = np.zeros(base.p)
    wd = Q.domain_grid.weights
    wr = Q.range_grid.weights

    # one factorization per delta, shared across all bad columns
    S = np.sqrt(wr)[:, None] * Q.matrix / np.sqrt(wd)[None, :]
    SSt = S @ S.T
    rhs = np.sqrt(wr)[:, None] * (Q.matrix @ d.columns[:, bad])
    candidates = np.empty((deltas_grid.size, Q.range_grid.n_nodes, bad.size))
    for i, dl in enumerate(deltas_grid):
        M = SSt.copy()
        M[np.diag_indices_from(M)] += dl
        candidates[i] = cho_solve(cho_factor(M, lower=True), rhs) / np.sqrt(wr)[:, None]

    for col, j in enumerate(bad):
        phi_j = d.column(int(j))
        # smallest-delta image as bias reference (no exact image exists here)
        ref = candidates[int(np.argmin(deltas_grid)), :, col]
        mse = np.array([
            eps * np.sum(wr * candidates[i, :, col] ** 2)
            + np.sum(wr * q_est.values * (candidates[i, :, col] - ref)) ** 2
            for i in range(deltas_grid.size)
        ])
        i_star = int(np.argmin(mse))
        deltas[j] = deltas_grid[i_star]
        img = candidates[i_star, :, col]
        psi[:, j] = img
        resid_vec = Q.adjoint_matrix @ img - phi_j.values
        residuals[j] = np.sqrt(np.sum(wd * resid_vec**2)) / np.sqrt(np.sum(wd * phi_j.values**2))
    return InverseImages(grid=Q.range_grid, psi=psi, residuals=residuals,
                         method="tikhonov", deltas=deltas)


def weights(inv: InverseImages, model: str, obs_grid: Grid | None = None,
            kernel: MixtureKernel | None = None) -> WeightVector:
    """Penalty weights nu_j for the requested observation model.

    white_noise        nu_j = ||psi_j||_2  (range-grid quadrature norm)
    observational      nu_j^2 = (T^2 / n) sum_i psi_j(x_i)^2 over the n
                       observation nodes (psi interpolated from the fine grid)
    mixture_sup        nu_j = max_i |psi_j(y_i)|
    mixture_var_bound  nu_j^2 = max_x int g(y|x) psi_j(y)^2 dy over the x grid
    """
    if model == "white_noise":
        nu = np.sqrt(np.sum(inv.grid.weights[:, None] * inv.psi**2, axis=0))
    elif model == "observational":
        if obs_grid is None:
            raise ValueError("observational weights need the observation grid")
        P = _obs_values(inv, obs_grid)
        n = obs_grid.n_nodes
        nu = np.sqrt(obs_grid.length**2 / n * np.sum(P**2, axis=0))
    elif model == "mixture_sup":
        nu = np.max(np.abs(inv.psi), axis=0)
    elif model == "mixture_var_bound":
        if kernel is None:
            raise ValueError("variance-bound weights need the mixture kernel")
        G = kernel.column_matrix(kernel.x_grid.nodes)      # (n_y, n_x)
        sec = (kernel.y_grid.weights[:, None] * G).T @ inv.psi**2
        nu = np.sqrt(np.max(sec, axis=0))
    else:
        raise ValueError(f"unknown weight model {model!r}")
    return WeightVector(nu=nu, model=model)


def _obs_values(inv: InverseImages, obs_grid: Grid) -> np.ndarray:
    """Inverse images linearly interpolated at the observation nodes."""
    if obs_grid.nodes[0] < inv.grid.a or obs_grid.nodes[-1] > inv.grid.b:
        raise ValueError("observation grid extends outside the inverse-image support")
    out = np.empty((obs_grid.n_nodes, inv.p))
    for j in range(inv.p):
        out[:, j] = np.interp(obs_grid.nodes, inv.grid.nodes, inv.psi[:, j])
    return out


def save_inverse_images_csv(inv: InverseImages, d: Dictionary, psi_path, residual_path) -> None:
    """Write the psi matrix (one column per image) and a residual report."""
    with open(psi_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x"] + [f"psi[{l},{b:g}]" for l, b in d.labels])
        for i in range(inv.grid.n_nodes):
            writer.writerow([repr(float(inv.grid.nodes[i]))] + [repr(float(v)) for v in inv.psi[i]])
    with open(residual_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["j", "l", "b", "residual", "method"]
        if inv.deltas is not None:
            header.append("delta")
        writer.writerow(header)
        for j, (l, b) in enumerate(d.labels):
            row = [j, l, f"{b:g}", repr(float(inv.residuals[j])), inv.method]
            if inv.deltas is not None:
                row.append(repr(float(inv.deltas[j])))
            writer.writerow(row)
