"""Comparison estimators: truncated SVD and Laguerre-Galerkin projections.

Both act on the observation-restricted forward map (the fine-grid operator
composed with linear interpolation to the observation nodes), mirroring what
the data actually constrains.  The discrete convolution operator is not
self-adjoint, so the singular system plays the role of the eigen-system.  The
same Laguerre design also yields the projection estimate q_hat of the
right-hand side used by the data-driven penalty selection, with its dimension
picked by the unbiased-risk criterion ||residual||^2 + 2 sigma^2 n^(-1) K.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dictionary import laguerre_function
from .grids import DiscreteOperator, Grid, GridFunction, interpolation_matrix

RANK_TOL = 1e-12


@dataclass(frozen=True)
class BaselineEstimate:
    method: str
    k_used: int
    f_hat: GridFunction
    error_vs_truth: float | None = None


def _observation_matrix(Q: DiscreteOperator, obs_grid: Grid) -> np.ndarray:
    """Forward map from domain samples to values at the observation nodes."""
    P = interpolation_matrix(obs_grid.nodes, Q.range_grid)
    return P @ Q.matrix


def svd_estimator(Q: DiscreteOperator, y: np.ndarray, obs_grid: Grid, K: int) -> BaselineEstimate:
    """Spectral cutoff estimate from the top-K singular triples.

    The observation-restricted matrix is symmetrized with the quadrature
    weights on both sides, so the singular vectors are orthonormal in the
    respective L2 geometries and

        f_hat = sum_{k <= K} s_k^(-1) <y, u_k> v_k .
    """
    y = np.asarray(y, dtype=float)
    if K < 0:
        raise ValueError("K must be nonnegative")
    A = _observation_matrix(Q, obs_grid)
    wo = np.sqrt(obs_grid.weights)
    wd = np.sqrt(Q.domain_grid.weights)
    U, s, Vt = np.linalg.svd(wo[:, None] * A / wd[None, :], full_matrices=False)
    rank = int(np.sum(s > RANK_TOL * s[0]))
    if K > rank:
        raise ValueError(f"K={K} exceeds the numerical rank {rank} of the observed operator")
    coef = (U[:, :K].T @ (wo * y)) / s[:K]
    f_vals = (Vt[:K].T @ coef) / wd
    return BaselineEstimate("svd", K, GridFunction(Q.domain_grid, f_vals))


def _laguerre_matrix(grid: Grid, a: float, K: int) -> np.ndarray:
    return np.stack([laguerre_function(k, a, grid).values for k in range(K)], axis=1)


def laguerre_galerkin_estimator(Q: DiscreteOperator, y: np.ndarray, obs_grid: Grid,
                                a: float, K: int) -> BaselineEstimate:
    """Least-squares fit of Q(sum_k c_k L_k(.; a)) to the observations."""
    y = np.asarray(y, dtype=float)
    if K < 1:
        raise ValueError("need at least one basis function")
    if a <= 0:
        raise ValueError("scale must be positive")
    L = _laguerre_matrix(Q.domain_grid, a, K)
    D = _observation_matrix(Q, obs_grid) @ L
    if np.linalg.matrix_rank(D, tol=RANK_TOL * np.abs(D).max() * max(D.shape)) < K:
        raise ValueError(f"design is rank deficient: K={K} too large for n={obs_grid.n_nodes}")
    c, *_ = np.linalg.lstsq(D, y, rcond=None)
    return BaselineEstimate("laguerre_galerkin", K, GridFunction(Q.domain_grid, L @ c))


def oracle_tune(estimator_family: Callable[[int], BaselineEstimate],
                f_true: GridFunction, K_range) -> tuple[int, float]:
    """Pick K minimizing the error against the known truth.

    Mirrors the hand-tuned comparison protocol; only meaningful inside a
    simulation where f_true is available.  Family members that fail (rank
    deficiency) are skipped.
    """
    K_range = list(K_range)
    if not K_range:
        raise ValueError("empty K range")
    best_k, best_err = None, np.inf
    for K in K_range:
        try:
            est = estimator_family(K)
        except (ValueError, np.linalg.LinAlgError):
            continue
        err = (est.f_hat - f_true).norm2()
        if err < best_err:
            best_k, best_err = K, err
    if best_k is None:
        raise ValueError("no member of the family could be evaluated")
    return best_k, float(best_err)


def project_q_hat(y: np.ndarray, obs_grid: Grid, a: float, range_grid: Grid,
                  K: int | None = None, sigma: float | None = None,
                  K_max: int | None = None) -> GridFunction:
    """Project the observations on span{L_k(.; a)} and evaluate on the fine grid.

    With ``K=None`` the dimension is chosen by minimizing the unbiased-risk
    criterion ||y - y_hat_K||^2 + 2 sigma^2 n^(-1) K over K = 1..K_max
    (sigma is then required).
    """
    y = np.asarray(y, dtype=float)
    n = obs_grid.n_nodes
    if y.shape != (n,):
        raise ValueError("need one observation per node")
    E_obs = _laguerre_matrix(obs_grid, a, min(n, K_max or n))
    if K is None:
        if sigma is None:
            raise ValueError("automatic dimension choice needs sigma")
        best_K, best_crit = 1, np.inf
        # QR once, then nested fits share the orthogonal factor
        Qf, Rf = np.linalg.qr(E_obs)
        proj = Qf.T @ y
        for k in range(1, E_obs.shape[1] + 1):
            if abs(Rf[k - 1, k - 1]) < RANK_TOL * abs(Rf[0, 0]):
                break
            resid = float(y @ y - proj[:k] @ proj[:k])
            crit = resid + 2.0 * sigma**2 / n * k
            if crit < best_crit:
                best_K, best_crit = k, crit
        K = best_K
    if not 1 <= K <= n:
        raise ValueError(f"need 1 <= K <= n = {n}")
    c, *_ = np.linalg.lstsq(E_obs[:, :K], y, rcond=None)
    return GridFunction(range_grid, _laguerre_matrix(range_grid, a, K) @ c)
