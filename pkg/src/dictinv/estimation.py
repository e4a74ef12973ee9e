"""Coefficient estimators under the three observation models, and penalty levels.

The target coefficients are beta_j = <f, phi_j>, reachable through data because
<q, psi_j> = <Q f, psi_j> = <f, Q* psi_j> = beta_j.  Depending on how q is
observed, beta_j is estimated by

    white noise    beta_hat_j = <y, psi_j>                 (fine-grid functional)
    observational  beta_hat_j = sum_i y_i psi_j(x_i) dx_i  (rectangular rule)
    mixture        beta_hat_j = mean_i psi_j(Y_i)          (sample average)

The observational sum deliberately carries no extra 1/n factor: with node
gaps dx_i the rule approximates the integral <q, psi_j> directly, and its
noise variance is (sigma^2/n) nu_j^2 for the observational weights, matching
the white-noise calculus with eps = sigma^2/n.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .dictionary import Dictionary
from .grids import Grid, GridFunction
from .inversion import InverseImages, WeightVector, _obs_values


@dataclass(frozen=True)
class BetaEstimate:
    """Estimated expansion coefficients with their noise scale.

    ``noise_scale`` records eps (white noise) or sigma^2/n (sampled models)
    when known; it is informational and not used by the solver.
    """

    beta_hat: np.ndarray
    model: str
    noise_scale: float = float("nan")
    clamped: int = 0

    def __post_init__(self):
        beta = np.asarray(self.beta_hat, dtype=float)
        object.__setattr__(self, "beta_hat", beta)
        if not np.all(np.isfinite(beta)):
            raise ValueError("coefficient estimates must be finite")


def beta_hat_white_noise(y_fine: GridFunction, inv: InverseImages,
                         eps: float = float("nan")) -> BetaEstimate:
    """beta_hat_j = <y, psi_j> with the range-grid quadrature inner product."""
    if y_fine.grid.n_nodes != inv.grid.n_nodes or not np.array_equal(y_fine.grid.nodes, inv.grid.nodes):
        raise ValueError("observation path must live on the inverse-image grid")
    beta = inv.psi.T @ (inv.grid.weights * y_fine.values)
    return BetaEstimate(beta_hat=beta, model="white_noise", noise_scale=eps)


def observation_gaps(obs_grid: Grid) -> np.ndarray:
    """Rectangular-rule weights dx_i = x_i - x_{i-1}; the first node gets 0.

    The observation layout is a = x_0 < x_1 < ... = b with the quadrature sum
    running over the right endpoints, which keeps the rule first order.
    """
    gaps = np.empty(obs_grid.n_nodes)
    gaps[0] = 0.0
    gaps[1:] = np.diff(obs_grid.nodes)
    return gaps


def beta_hat_observational(y: np.ndarray, obs_grid: Grid, inv: InverseImages,
                           sigma: float = float("nan")) -> BetaEstimate:
    """Rectangular-rule estimate beta_hat_j = sum_i y_i psi_j(x_i) dx_i."""
    y = np.asarray(y, dtype=float)
    if y.shape != (obs_grid.n_nodes,):
        raise ValueError(f"need one observation per grid node ({obs_grid.n_nodes}), got {y.shape}")
    P = _obs_values(inv, obs_grid)
    beta = P.T @ (observation_gaps(obs_grid) * y)
    scale = sigma**2 / obs_grid.n_nodes if np.isfinite(sigma) else float("nan")
    return BetaEstimate(beta_hat=beta, model="observational", noise_scale=scale)


def beta_hat_mixture(samples: np.ndarray, inv: InverseImages) -> BetaEstimate:
    """Sample-average estimate beta_hat_j = (1/n) sum_i psi_j(Y_i).

    Samples outside the truncated range domain are clamped to the nearest
    edge; the clamp count is recorded on the estimate (grid truncation of an
    unbounded support is an implementation artifact, not a data error).
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("empty sample")
    clamped = int(np.sum((samples < inv.grid.a) | (samples > inv.grid.b)))
    pts = np.clip(samples, inv.grid.a, inv.grid.b)
    beta = np.empty(inv.p)
    for j in range(inv.p):
        beta[j] = np.mean(np.interp(pts, inv.grid.nodes, inv.psi[:, j]))
    return BetaEstimate(beta_hat=beta, model="mixture", noise_scale=1.0 / samples.size,
                        clamped=clamped)


@dataclass(frozen=True)
class PenaltyConfig:
    """Theoretical penalty levels alpha0 (slow rate) and alpha (fast rate)."""

    model: str
    tau: float
    mu: float
    alpha0: float
    alpha: float
    K0: float
    spacing_factor: float = 1.0

    def __post_init__(self):
        if not (self.alpha > self.alpha0 > 0):
            raise ValueError("penalties must satisfy alpha > alpha0 > 0")


def theoretical_alpha(model: str, tau: float, mu: float, p: int,
                      eps: float | None = None, sigma: float | None = None,
                      n: int | None = None, spacing_factor: float = 1.0) -> PenaltyConfig:
    """Penalty levels with guaranteed oracle inequalities, per model.

    white_noise    alpha0 = sqrt(2 eps (tau+1) log p),                 K0 = 2
    observational  alpha0 = 2 vt sigma n^(-1/2) sqrt(2 (tau+1) log p), K0 = 8 vt^2
    mixture        alpha0 = 2 n^(-1/2) sqrt((tau+1) log p),            K0 = 4

    where vt is the grid spacing factor (max_i dx_i <= vt T / n) and always
    alpha = alpha0 (mu+1)/(mu-1).
    """
    if mu <= 1:
        raise ValueError("mu must exceed 1")
    if tau <= 0:
        raise ValueError("tau must be positive")
    if p < 2:
        raise ValueError("need at least two dictionary elements")
    logp = np.log(p)
    if model == "white_noise":
        if eps is None:
            raise ValueError("white-noise penalties need eps")
        alpha0 = np.sqrt(2.0 * eps * (tau + 1.0) * logp)
        K0 = 2.0
    elif model == "observational":
        if sigma is None or n is None:
            raise ValueError("observational penalties need sigma and n")
        if spacing_factor < 1.0:
            raise ValueError("spacing factor is at least 1 by definition")
        alpha0 = 2.0 * spacing_factor * sigma / np.sqrt(n) * np.sqrt(2.0 * (tau + 1.0) * logp)
        K0 = 8.0 * spacing_factor**2
    elif model == "mixture":
        if n is None:
            raise ValueError("mixture penalties need n")
        alpha0 = 2.0 / np.sqrt(n) * np.sqrt((tau + 1.0) * logp)
        K0 = 4.0
    else:
        raise ValueError(f"unknown model {model!r}")
    alpha = alpha0 * (mu + 1.0) / (mu - 1.0)
    return PenaltyConfig(model=model, tau=tau, mu=mu, alpha0=float(alpha0),
                         alpha=float(alpha), K0=K0, spacing_factor=spacing_factor)


def save_beta_csv(est: BetaEstimate, d: Dictionary, nu: WeightVector, path) -> None:
    """Write (j, l_j, b_j, beta_hat_j, nu_j) rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["j", "l", "b", "beta_hat", "nu"])
        for j, (l, b) in enumerate(d.labels):
            writer.writerow([j, l, f"{b:g}", repr(float(est.beta_hat[j])), repr(float(nu.nu[j]))])
