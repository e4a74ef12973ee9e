"""Weighted Lasso: solver, regularization path, and penalty selection.

The problem is

    t_hat = argmin_t { t' Phi t - 2 t' beta_hat + alpha sum_j nu_j |t_j| },

solved by cyclic coordinate descent with soft-threshold updates

    t_j <- S(beta_hat_j - sum_{k != j} Phi_jk t_k, alpha nu_j / 2) / Phi_jj.

Every converged solution carries an independently recomputed KKT residual as
its optimality certificate.  Paths run over the grid alpha_k = alpha_max * k/N
(k = 1..N), solved in descending order with warm starts; the penalty level is
then picked either against the known truth (oracle) or by the unbiased-risk
style criterion

    ||Q f_t - q_hat||^2 + 2 sigma^2 n^(-1) * (active-set size).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ._cd import cd_solve
from .dictionary import Dictionary, GramMatrix
from .grids import DiscreteOperator, GridFunction, apply, inner_product
from .inversion import WeightVector


@dataclass(frozen=True)
class WeightedLassoProblem:
    """(Phi, beta_hat, nu, alpha) with consistent dimensions."""

    gram: GramMatrix
    beta_hat: np.ndarray
    nu: WeightVector
    alpha: float

    def __post_init__(self):
        beta = np.asarray(self.beta_hat, dtype=float)
        object.__setattr__(self, "beta_hat", beta)
        p = self.gram.p
        if beta.shape != (p,) or self.nu.nu.shape != (p,):
            raise ValueError("gram, beta_hat and nu must share the dimension p")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")


@dataclass(frozen=True)
class LassoSolution:
    """Solver output with its optimality certificate."""

    t_hat: np.ndarray
    active_set: np.ndarray
    kkt_residual: float
    iterations: int
    objective_value: float
    converged: bool

    @property
    def n_active(self) -> int:
        return self.active_set.size


def objective(prob: WeightedLassoProblem, t: np.ndarray) -> float:
    """t' Phi t - 2 t' beta_hat + alpha * sum_j nu_j |t_j|."""
    t = np.asarray(t, dtype=float)
    if t.shape != prob.beta_hat.shape:
        raise ValueError("coefficient vector has the wrong length")
    quad = float(t @ (prob.gram.entries @ t))
    return quad - 2.0 * float(t @ prob.beta_hat) + prob.alpha * float(np.sum(prob.nu.nu * np.abs(t)))


def solve(prob: WeightedLassoProblem, tol: float = 1e-8, max_iter: int = 100_000,
          warm_start: np.ndarray | None = None) -> LassoSolution:
    """Coordinate descent until the KKT residual falls below ``tol``.

    Hitting ``max_iter`` sweeps returns an explicit non-converged solution
    (``converged=False`` and the achieved residual), never a silent answer.
    """
    if np.any(np.diag(prob.gram.entries) <= 0):
        raise ValueError("Gram diagonal must be positive")
    t = (np.zeros(prob.gram.p) if warm_start is None
         else np.array(warm_start, dtype=float, copy=True))
    if t.shape != prob.beta_hat.shape:
        raise ValueError("warm start has the wrong length")
    sweeps, kkt, converged = cd_solve(prob.gram.entries, prob.beta_hat, prob.nu.nu,
                                      float(prob.alpha), t, float(tol), int(max_iter))
    return LassoSolution(
        t_hat=t,
        active_set=np.flatnonzero(t),
        kkt_residual=float(kkt),
        iterations=int(sweeps),
        objective_value=objective(prob, t),
        converged=bool(converged),
    )


def alpha_max(beta_hat: np.ndarray, nu: WeightVector) -> float:
    """Smallest penalty for which t = 0 satisfies the KKT conditions.

    At the origin the stationarity condition reads |2 beta_hat_j| <= alpha
    nu_j for every j, hence alpha_max = max_j 2 |beta_hat_j| / nu_j.
    """
    beta = np.asarray(beta_hat, dtype=float)
    return float(np.max(2.0 * np.abs(beta) / nu.nu)) if beta.size else 0.0


@dataclass(frozen=True)
class LassoPath:
    """Solutions along alpha_k = alpha_max * k / N, reported in k order."""

    gram: GramMatrix
    beta_hat: np.ndarray
    nu: WeightVector
    alphas: np.ndarray
    solutions: list

    @property
    def N(self) -> int:
        return self.alphas.size

    def coefficients(self) -> np.ndarray:
        """(N, p) matrix of path coefficients."""
        return np.stack([sol.t_hat for sol in self.solutions])


def path(gram: GramMatrix, beta_hat: np.ndarray, nu: WeightVector, N: int = 200,
         tol: float = 1e-8, max_iter: int = 100_000) -> LassoPath:
    """Solve the weighted Lasso on the descending alpha grid with warm starts."""
    if N < 1:
        raise ValueError("need at least one path point")
    beta_hat = np.asarray(beta_hat, dtype=float)
    am = alpha_max(beta_hat, nu)
    alphas = am * np.arange(1, N + 1) / N
    solutions: list = [None] * N
    t_ws = np.zeros(gram.p)
    for k in range(N - 1, -1, -1):
        prob = WeightedLassoProblem(gram=gram, beta_hat=beta_hat, nu=nu, alpha=float(alphas[k]))
        sol = solve(prob, tol=tol, max_iter=max_iter, warm_start=t_ws)
        solutions[k] = sol
        t_ws = sol.t_hat
    return LassoPath(gram=gram, beta_hat=beta_hat, nu=nu, alphas=alphas, solutions=solutions)


def select_alpha_oracle(lasso_path: LassoPath, f_true: GridFunction,
                        d: Dictionary) -> tuple[int, float]:
    """Index of the path point minimizing ||f_t - f_true||_2 (first minimum)."""
    if lasso_path.N == 0:
        raise ValueError("empty path")
    errors = np.array([(d.synthesize(sol.t_hat) - f_true).norm2()
                       for sol in lasso_path.solutions])
    k = int(np.argmin(errors))
    return k, float(errors[k])


def select_alpha_cv(lasso_path: LassoPath, Q: DiscreteOperator, q_hat: GridFunction,
                    sigma: float, n: int, d: Dictionary) -> int:
    """Data-driven index: prediction fit against q_hat plus a dimension penalty.

    Minimizes ||Q f_t(alpha_k) - q_hat||_2^2 + 2 sigma^2 n^(-1) p_hat_k where
    p_hat_k is the active-set size; exact ties go to the larger k (stronger
    penalty).
    """
    if lasso_path.N == 0:
        raise ValueError("empty path")
    crit = np.empty(lasso_path.N)
    for k, sol in enumerate(lasso_path.solutions):
        resid = apply(Q, d.synthesize(sol.t_hat)) - q_hat
        crit[k] = inner_product(resid, resid) + 2.0 * sigma**2 / n * sol.n_active
    best = np.flatnonzero(crit == crit.min())
    return int(best[-1])


def save_path_csv(lasso_path: LassoPath, path_file, errors=None) -> None:
    """Write (k, alpha_k, n_active, objective, kkt_residual[, error]) rows."""
    with open(path_file, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["k", "alpha", "n_active", "objective", "kkt_residual", "converged"]
        if errors is not None:
            header.append("error")
        writer.writerow(header)
        for k, sol in enumerate(lasso_path.solutions):
            row = [k + 1, repr(float(lasso_path.alphas[k])), sol.n_active,
                   repr(float(sol.objective_value)), repr(float(sol.kkt_residual)), int(sol.converged)]
            if errors is not None:
                row.append(repr(float(errors[k])))
            writer.writerow(row)
