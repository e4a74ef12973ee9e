"""Dictionary compatibility diagnostics: restricted eigenvalues, coherence,
cone constants and sample-size thresholds.

These quantify when the weighted Lasso attains fast rates: restricted
eigenvalues and mutual coherence feed the two incoherence conditions

    (a)  lambda_min(s+m) > C0 * lambda_max(m)
    (b)  rho < 1 / (s (2 C0 + 1))

which in turn bound the cone compatibility constant kappa^2(mu, J) from below
by theta(s, m).  Restricted eigenvalues are computed exactly by support
enumeration, so a guard caps the combinatorial size; kappa^2 itself is
estimated by sampling cone directions (an upper estimate, not a certificate).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .dictionary import GramMatrix
from .grids import GridFunction
from .inversion import InverseImages, WeightVector

ENUMERATION_LIMIT = 10**6


@dataclass(frozen=True)
class CompatibilityReport:
    """Everything the incoherence conditions say about a (Phi, nu, s, m) tuple."""

    s: int
    m: int
    mu: float
    c_ups: float
    lambda_min_sm: float
    lambda_max_m: float
    rho: float
    a2a_holds: bool
    a2b_holds: bool
    theta_sm: float
    kappa0: float
    kappa2_estimate: float | None = None

    def as_dict(self) -> dict:
        return {
            "s": self.s, "m": self.m, "mu": self.mu, "c_ups": self.c_ups,
            "lambda_min_sm": self.lambda_min_sm, "lambda_max_m": self.lambda_max_m,
            "rho": self.rho, "a2a_holds": self.a2a_holds, "a2b_holds": self.a2b_holds,
            "theta_sm": self.theta_sm, "kappa0": self.kappa0,
            "kappa2_estimate": self.kappa2_estimate,
        }


def restricted_eigs(phi: GramMatrix, m: int) -> tuple[float, float]:
    """Exact extreme eigenvalues over all supports of size <= m.

    By eigenvalue interlacing the extrema over supports of size <= m are
    attained at size exactly m, so only C(p, m) principal submatrices are
    visited; sizes beyond ENUMERATION_LIMIT are refused (use a sub-dictionary
    or the sampled kappa^2 estimate instead).
    """
    p = phi.p
    if not 1 <= m <= p:
        raise ValueError(f"need 1 <= m <= {p}, got m={m}")
    n_supports = comb(p, m)
    if n_supports > ENUMERATION_LIMIT:
        raise ValueError(
            f"C({p},{m}) = {n_supports} supports exceed the enumeration guard "
            f"({ENUMERATION_LIMIT}); diagnose a sub-dictionary instead"
        )
    E = phi.entries
    if m == 1:
        diag = np.diag(E)
        return float(diag.min()), float(diag.max())
    lo, hi = np.inf, -np.inf
    for support in combinations(range(p), m):
        idx = np.asarray(support)
        vals = np.linalg.eigvalsh(E[np.ix_(idx, idx)])
        lo = min(lo, vals[0])
        hi = max(hi, vals[-1])
    return float(lo), float(hi)


def max_offdiag(phi: GramMatrix) -> float:
    """Mutual coherence rho = max_{j != k} |Phi_jk|."""
    if phi.p < 2:
        raise ValueError("coherence needs at least two columns")
    E = np.abs(phi.entries.copy())
    np.fill_diagonal(E, 0.0)
    return float(E.max())


def check_incoherence(phi: GramMatrix, s: int, m: int, c0: float) -> tuple[bool, bool]:
    """Evaluate the two incoherence conditions for (s, m, C0)."""
    if not 1 <= s <= phi.p / 2:
        raise ValueError(f"need 1 <= s <= p/2 = {phi.p / 2}, got s={s}")
    if m < s:
        raise ValueError("need m >= s")
    lam_min_sm, _ = restricted_eigs(phi, s + m)
    _, lam_max_m = restricted_eigs(phi, m)
    a2a = lam_min_sm > c0 * lam_max_m
    a2b = max_offdiag(phi) < 1.0 / (s * (2.0 * c0 + 1.0))
    return bool(a2a), bool(a2b)


def compatibility_bound(phi: GramMatrix, s: int, m: int, mu: float,
                        c_ups: float) -> tuple[float, bool]:
    """Lower bound theta(s, m) on kappa^2(mu, J) for J with |J| <= s.

    With C0 = mu * c_ups, returns

        lambda_min(s+m) (1 - mu c_ups sqrt(s lambda_max(m) / (m lambda_min(s+m))))^2

    when condition (a) holds, else 1 - 1/(s (2 mu c_ups + 1)) under condition
    (b), else 0 with a no-bound flag.
    """
    c0 = mu * c_ups
    lam_min_sm, _ = restricted_eigs(phi, s + m)
    _, lam_max_m = restricted_eigs(phi, m)
    a2a, a2b = check_incoherence(phi, s, m, c0)
    if a2a:
        ratio = mu * c_ups * np.sqrt(s * lam_max_m) / np.sqrt(m * lam_min_sm)
        return float(lam_min_sm * (1.0 - ratio) ** 2), True
    if a2b:
        return float(1.0 - 1.0 / (s * (2.0 * mu * c_ups + 1.0))), True
    return 0.0, False


def kappa2_estimate(phi: GramMatrix, nu: WeightVector, mu: float, J,
                    n_dirs: int = 10_000, seed: int = 0) -> float:
    """Sampled upper estimate of the cone constant kappa^2(mu, J).

    Directions d are drawn with d_J standard normal and d_{J^c} rescaled into
    the cone ||(U d)_{J^c}||_1 <= mu ||(U d)_J||_1 (U = diag(nu)); the
    coordinate directions e_j, j in J, are always included.  The reported
    minimum of

        d' Phi d * Tr(U_J^2) / ||(U d)_J||_1^2

    can only decrease as n_dirs grows; it is an estimate, not a certificate.
    """
    if mu <= 1:
        raise ValueError("mu must exceed 1")
    J = np.asarray(sorted(set(int(j) for j in J)), dtype=int)
    p = phi.p
    if J.size == 0 or J.min() < 0 or J.max() >= p:
        raise ValueError("J must be a nonempty subset of 0..p-1")
    Jc = np.setdiff1d(np.arange(p), J)
    nuv = nu.nu
    tr_J = float(np.sum(nuv[J] ** 2))
    E = phi.entries
    rng = np.random.default_rng(seed)

    def ratio(d):
        on_J = float(np.sum(nuv[J] * np.abs(d[J])))
        if on_J == 0.0:
            return np.inf
        return float(d @ (E @ d)) * tr_J / on_J**2

    best = np.inf
    for j in J:
        e = np.zeros(p)
        e[j] = 1.0
        best = min(best, ratio(e))
    for _ in range(int(n_dirs)):
        d = np.zeros(p)
        d[J] = rng.standard_normal(J.size)
        on_J = np.sum(nuv[J] * np.abs(d[J]))
        if Jc.size and on_J > 0:
            raw = rng.standard_normal(Jc.size)
            l1 = np.sum(nuv[Jc] * np.abs(raw))
            if l1 > 0:
                d[Jc] = raw * (rng.random() * mu * on_J / l1)
        best = min(best, ratio(d))
    return best


def check_diag_dominance(phi: GramMatrix) -> float:
    """kappa0 = max_j' sum_{j != j'} |Phi_jj'|; below 1, lambda_min >= 1 - kappa0."""
    E = np.abs(phi.entries.copy())
    np.fill_diagonal(E, 0.0)
    return float(np.max(np.sum(E, axis=0)))


def weight_balance(nu: WeightVector, J) -> float:
    """Smallest C for which J belongs to the balanced family: max nu_J / min-off ratio.

    Returns max_{j in J, j' not in J} nu_j / nu_j'.
    """
    J = np.asarray(sorted(set(int(j) for j in J)), dtype=int)
    p = nu.nu.size
    if J.size == 0 or J.size == p:
        raise ValueError("J must be a proper nonempty subset")
    Jc = np.setdiff1d(np.arange(p), J)
    return float(np.max(nu.nu[J]) / np.min(nu.nu[Jc]))


def compute_aleph(q: GridFunction, inv: InverseImages, nu: WeightVector) -> float:
    """Smoothness functional max_j (1/nu_j) max_x |d(q psi_j)/dx|.

    The derivative uses central differences (one-sided at the endpoints) of
    the grid samples of q * psi_j.
    """
    if q.grid.n_nodes != inv.grid.n_nodes or not np.array_equal(q.grid.nodes, inv.grid.nodes):
        raise ValueError("q must live on the inverse-image grid")
    prod = inv.psi * q.values[:, None]
    deriv = np.gradient(prod, q.grid.nodes, axis=0)
    return float(np.max(np.max(np.abs(deriv), axis=0) / nu.nu))


def sample_size_thresholds(T: float, aleph: float, sigma: float, tau: float,
                           p: int, spacing_factor: float = 1.0) -> tuple[float, float]:
    """Observation counts above which the observational / mixture rates kick in.

    Returns (N_obs, N0_mix) with K0 = 8 * spacing_factor^2:

        N_obs  = T^4 aleph^2 / (4 K0 sigma^2 (tau+1) log p)
        N0_mix = (16/9) (tau+1) log p
    """
    if min(T, sigma, tau, spacing_factor) <= 0 or p < 2 or aleph < 0:
        raise ValueError("thresholds need positive T, sigma, tau, spacing factor and p >= 2")
    logp = np.log(p)
    K0 = 8.0 * spacing_factor**2
    n_obs = T**4 * aleph**2 / (4.0 * K0 * sigma**2 * (tau + 1.0) * logp)
    n0_mix = 16.0 / 9.0 * (tau + 1.0) * logp
    return float(n_obs), float(n0_mix)


def diagnose(phi: GramMatrix, nu: WeightVector, s: int, m: int, mu: float, J,
             n_dirs: int = 0, seed: int = 0) -> CompatibilityReport:
    """Assemble the full compatibility report for a candidate support J."""
    c_ups = weight_balance(nu, J)
    c0 = mu * c_ups
    lam_min_sm, _ = restricted_eigs(phi, s + m)
    _, lam_max_m = restricted_eigs(phi, m)
    a2a, a2b = check_incoherence(phi, s, m, c0)
    theta, _ = compatibility_bound(phi, s, m, mu, c_ups)
    kappa2 = kappa2_estimate(phi, nu, mu, J, n_dirs=n_dirs, seed=seed) if n_dirs > 0 else None
    return CompatibilityReport(
        s=s, m=m, mu=mu, c_ups=c_ups,
        lambda_min_sm=lam_min_sm, lambda_max_m=lam_max_m,
        rho=max_offdiag(phi), a2a_holds=a2a, a2b_holds=a2b,
        theta_sm=theta, kappa0=check_diag_dominance(phi),
        kappa2_estimate=kappa2,
    )


def format_report(report: CompatibilityReport) -> str:
    """Flat key=value text block."""
    lines = []
    for key, value in report.as_dict().items():
        if isinstance(value, bool):
            value = int(value)
        lines.append(f"{key}={value}")
    return "\n".join(lines)


def save_report_csv(report: CompatibilityReport, path) -> None:
    items = report.as_dict()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(items.keys()))
        writer.writerow([int(v) if isinstance(v, bool) else v for v in items.values()])
