from itertools import combinations

import numpy as np
import pytest

from dictinv.dictionary import GramMatrix, build_dictionary, coherence_bound, gram
from dictinv.diagnostics import (
    check_diag_dominance,
    check_incoherence,
    compatibility_bound,
    compute_aleph,
    diagnose,
    format_report,
    kappa2_estimate,
    max_offdiag,
    restricted_eigs,
    sample_size_thresholds,
    save_report_csv,
    weight_balance,
)
from dictinv.grids import GridFunction, make_uniform_grid
from dictinv.inversion import InverseImages, WeightVector


def wv(values):
    return WeightVector(np.asarray(values, dtype=float), "white_noise")


def corr(p, rho):
    E = np.full((p, p), rho)
    np.fill_diagonal(E, 1.0)
    return GramMatrix(E)


def random_gram(rng, p):
    G = rng.standard_normal((p + 3, p))
    Phi = G.T @ G
    dd = np.sqrt(np.diag(Phi))
    return GramMatrix(Phi / np.outer(dd, dd))


class TestRestrictedEigs:
    def test_identity(self):
        phi = GramMatrix(np.eye(6))
        for m in (1, 2, 4):
            assert restricted_eigs(phi, m) == (1.0, 1.0)

    def test_two_by_two(self):
        lo, hi = restricted_eigs(corr(2, 0.5), 2)
        assert lo == pytest.approx(0.5, rel=1e-12)
        assert hi == pytest.approx(1.5, rel=1e-12)

    def test_m_one_unit_diagonal(self):
        rng = np.random.default_rng(0)
        lo, hi = restricted_eigs(random_gram(rng, 7), 1)
        assert lo == pytest.approx(1.0, abs=1e-12)
        assert hi == pytest.approx(1.0, abs=1e-12)

    def test_matches_brute_enumeration(self):
        # independent oracle: eigensolves over all supports via itertools
        rng = np.random.default_rng(1)
        phi = random_gram(rng, 10)
        for m in (2, 3):
            lo, hi = restricted_eigs(phi, m)
            vals = []
            for support in combinations(range(10), m):
                sub = phi.entries[np.ix_(support, support)]
                vals.extend(np.linalg.eigvalsh(sub))
            assert lo == pytest.approx(min(vals), abs=1e-10)
            assert hi == pytest.approx(max(vals), abs=1e-10)

    def test_monotone_in_support_size(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            phi = random_gram(rng, 10)
            lows, highs = zip(*(restricted_eigs(phi, m) for m in (1, 2, 3)))
            assert lows[0] >= lows[1] >= lows[2]
            assert highs[0] <= highs[1] <= highs[2]

    def test_enumeration_guard(self):
        phi = GramMatrix(np.eye(400))
        with pytest.raises(ValueError, match="enumeration guard"):
            restricted_eigs(phi, 5)

    def test_bad_m(self):
        with pytest.raises(ValueError):
            restricted_eigs(GramMatrix(np.eye(3)), 0)


class TestMaxOffdiag:
    def test_identity(self):
        assert max_offdiag(GramMatrix(np.eye(5))) == 0.0

    def test_laguerre_pair(self):
        # a two-element dictionary {phi_{0,1}, phi_{0,4}} has coherence 0.8
        from dictinv.dictionary import Dictionary, laguerre_monomial, truncation_tail

        g = make_uniform_grid(0, 60, 6001)
        cols = np.stack([laguerre_monomial(0, b, g).values for b in (1.0, 4.0)], axis=1)
        d = Dictionary(grid=g, labels=((0, 1.0), (0, 4.0)), columns=cols,
                       tails=np.array([truncation_tail(0, b, 60.0) for b in (1.0, 4.0)]))
        rho = max_offdiag(gram(d))
        assert rho == pytest.approx(0.8, abs=2e-3)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(3)
        phi = random_gram(rng, 6)
        perm = rng.permutation(6)
        permuted = GramMatrix(phi.entries[np.ix_(perm, perm)])
        assert max_offdiag(permuted) == pytest.approx(max_offdiag(phi), rel=1e-15)

    def test_needs_two_columns(self):
        with pytest.raises(ValueError):
            max_offdiag(GramMatrix(np.eye(1)))


class TestIncoherence:
    def test_identity_always_passes(self):
        phi = GramMatrix(np.eye(8))
        a2a, a2b = check_incoherence(phi, s=2, m=2, c0=0.5)
        assert a2a and a2b

    def test_a2b_plugin(self):
        # rho = 0.05 < 1/(s(2 c0 + 1)) = 1/10 for s=2, c0=2
        a2a, a2b = check_incoherence(corr(8, 0.05), s=2, m=2, c0=2.0)
        assert a2b

    def test_a2a_failure_two_by_two(self):
        a2a, _ = check_incoherence(corr(2, 0.5), s=1, m=1, c0=1.0)
        assert not a2a    # lambda_min(2) = 0.5 < 1 = lambda_max(1)

    def test_parameter_validation(self):
        phi = GramMatrix(np.eye(4))
        with pytest.raises(ValueError):
            check_incoherence(phi, s=3, m=3, c0=1.0)     # s > p/2
        with pytest.raises(ValueError):
            check_incoherence(phi, s=2, m=1, c0=1.0)     # m < s


class TestCompatibilityBound:
    def test_a2b_branch(self):
        # rho = 0.1: condition (a) fails for c0 = mu*c_ups = 2, (b) holds,
        # giving theta = 1 - 1/(s (2 mu c_ups + 1)) = 0.8
        theta, ok = compatibility_bound(corr(2, 0.1), s=1, m=1, mu=2.0, c_ups=1.0)
        assert ok
        assert theta == pytest.approx(0.8, rel=1e-12)

    def test_identity_zero_coherence_limit(self):
        theta, ok = compatibility_bound(GramMatrix(np.eye(6)), s=2, m=2, mu=2.0, c_ups=0.0)
        assert ok
        assert theta == pytest.approx(1.0, rel=1e-12)

    def test_no_bound_flag(self):
        theta, ok = compatibility_bound(corr(4, 0.45), s=2, m=2, mu=3.0, c_ups=2.0)
        assert not ok
        assert theta == 0.0


class TestKappa2:
    def test_orthonormal_singleton(self):
        phi = GramMatrix(np.eye(10))
        est = kappa2_estimate(phi, wv(np.ones(10)), mu=2.0, J=[0], n_dirs=2000, seed=0)
        assert 1.0 <= est <= 1.01

    def test_weight_scaling_invariance(self):
        rng = np.random.default_rng(4)
        phi = random_gram(rng, 8)
        nu1 = rng.uniform(0.5, 2.0, 8)
        a = kappa2_estimate(phi, wv(nu1), mu=2.0, J=[1, 3], n_dirs=500, seed=7)
        b = kappa2_estimate(phi, wv(5.0 * nu1), mu=2.0, J=[1, 3], n_dirs=500, seed=7)
        assert a == pytest.approx(b, rel=1e-12)

    def test_full_support_vacuous_cone(self):
        rng = np.random.default_rng(5)
        phi = random_gram(rng, 5)
        nu = wv(np.ones(5))
        est = kappa2_estimate(phi, nu, mu=2.0, J=list(range(5)), n_dirs=300, seed=1)
        # reproduce the sampled minimum independently
        rng2 = np.random.default_rng(1)
        tr = 5.0
        best = min(
            float(e @ (phi.entries @ e)) * tr / 1.0
            for e in np.eye(5)
        )
        for _ in range(300):
            dd = rng2.standard_normal(5)
            on = np.sum(np.abs(dd))
            best = min(best, float(dd @ (phi.entries @ dd)) * tr / on**2)
        assert est == pytest.approx(best, rel=1e-12)

    def test_deterministic_and_monotone_in_n_dirs(self):
        rng = np.random.default_rng(6)
        phi = random_gram(rng, 7)
        nu = wv(rng.uniform(0.5, 2.0, 7))
        a1 = kappa2_estimate(phi, nu, mu=3.0, J=[0, 2], n_dirs=200, seed=11)
        a2 = kappa2_estimate(phi, nu, mu=3.0, J=[0, 2], n_dirs=200, seed=11)
        assert a1 == a2
        a3 = kappa2_estimate(phi, nu, mu=3.0, J=[0, 2], n_dirs=2000, seed=11)
        assert a3 <= a1

    def test_bad_inputs(self):
        phi = GramMatrix(np.eye(4))
        with pytest.raises(ValueError):
            kappa2_estimate(phi, wv(np.ones(4)), mu=1.0, J=[0])
        with pytest.raises(ValueError):
            kappa2_estimate(phi, wv(np.ones(4)), mu=2.0, J=[])


class TestDiagDominance:
    def test_identity(self):
        assert check_diag_dominance(GramMatrix(np.eye(4))) == 0.0

    def test_two_by_two(self):
        k0 = check_diag_dominance(corr(2, 0.5))
        assert k0 == pytest.approx(0.5)
        lo, _ = restricted_eigs(corr(2, 0.5), 2)
        assert lo >= 1.0 - k0 - 1e-12

    def test_three_by_three(self):
        assert check_diag_dominance(corr(3, 0.4)) == pytest.approx(0.8, rel=1e-12)


class TestWeightBalance:
    def test_direct(self):
        assert weight_balance(wv([1.0, 2.0, 4.0]), [0]) == pytest.approx(0.5)

    def test_constant_weights(self):
        assert weight_balance(wv(np.ones(5)), [1, 3]) == 1.0

    def test_max_index_in_J(self):
        nu = wv([1.0, 5.0, 2.0])
        assert weight_balance(nu, [1]) >= 1.0

    def test_proper_subset_required(self):
        with pytest.raises(ValueError):
            weight_balance(wv(np.ones(3)), [])
        with pytest.raises(ValueError):
            weight_balance(wv(np.ones(3)), [0, 1, 2])


class TestAleph:
    def test_constant_product(self):
        g = make_uniform_grid(0, 10, 101)
        inv = InverseImages(grid=g, psi=np.ones((101, 1)), residuals=np.zeros(1))
        q = g.function(1.0)
        assert compute_aleph(q, inv, wv([10.0])) <= 1e-15

    def test_linear_q(self):
        g = make_uniform_grid(0, 1, 101)
        inv = InverseImages(grid=g, psi=np.ones((101, 1)), residuals=np.zeros(1))
        q = g.sample(lambda x: x)
        assert compute_aleph(q, inv, wv([1.0])) == pytest.approx(1.0, rel=1e-12)

    def test_scaling_in_q(self):
        g = make_uniform_grid(0, 1, 201)
        rng = np.random.default_rng(7)
        psi = rng.standard_normal((201, 3))
        inv = InverseImages(grid=g, psi=psi, residuals=np.zeros(3))
        nu = wv([1.0, 2.0, 0.5])
        q = g.sample(lambda x: np.sin(3 * x))
        a1 = compute_aleph(q, inv, nu)
        a2 = compute_aleph(GridFunction(g, -2.5 * q.values), inv, nu)
        assert a2 == pytest.approx(2.5 * a1, rel=1e-12)


class TestSampleSizeThresholds:
    def test_mixture_threshold(self):
        _, n0 = sample_size_thresholds(T=10.0, aleph=1.0, sigma=1.0, tau=1.0, p=400)
        assert n0 == pytest.approx(16.0 / 9.0 * 2.0 * np.log(400), rel=1e-12)
        assert n0 == pytest.approx(21.30, abs=5e-3)

    def test_zero_aleph(self):
        n_obs, _ = sample_size_thresholds(T=10.0, aleph=0.0, sigma=1.0, tau=1.0, p=400)
        assert n_obs == 0.0

    def test_observational_threshold(self):
        n_obs, _ = sample_size_thresholds(T=1.0, aleph=1.0, sigma=1.0, tau=1.0,
                                          p=400, spacing_factor=1.0)
        assert n_obs == pytest.approx(1.0 / (32.0 * 2.0 * np.log(400)), rel=1e-12)
        assert n_obs == pytest.approx(0.00261, abs=5e-5)


def test_default_dictionary_respects_coherence_bound():
    # cross-module property: grid Gram off-diagonals obey the analytic bound
    # on oriented pairs whose columns the grid actually resolves (tail mass
    # < 1e-12 on [0,60]); columns truncated by the grid get reshaped by the
    # renormalization and genuinely exceed the infinite-domain bound.
    g = make_uniform_grid(0, 60, 12001)
    d = build_dictionary(10, 40, 0.1, g)
    G = gram(d).entries
    controlled = d.tails < 1e-12
    violations = 0
    worst = -np.inf
    for j, (lj, bj) in enumerate(d.labels):
        if not controlled[j]:
            continue
        for k, (lk, bk) in enumerate(d.labels):
            if not controlled[k] or j == k or lj > lk or bj < bk:
                continue
            gap = abs(G[j, k]) - coherence_bound(lj, lk, bj, bk)
            worst = max(worst, gap)
            violations += gap > 1e-3
    assert violations == 0, f"worst gap {worst}"


def test_diagnose_and_report_roundtrip(tmp_path):
    rng = np.random.default_rng(8)
    phi = random_gram(rng, 6)
    nu = wv(rng.uniform(0.5, 2.0, 6))
    report = diagnose(phi, nu, s=1, m=2, mu=2.0, J=[0], n_dirs=300, seed=3)
    text = format_report(report)
    assert "theta_sm=" in text and "kappa0=" in text
    out = tmp_path / "report.csv"
    save_report_csv(report, out)
    lines = out.read_text().strip().splitlines()
    assert lines[0].startswith("s,m,mu,c_ups")
    assert len(lines) == 2
