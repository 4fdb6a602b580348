import math

import numpy as np
import pytest
from scipy import stats as ss

from adrcm import oracle, palm
from adrcm.kernel import IndicatorProfile, PolynomialProfile
from tests.conftest import make_params


def chi_square_poisson(counts, mean):
    counts = np.asarray(counts)
    k_hi = int(ss.poisson.ppf(0.999, mean)) + 1
    edges = [-0.5] + [k + 0.5 for k in range(k_hi)] + [math.inf]
    observed, _ = np.histogram(counts, bins=edges)
    expected = np.diff(ss.poisson.cdf(edges, mean)) * len(counts)
    keep = expected > 1.0
    chi2 = float(np.sum((observed[keep] - expected[keep]) ** 2 / expected[keep]))
    return 1.0 - ss.chi2.cdf(chi2, keep.sum() - 1)


class TestOlderSide:
    def test_count_poisson_with_truncated_mass(self, rng):
        params = make_params(beta=1.0, gamma=0.5, a=0.5)
        q = 0.99
        counts = [len(palm.sample_older(0.6, params, q=q, rng=rng)) for _ in range(20000)]
        assert chi_square_poisson(counts, q * 2.0) > 0.01

    def test_vanishing_intensity_gives_empty_sets(self, rng):
        params = make_params(beta=1e-9, gamma=0.5, a=0.5)
        assert all(
            len(palm.sample_older(0.5, params, q=0.99, rng=rng)) == 0 for _ in range(200)
        )

    @pytest.mark.parametrize("method", ["transform", "rejection", "stratified"])
    def test_age_marginal_matches_truncated_cdf(self, rng, method):
        params = make_params(beta=1.0, gamma=0.5, a=0.5)
        u, q, g = 0.7, 0.99, 0.5
        ages = np.concatenate(
            [
                palm.sample_older(u, params, q=q, rng=rng, method=method).ages
                for _ in range(4000)
            ]
        )
        cdf = lambda s: ((s / u) ** (1 - g) - (1 - q)) / q
        assert ss.kstest(ages, cdf).pvalue > 0.01

    def test_routes_statistically_indistinguishable(self, rng):
        params = make_params(beta=1.0, gamma=0.5, a=1.5)
        u, q = 0.5, 0.99

        def draw(method, n):
            ages, radii = [], []
            for _ in range(n):
                p = palm.sample_older(u, params, q=q, rng=rng, method=method)
                ages.extend(p.ages)
                radii.extend(p.radii)
            return np.asarray(ages), np.asarray(radii)

        ages_s, radii_s = draw("stratified", 5000)
        ages_r, radii_r = draw("rejection", 5000)
        assert ss.ks_2samp(ages_s, ages_r).pvalue > 0.01
        assert ss.ks_2samp(radii_s, radii_r).pvalue > 0.01

    def test_hard_support_bound_at_full_mass(self, rng):
        params = make_params(beta=1.0, gamma=0.5, a=0.5)
        for _ in range(2000):
            pts = palm.sample_older(0.3, params, q=1.0, rng=rng)
            if len(pts):
                bound = 0.5 * 1.0 * 0.3 ** (-0.5) * pts.ages ** (-0.5)
                assert np.all(pts.radii <= bound + 1e-12)

    def test_stratified_needs_truncation(self, rng):
        params = make_params()
        with pytest.raises(ValueError, match="q < 1"):
            palm.sample_older(0.5, params, q=1.0, rng=rng, method="stratified")


class TestYoungerSide:
    def test_zero_mass_interval_empty(self, rng):
        params = make_params()
        u = 0.5
        pts = palm.sample_younger(u, params, s0=u + 1e-12, q=1.0, rng=rng)
        assert len(pts) == 0

    def test_age_one_root_has_no_younger_neighbors(self, rng):
        params = make_params()
        assert len(palm.sample_younger(1.0, params, rng=rng)) == 0

    def test_bad_cutoff_rejected(self, rng):
        params = make_params()
        with pytest.raises(ValueError, match="exceed the root age"):
            palm.sample_younger(0.5, params, s0=0.4, rng=rng)
        with pytest.raises(ValueError, match="at most 1"):
            palm.sample_younger(0.5, params, s0=1.5, rng=rng)

    def test_mean_count_hand_case(self, rng):
        # beta (s0^g u^-g - 1)/g = (2 - 1)/0.5 = 2 at u=1/4
        params = make_params(beta=1.0, gamma=0.5, a=0.5)
        counts = [
            len(palm.sample_younger(0.25, params, s0=1.0, q=1.0, rng=rng))
            for _ in range(20000)
        ]
        se = np.std(counts, ddof=1) / math.sqrt(len(counts))
        assert abs(np.mean(counts) - 2.0) < 3 * se


class TestNeighborhood:
    def test_age_one_root_is_outdegree_only(self, rng):
        params = make_params()
        sample = palm.sample_neighborhood(params, q=0.99, rng=rng, root_age=1.0)
        assert len(sample.younger) == 0
        counts = [
            len(palm.sample_neighborhood(params, q=0.99, rng=rng, root_age=1.0).older)
            for _ in range(10000)
        ]
        assert chi_square_poisson(counts, 0.99 * 2.0) > 0.01

    def test_total_mean_degree_matches_lambda_u(self, rng):
        params = make_params(beta=1.0, gamma=0.5, a=0.5)
        # lambda_1 = 2 exactly at gamma = 1/2
        assert oracle.lambda_u(1.0, params) == pytest.approx(2.0)
        u, q = 0.4, 0.99
        degs = [
            palm.sample_neighborhood(params, q=q, rng=rng, root_age=u).degree
            for _ in range(20000)
        ]
        target = q * float(oracle.lambda_u(u, params))
        se = np.std(degs, ddof=1) / math.sqrt(len(degs))
        assert abs(np.mean(degs) - target) < 3 * se

    def test_older_younger_counts_uncorrelated(self, rng):
        params = make_params()
        pairs = np.array(
            [
                (len(s.older), len(s.younger))
                for s in (
                    palm.sample_neighborhood(params, q=0.99, rng=rng, root_age=0.3)
                    for _ in range(30000)
                )
            ]
        )
        cov = np.cov(pairs.T)[0, 1]
        se = np.sqrt(np.var(pairs[:, 0]) * np.var(pairs[:, 1]) / len(pairs))
        assert abs(cov) < 3 * se

    def test_outdegree_independent_of_root_age(self, rng):
        params = make_params()
        table = []
        k_hi = 7
        for decile in range(10):
            u = (decile + 0.5) / 10
            counts = [
                len(palm.sample_older(u, params, q=0.99, rng=rng)) for _ in range(4000)
            ]
            row = np.bincount(np.minimum(counts, k_hi), minlength=k_hi + 1)
            table.append(row)
        _, p, _, _ = ss.chi2_contingency(np.array(table))
        assert p > 0.01

    def test_indegree_mixture_matches_oracle(self, rng):
        params = make_params()
        q = 0.999
        counts = []
        for _ in range(60000):
            u = 1.0 - rng.random()
            counts.append(len(palm.sample_younger(u, params, s0=1.0, q=q, rng=rng)) if u < 1 else 0)
        counts = np.asarray(counts)
        mu = oracle.indegree_pmf_table(30, params)
        emp = np.bincount(np.minimum(counts, 31), minlength=32)[:31] / len(counts)
        tv = 0.5 * float(np.abs(emp - mu).sum())
        assert tv < 0.02


class TestPairProbability:
    def test_delegates_to_limit_kernel(self, rng):
        from adrcm.geometry import Vertex
        from adrcm.kernel import connection_probability

        params = make_params(beta=0.7, gamma=0.35, profile=PolynomialProfile(delta=2.0))
        for _ in range(300):
            x1, x2 = rng.normal(0, 2, (2, 1))
            s1, s2 = rng.uniform(0.01, 1.0, 2)
            if s1 == s2:
                continue
            got = palm.pair_connect_probability((x1, s1), (x2, s2), params)
            want = connection_probability(
                Vertex(position=x1, birth_time=max(s1, s2), id=1),
                Vertex(position=x2, birth_time=min(s1, s2), id=0),
                ModelParamsFree(params),
                "limit",
            )
            assert got == pytest.approx(want, rel=1e-12)

    def test_far_apart_indicator_pairs_disconnect(self):
        params = make_params()
        assert palm.pair_connect_probability(([100.0], 0.5), ([-100.0], 0.9), params) == 0.0

    def test_polynomial_hand_value(self):
        params = make_params(beta=1.0, gamma=0.5, profile=PolynomialProfile(delta=2.0))
        # ages 1 and 1/4, distance 0.8: arg = 1 * 0.5 * 0.8 = 0.4 -> prob 1
        assert palm.pair_connect_probability(([0.0], 1.0), ([0.8], 0.25), params) == 1.0
        # distance 10: arg = 5 -> 1/25
        assert palm.pair_connect_probability(([0.0], 1.0), ([10.0], 0.25), params) == (
            pytest.approx(1.0 / 25.0)
        )

    def test_equal_ages_rejected(self):
        with pytest.raises(ValueError):
            palm.pair_connect_probability(([0.0], 0.5), ([1.0], 0.5), make_params())


def ModelParamsFree(params):
    """Same parameters viewed in free space, for the delegation check."""
    from adrcm.geometry import Space
    from adrcm.kernel import ModelParams

    return ModelParams(
        beta=params.beta, gamma=params.gamma, profile=params.profile, space=Space(params.space.d, math.inf)
    )


class TestClusteringEstimators:
    def test_output_always_a_probability(self, rng):
        params = make_params()
        for u in (0.1, 0.5, 1.0):
            est = palm.estimate_local_clustering(u, params, 500, q=0.99, rng=rng)
            assert 0.0 <= est.value <= 1.0

    def test_monotone_decreasing_in_width(self, rng):
        values = []
        for a in (1.0, 2.0, 4.0, 8.0):
            params = make_params(beta=0.7, gamma=0.3, a=a)
            values.append(
                palm.estimate_average_clustering(params, 250, 250, q=0.99, rng=rng).value
            )
        assert all(x > y for x, y in zip(values, values[1:]))

    def test_matches_quadrature_oracle(self, rng):
        params = make_params(beta=0.7, gamma=0.3, a=1.0)
        for u in (0.25, 0.8):
            est = palm.estimate_local_clustering(u, params, 60000, q=0.99, rng=rng)
            target = oracle.local_clustering_quadrature(u, params, q=0.99)
            assert abs(est.value - target) < 3 * est.stderr + 1e-3

    def test_pi_sampled_root_ages_match_cdf(self, rng):
        params = make_params(beta=0.7, gamma=0.3, a=1.0)
        us = palm.sample_pi_root_ages(params, 15000, rng)
        cdf = lambda x: np.array([oracle.pi_cdf(float(v), params) for v in np.atleast_1d(x)])
        assert ss.kstest(us, cdf).pvalue > 0.01

    def test_average_clustering_bounds_and_errors(self, rng):
        params = make_params()
        est = palm.estimate_average_clustering(params, 50, 50, rng=rng)
        assert 0.0 <= est.value <= 1.0
        with pytest.raises(ValueError):
            palm.estimate_local_clustering(0.5, params, 0, rng=rng)
        with pytest.raises(ValueError):
            palm.estimate_average_clustering(params, 0, 10, rng=rng)
