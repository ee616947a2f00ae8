import numpy as np
import pytest

from conftest import pmap
from pesuff.dependence import (
    draw_index_matrix,
    k_from_probabilities,
    k_self,
    k_statistic,
    surrogate_ensemble,
)
from pesuff.errors import DegenerateDataError, InvalidArgumentError
from pesuff.ordinal import SegmentConfig

CFG3 = SegmentConfig(3, 1)
CFG4 = SegmentConfig(4, 1)


def _pair(seed, n=2000):
    g = np.random.default_rng(seed)
    return g.normal(size=n), g.normal(size=n)


class TestSurrogateEnsemble:
    def test_iid_means_are_uniform(self):
        for seed in range(10):
            g = np.random.default_rng(seed)
            x, y = g.normal(size=6000), g.normal(size=6000)
            ens = surrogate_ensemble(x, y, CFG3, replications=500, seed=seed)
            assert np.all(np.abs(ens.per_pattern_mean - 1.0 / 6.0) < 0.01)
            assert abs(ens.per_pattern_mean.sum() - 1.0) < 1e-9

    def test_deterministic_given_seed(self):
        x, y = _pair(5)
        a = surrogate_ensemble(x, y, CFG3, 100, seed=9)
        b = surrogate_ensemble(x, y, CFG3, 100, seed=9)
        assert np.array_equal(a.per_pattern_mean, b.per_pattern_mean)
        assert np.array_equal(a.per_pattern_sd, b.per_pattern_sd)

    def test_sd_positive_on_modest_samples(self):
        g = np.random.default_rng(11)
        x = g.normal(size=150)
        y = g.normal(size=150)
        ens = surrogate_ensemble(x, y, CFG3, 200, seed=0)
        assert np.all(ens.per_pattern_sd > 0)

    def test_needs_two_replications(self):
        x, y = _pair(0, n=400)
        with pytest.raises(InvalidArgumentError):
            surrogate_ensemble(x, y, CFG3, replications=1, seed=0)

    def test_permutation_switch(self):
        x, y = _pair(3)
        ens = surrogate_ensemble(x, y, CFG3, 200, seed=1, replace=False)
        assert np.all(np.abs(ens.per_pattern_mean - 1.0 / 6.0) < 0.02)

    def test_index_matrix_per_replication_streams(self):
        idx = draw_index_matrix(100, 50, 4, seed=3)
        wider = draw_index_matrix(100, 50, 8, seed=3)
        # extending the replication count must not change earlier rows
        assert np.array_equal(idx, wider[:4])


class TestKStatistic:
    def test_zero_when_observed_matches_ensemble(self):
        p = np.full(6, 1.0 / 6.0)
        sd = np.full(6, 0.01)
        k, contributions, excluded = k_from_probabilities(p, p.copy(), sd)
        assert k == 0.0
        assert np.all(contributions == 0.0)
        assert not excluded.any()

    def test_k_matches_contract(self):
        x, y = _pair(21)
        res = k_statistic(x, y, CFG3, 100, seed=2)
        keep = ~res.excluded
        assert res.k_value == pytest.approx(res.contributions[keep].sum())
        z = (res.observed.probabilities[keep] - res.ensemble.per_pattern_mean[keep]) / res.ensemble.per_pattern_sd[keep]
        assert np.allclose(res.contributions[keep], z * z)

    def test_nonnegative(self):
        for seed in range(5):
            x, y = _pair(seed, n=900)
            assert k_statistic(x, y, CFG3, 100, seed=seed).k_value >= 0.0

    def test_bitwise_reproducible(self):
        x, y = _pair(8)
        a = k_statistic(x, y, CFG4, 150, seed=4)
        b = k_statistic(x, y, CFG4, 150, seed=4)
        assert a.k_value == b.k_value
        assert np.array_equal(a.contributions, b.contributions)

    def test_null_below_paper_critical_value(self):
        hits = pmap(_null_k_below_40, list(range(150)), chunksize=10)
        assert np.mean(hits) >= 0.92

    def test_perfect_coupling_always_detected(self):
        rates = pmap(_coupled_k, list(range(100)), chunksize=10)
        assert all(k > 40.0 for k in rates)

    def test_affine_invariance_of_k(self):
        x, y = _pair(33)
        base = k_statistic(x, y, CFG3, 100, seed=6)
        moved = k_statistic(3.0 * x + 2.0, 3.0 * y - 5.0, CFG3, 100, seed=6)
        assert np.array_equal(base.observed.counts, moved.observed.counts)
        assert base.k_value == moved.k_value

    def test_marginal_free_null_distribution(self):
        gauss = pmap(_null_k_gaussian, list(range(120)), chunksize=10)
        unif = pmap(_null_k_uniform, list(range(120)), chunksize=10)
        q_g, q_u = np.quantile(gauss, 0.95), np.quantile(unif, 0.95)
        assert abs(q_g - q_u) / q_g < 0.25

    @pytest.mark.xfail(
        reason="the null K distribution is not fully marginal-free at finite N: "
        "strong skew concentrates pattern mass and shrinks the statistic "
        "(see decisions ledger); symmetric marginals do transfer",
        strict=False,
    )
    def test_marginal_free_null_extends_to_skewed_marginals(self):
        gauss = pmap(_null_k_gaussian, list(range(120)), chunksize=10)
        expo = pmap(_null_k_exponential, list(range(120)), chunksize=10)
        q_g, q_e = np.quantile(gauss, 0.95), np.quantile(expo, 0.95)
        assert abs(q_g - q_e) / q_g < 0.25

    def test_k_self_is_self_pairing(self):
        g = np.random.default_rng(12)
        r = g.normal(size=900)
        assert k_self(r, CFG3, 100, seed=3).k_value == k_statistic(r, r, CFG3, 100, seed=3).k_value

    def test_constant_series_degenerate(self):
        with pytest.raises(DegenerateDataError):
            k_self(np.full(900, 2.0), CFG3, 100, seed=0)


def _null_k_below_40(seed):
    g = np.random.default_rng(1000 + seed)
    x, y = g.normal(size=6360), g.normal(size=6360)
    return k_statistic(x, y, CFG4, 200, seed=seed).k_value < 40.0


def _coupled_k(seed):
    g = np.random.default_rng(2000 + seed)
    x = g.uniform(size=6360)
    y = np.concatenate(([0.0], x[:-1]))
    return k_statistic(x, y, CFG4, 200, seed=seed).k_value


def _null_k_gaussian(seed):
    g = np.random.default_rng(3000 + seed)
    return k_statistic(g.normal(size=2000), g.normal(size=2000), CFG3, 200, seed=seed).k_value


def _null_k_exponential(seed):
    g = np.random.default_rng(4000 + seed)
    return k_statistic(g.exponential(size=2000), g.exponential(size=2000), CFG3, 200, seed=seed).k_value


def _null_k_uniform(seed):
    g = np.random.default_rng(5000 + seed)
    return k_statistic(g.uniform(size=2000), g.uniform(size=2000), CFG3, 200, seed=seed).k_value
