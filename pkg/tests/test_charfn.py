"""Characteristic-function machinery tests.

Exact identities are checked against independent brute-force double sums;
Monte Carlo quantities carry their own standard errors and are asserted
within 4-sigma bands.
"""

import math

import numpy as np
import pytest
from scipy import stats

from assoclab.charfn import (
    INTEGRAL_CONSTANT,
    TAIL_CONSTANT,
    SmoothingParameters,
    block_covariance,
    block_covariance_identity,
    cf_product_deviation,
    empirical_cf,
    esseen_distance_bound,
    newman_check,
    truncation_frequency,
)
from assoclab.models import (
    InnovationLaw,
    MAModel,
    autocovariance,
    geometric_weights,
    partial_sum_variance,
)
from assoclab.simulate import MCConfig, make_block_scheme, path_from_rng

GAUSS = InnovationLaw.gaussian()
EXPO = InnovationLaw.exponential(1.0)
GEO = MAModel(geometric_weights(0.5, 30), GAUSS)
IID = MAModel((1.0,), GAUSS)


class TestEmpiricalCF:
    def test_degenerate_samples(self):
        est = empirical_cf(np.zeros(100), 2.7)
        assert est.value == 1.0 + 0j and est.stderr == 0.0

    def test_zero_frequency_exact(self):
        rng = np.random.default_rng(1)
        est = empirical_cf(rng.standard_normal(1000), 0.0)
        assert est.value == 1.0 + 0j
        assert est.stderr == 0.0

    def test_normal_closed_form(self):
        rng = np.random.default_rng(2)
        est = empirical_cf(rng.standard_normal(1_000_000), 1.0)
        target = math.exp(-0.5)
        assert abs(est.value - target) <= 4 * est.stderr

    def test_modulus_never_exceeds_one(self):
        rng = np.random.default_rng(3)
        x = rng.standard_exponential(5000)
        for t in (0.1, 1.0, 7.0, -3.0):
            est = empirical_cf(x, t)
            assert abs(est.value) <= 1.0 + 3 * est.stderr

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            empirical_cf([], 1.0)


class TestBlockCovariance:
    def test_iid_cross_blocks_zero(self):
        scheme = make_block_scheme(64, 0.5)
        assert block_covariance(IID, scheme, 1, 2) == 0.0
        assert block_covariance(IID, scheme, 3, 7) == 0.0

    def test_diagonal_is_block_variance(self):
        scheme = make_block_scheme(256, 0.5)
        for model in (IID, GEO):
            got = block_covariance(model, scheme, 2, 2)
            assert got == pytest.approx(
                partial_sum_variance(model, scheme.block_len), rel=1e-12
            )

    def test_adjacent_blocks_brute_force(self):
        # p = 2 adjacent blocks {1,2} and {3,4}: sum of c_|a-b| over 4 pairs
        scheme = make_block_scheme(12, 0.70)
        assert scheme.block_len == 2
        got = block_covariance(GEO, scheme, 2, 1)
        brute = sum(
            autocovariance(GEO, abs(a - b)) for a in (3, 4) for b in (1, 2)
        )
        assert got == pytest.approx(brute, rel=1e-12)
        assert brute == pytest.approx(1.5, rel=1e-10)  # c_1 + 2c_2 + c_3 at rho=1/2

    def test_monte_carlo_cross_check(self):
        scheme = make_block_scheme(12, 0.70)
        R = 30_000
        rng = np.random.default_rng(8)
        cov_target = block_covariance(GEO, scheme, 2, 1)
        prods = np.empty(R)
        for r in range(R):
            path = path_from_rng(GEO, scheme.n, rng)
            y1 = path[0:2].sum()
            y2 = path[2:4].sum()
            prods[r] = y1 * y2
        se = prods.std(ddof=1) / math.sqrt(R)
        assert abs(prods.mean() - cov_target) <= 4 * se

    def test_index_validation(self):
        scheme = make_block_scheme(64, 0.5)
        with pytest.raises(ValueError):
            block_covariance(GEO, scheme, 0, 1)
        with pytest.raises(ValueError):
            block_covariance(GEO, scheme, 1, scheme.block_count + 1)


class TestBlockCovarianceIdentity:
    def test_iid_both_zero(self):
        scheme = make_block_scheme(64, 0.5)
        lhs, rhs = block_covariance_identity(IID, scheme)
        assert lhs == 0.0
        assert abs(rhs) <= 1e-10

    @pytest.mark.parametrize(
        "model,n,alpha",
        [
            (GEO, 64, 0.5),
            (MAModel((1.0, 1.0), GAUSS), 64, 0.5),
            (MAModel((1.0, 1.0), GAUSS), 100, 0.3),
            (MAModel(geometric_weights(0.9, 50), EXPO), 256, 0.5),
            (MAModel((2.0, 0.3, 0.0, 0.8), EXPO), 500, 0.6),
        ],
    )
    def test_two_exact_routes_agree(self, model, n, alpha):
        scheme = make_block_scheme(n, alpha)
        lhs, rhs = block_covariance_identity(model, scheme)
        scale = partial_sum_variance(model, scheme.block_count * scheme.block_len)
        assert abs(lhs - rhs) <= 1e-10 * scale


class TestNewmanCheck:
    def test_iid_gap_is_noise(self):
        scheme = make_block_scheme(128, 0.5)
        t_vec = np.full(scheme.block_count, 0.4)
        gap, bound = newman_check(IID, scheme, t_vec, MCConfig(replicates=20_000, master_seed=5))
        assert bound == 0.0
        assert gap.value <= 4 * gap.stderr

    def test_zero_frequencies_exact(self):
        scheme = make_block_scheme(128, 0.5)
        t_vec = np.zeros(scheme.block_count)
        gap, bound = newman_check(GEO, scheme, t_vec, MCConfig(replicates=1000, master_seed=6))
        assert gap.value == 0.0 and bound == 0.0

    def test_dependent_blocks_respect_bound(self):
        scheme = make_block_scheme(256, 0.5)
        t_vec = np.full(scheme.block_count, 0.3)
        gap, bound = newman_check(GEO, scheme, t_vec, MCConfig(replicates=20_000, master_seed=7))
        assert bound > 0.0
        assert gap.value <= bound + 4 * gap.stderr

    def test_dimension_mismatch(self):
        scheme = make_block_scheme(128, 0.5)
        with pytest.raises(ValueError):
            newman_check(GEO, scheme, [0.1, 0.2], MCConfig(replicates=10, master_seed=1))


class TestCFProductDeviation:
    def test_gaussian_blocks_match_target(self):
        # gaussian innovations: the marginal CF is exactly the gaussian target,
        # so the deviation is pure noise at the power-rule-amplified level
        scheme = make_block_scheme(1024, 0.5)
        dev, target = cf_product_deviation(GEO, scheme, 0.7, MCConfig(replicates=50_000, master_seed=9))
        assert 0.0 < target <= 1.0
        assert dev.value <= 4 * dev.stderr

    def test_zero_frequency_exact(self):
        scheme = make_block_scheme(1024, 0.5)
        dev, target = cf_product_deviation(GEO, scheme, 0.0, MCConfig(replicates=100, master_seed=10))
        assert dev.value == 0.0 and target == 1.0

    def test_envelope_protocol_exponential(self):
        # fit the unknown constant at the smallest n, require the bound with
        # that constant to hold at larger n (with MC slack):
        # deviation <= C * m |t|^q p^(q/2) / s_n^q * gaussian_target
        model = MAModel(geometric_weights(0.5, 30), EXPO)
        t, q = 0.5, 3.0
        fitted = None
        for idx, n in enumerate((1024, 4096)):
            scheme = make_block_scheme(n, 0.5)
            m, p = scheme.block_count, scheme.block_len
            s_n = math.sqrt(partial_sum_variance(model, n))
            dev, target = cf_product_deviation(
                model, scheme, t, MCConfig(replicates=100_000, master_seed=11 + idx)
            )
            shape = m * abs(t) ** q * p ** (q / 2.0) / s_n**q * target
            if fitted is None:
                fitted = dev.value / shape
            else:
                assert dev.value <= fitted * shape + 4 * dev.stderr


class TestEsseenDistanceBound:
    def test_dominates_ks_distance_on_normal_samples(self):
        rng = np.random.default_rng(12)
        x = rng.standard_normal(200_000)
        bound = esseen_distance_bound(x, SmoothingParameters(T=10.0))
        ks = stats.kstest(x, "norm").statistic
        assert bound >= ks

    @pytest.mark.parametrize("maker", ["exponential", "shifted", "block_sums"])
    def test_dominates_ks_distance_on_non_normal_samples(self, maker):
        # the smoothing bound must dominate the true sup distance for any law
        rng = np.random.default_rng(14)
        if maker == "exponential":
            x = rng.standard_exponential(50_000) - 1.0
        elif maker == "shifted":
            x = rng.standard_normal(50_000) + 0.4
        else:
            x = np.array(
                [path_from_rng(GEO, 16, rng).sum() for _ in range(5000)]
            ) / math.sqrt(partial_sum_variance(GEO, 16))
        bound = esseen_distance_bound(x, SmoothingParameters(T=20.0))
        ks = stats.kstest(x, "norm").statistic
        assert bound >= ks

    def test_degenerate_samples_bound_exceeds_true_distance(self):
        # all-zero samples: true sup distance to Phi is 0.5
        bound = esseen_distance_bound(np.zeros(1000), SmoothingParameters(T=1.0))
        assert bound >= 0.5

    def test_decreases_then_plateaus_in_T(self):
        rng = np.random.default_rng(13)
        x = rng.standard_normal(50_000)
        bounds = [esseen_distance_bound(x, SmoothingParameters(T=T)) for T in (2.0, 20.0, 200.0)]
        assert bounds[1] < bounds[0]
        assert bounds[2] < bounds[0]
        assert bounds[2] > 0.0

    def test_constants(self):
        params = SmoothingParameters(T=5.0)
        assert params.integral_constant == pytest.approx(1.0 / math.pi)
        assert params.tail_constant == pytest.approx(24.0 / (math.pi * math.sqrt(2 * math.pi)))
        assert INTEGRAL_CONSTANT * math.pi == pytest.approx(1.0)
        assert TAIL_CONSTANT == pytest.approx(24 / (math.pi * math.sqrt(2 * math.pi)))

    def test_truncation_frequency_helper(self):
        n, alpha, b = 4096, 0.5, -0.1
        expected = math.log(n) ** b * n ** (alpha / 2)
        assert truncation_frequency(n, alpha) == pytest.approx(expected, rel=1e-14)
        with pytest.raises(ValueError):
            truncation_frequency(n, alpha, b=0.1)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            esseen_distance_bound([], SmoothingParameters(T=1.0))

    def test_invalid_T(self):
        with pytest.raises(ValueError):
            SmoothingParameters(T=0.0)
