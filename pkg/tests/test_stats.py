# tests/test_stats.py
import math

import numpy as np
import pytest

from models.continuum import rayleigh_cdf
from utils.stats import (EmpiricalDistribution, GofResult, chi_square_counts,
                         chi_square_independence, ecdf_eval, ecdf_pairs, ks_against_cdf,
                         ks_two_sample, mean_ci)
from utils.validators import ContractViolation, ValidationError


def test_ecdf_is_right_continuous():
    dist = EmpiricalDistribution.from_samples([3.0, 1.0, 2.0, 2.0])
    assert dist.count == 4
    assert dist.sorted_samples.tolist() == [1.0, 2.0, 2.0, 3.0]
    assert ecdf_eval(dist, 2.0) == 0.75
    assert ecdf_eval(dist, 0.5) == 0.0
    assert ecdf_eval(dist, 3.0) == 1.0
    assert ecdf_eval(dist, np.array([1.5, 10.0])).tolist() == [0.25, 1.0]


def test_ecdf_pairs_use_distinct_values():
    xs, fs = ecdf_pairs([1.0, 2.0, 2.0, 3.0])
    assert xs.tolist() == [1.0, 2.0, 3.0]
    assert fs.tolist() == [0.25, 0.75, 1.0]


def test_empty_distribution_is_rejected():
    with pytest.raises(ValidationError):
        EmpiricalDistribution.from_samples([])


def test_identical_samples_have_zero_distance():
    fit = ks_two_sample([1.0, 2.0, 3.0], [3.0, 2.0, 1.0])
    assert fit.statistic == 0.0
    assert fit.p_value == pytest.approx(1.0)
    assert fit.sample_sizes == (3, 3)


def test_separated_samples_have_unit_distance():
    fit = ks_two_sample([1.0, 2.0, 3.0], [4.0, 5.0])
    assert fit.statistic == 1.0


def test_two_sample_statistic_is_symmetric(rng):
    a, b = rng.normal(size=300), rng.normal(0.2, 1.0, size=500)
    assert ks_two_sample(a, b).statistic == ks_two_sample(b, a).statistic


def test_two_sample_statistic_by_hand():
    # F_a - F_b peaks at x = 2: 2/3 - 0
    assert ks_two_sample([1.0, 2.0, 5.0], [3.0, 4.0, 6.0]).statistic == pytest.approx(2.0 / 3.0)


def test_same_law_samples_pass(rng):
    fit = ks_two_sample(rng.exponential(size=2000), rng.exponential(size=3000))
    assert fit.p_value > 1e-3
    assert fit.test_name == 'ks_two_sample'


def test_point_mass_at_zero_against_rayleigh():
    fit = ks_against_cdf(np.zeros(10), rayleigh_cdf)
    assert fit.statistic == pytest.approx(1.0)
    assert fit.p_value < 1e-6


def test_uniform_samples_against_uniform_cdf(rng):
    fit = ks_against_cdf(rng.uniform(size=5000), lambda x: np.clip(x, 0.0, 1.0))
    assert fit.p_value > 1e-3
    assert fit.sample_sizes == (5000,)


def test_one_sample_statistic_by_hand():
    # largest gap sits just below 0.9, where the ECDF is still 1/2
    fit = ks_against_cdf([0.2, 0.9], lambda x: x)
    assert fit.statistic == pytest.approx(0.4)


def test_invalid_reference_cdf_is_a_contract_violation():
    with pytest.raises(ContractViolation):
        ks_against_cdf([0.1, 0.2], lambda x: 2.0 * np.ones_like(x))


def test_chi_square_of_proportional_counts_is_zero():
    fit = chi_square_counts([50, 30, 20], lambda j: np.array([0.5, 0.3, 0.2])[j])
    assert fit.statistic == pytest.approx(0.0)
    assert fit.dof == 2
    assert fit.p_value == pytest.approx(1.0)


def test_chi_square_by_hand():
    fit = chi_square_counts([15, 15, 20], lambda j: np.array([0.2, 0.4, 0.4])[j])
    assert fit.statistic == pytest.approx(3.75)
    assert fit.dof == 2
    assert fit.p_value == pytest.approx(math.exp(-3.75 / 2.0))


def test_chi_square_tail_bin_collects_missing_mass():
    # pmf puts 0.5 beyond the observed support
    fit = chi_square_counts([50, 50], lambda j: np.array([0.25, 0.25])[j])
    assert fit.dof == 2
    assert fit.statistic == pytest.approx(2 * 25.0 ** 2 / 25.0 + 50.0)


def test_chi_square_skips_tiny_samples():
    fit = chi_square_counts([3], lambda j: np.ones_like(j, dtype=float))
    assert fit.skipped
    assert fit.to_dict()['skipped'] is True
    assert 'note' in fit.to_dict()


def test_gof_result_payload():
    fit = GofResult(statistic=0.1, p_value=0.5, sample_sizes=(10, 20), test_name='ks_two_sample',
                    extra={'n': 100})
    assert fit.to_dict() == {
        'testName': 'ks_two_sample',
        'statistic': 0.1,
        'pValueOrBound': 0.5,
        'sampleSizes': [10, 20],
        'n': 100,
    }


def test_mean_ci():
    mean, half = mean_ci([1.0, 2.0, 3.0])
    assert mean == pytest.approx(2.0)
    assert half == pytest.approx(1.959964 / math.sqrt(3.0), rel=1e-5)


def test_mean_ci_needs_two_samples():
    with pytest.raises(ValidationError):
        mean_ci([1.0])


def test_independent_counts_pass(rng):
    fit = chi_square_independence(rng.poisson(2.0, 3000), rng.poisson(3.0, 3000))
    assert not fit.skipped
    assert fit.p_value > 1e-3
    assert fit.dof >= 1


def test_dependent_counts_fail(rng):
    x = rng.poisson(3.0, 3000)
    fit = chi_square_independence(x, x + rng.integers(0, 2, 3000))
    assert fit.p_value < 1e-6


def test_constant_sample_skips_independence_test(rng):
    fit = chi_square_independence(np.zeros(500, dtype=int), rng.poisson(2.0, 500))
    assert fit.skipped


def test_independence_needs_paired_samples():
    with pytest.raises(ContractViolation):
        chi_square_independence([1, 2, 3], [1, 2])
