# tests/test_moments.py
import math

import numpy as np
import pytest

from models.excursion import Excursion, sample_excursion, spanning_increments
from models.moments import (MomentEstimate, factorial, first_moment_constant,
                            first_moment_given_excursion, first_moment_quadrature, gamma_poisson_check,
                            gamma_tail, merge_estimates, moment_given_excursion,
                            ordered_survival_integral, survival_integral)
from utils.validators import ContractViolation


def snap_weights(N):
    """Probability that a uniform time snaps to each interior grid index."""
    weights = np.full(N + 1, 1.0 / N)
    weights[0] = weights[N] = 0.0
    weights[1] = weights[N - 1] = 1.5 / N
    return weights


def test_gamma_tail_examples():
    assert gamma_tail(1, 2.0) == pytest.approx(math.exp(-2.0))
    assert gamma_tail(2, 1.0) == pytest.approx(2.0 / math.e)
    assert gamma_tail(3, 0.0) == pytest.approx(1.0)
    values = gamma_tail(2, np.linspace(0.0, 10.0, 11))
    assert np.all(np.diff(values) < 0) and np.all((values > 0) & (values <= 1))


@pytest.mark.parametrize('k', [1, 2, 3, 4])
def test_gamma_tail_bounds(k):
    t = np.linspace(0.0, 60.0, 601)
    p = gamma_tail(k, t)
    # union bound over k exponential summands, and the j = k term of the Poisson sum
    assert np.all(p <= k * np.exp(-t / k) + 1e-15)
    assert np.all(1.0 - p >= t ** k * np.exp(-t) / math.factorial(k) - 1e-15)


def test_gamma_tail_small_time():
    assert 1.0 - gamma_tail(2, 1e-3) == pytest.approx(5e-7, abs=1e-9)


def test_factorial_extends_to_reals():
    assert factorial(3) == pytest.approx(6.0)
    assert factorial(0.5) == pytest.approx(math.sqrt(math.pi) / 2.0)


@pytest.mark.parametrize('rate,k', [(2.0, 1), (1.0, 2), (0.3, 3), (1.7, 2.5)])
def test_survival_integral_closed_form(rate, k):
    expected = (factorial(k) / rate) ** (1.0 / k) * math.gamma(1.0 + 1.0 / k)
    assert survival_integral(rate, k) == pytest.approx(expected, rel=1e-6)


def test_first_moment_constant_for_k1():
    assert first_moment_constant(1) == pytest.approx(1.0)


def test_ordered_integral_examples():
    assert ordered_survival_integral([1.0, 1.0], 1) == pytest.approx(0.5, rel=1e-6)
    assert ordered_survival_integral([2.0, 3.0], 1) == pytest.approx(0.1, rel=1e-6)
    assert ordered_survival_integral([2.0, 0.0], 1) == pytest.approx(0.25, rel=1e-6)


def test_ordered_integral_single_point_matches_survival_integral():
    assert ordered_survival_integral([0.8], 2) == pytest.approx(survival_integral(0.8, 2), rel=1e-6)


def test_ordered_integral_three_points_for_k1():
    # 1 / (d1 (d1 + d2) (d1 + d2 + d3))
    assert ordered_survival_integral([1.0, 2.0, 1.0], 1) == pytest.approx(1.0 / 12.0, rel=1e-5)


def test_ordered_integral_needs_positive_first_increment():
    with pytest.raises(ContractViolation):
        ordered_survival_integral([0.0, 1.0], 2)
    with pytest.raises(ContractViolation):
        ordered_survival_integral([], 2)


def test_ordered_integral_is_continuous_in_k():
    base = ordered_survival_integral([1.0, 0.5], 2.0)
    assert ordered_survival_integral([1.0, 0.5], 2.0 + 1e-6) == pytest.approx(base, rel=1e-4)
    assert first_moment_constant(2.0 + 1e-9) == pytest.approx(first_moment_constant(2.0))


def test_constant_excursion_first_moment(rng):
    N = 100
    e = Excursion([0.0] + [2.0] * (N - 1) + [0.0])
    estimate = first_moment_given_excursion(e, 1, 200, rng)
    assert estimate.estimate == pytest.approx(0.5)
    assert estimate.standard_error == pytest.approx(0.0, abs=1e-12)
    assert first_moment_quadrature(e, 1) == pytest.approx(0.5 * (N - 1) / N)


@pytest.mark.parametrize('k', [1, 2, 3])
def test_first_moment_monte_carlo_matches_grid_sum(rng, k):
    e = sample_excursion(1000, rng)
    weights = snap_weights(e.N)
    interior = np.where(weights > 0, e.values, 1.0)
    exact = first_moment_constant(k) * np.sum(weights * interior ** (-1.0 / k))
    estimate = first_moment_given_excursion(e, k, 20000, rng)
    assert abs(estimate.estimate - exact) < 4 * estimate.standard_error + 1e-9
    # quadrature uses plain 1/N weights; the two differ only at the edge points
    edge = first_moment_constant(k) * 0.5 / e.N * (e.values[1] ** (-1.0 / k) + e.values[-2] ** (-1.0 / k))
    assert first_moment_quadrature(e, k) == pytest.approx(exact - edge)


def test_first_moment_rejects_bad_arguments(rng):
    e = sample_excursion(100, rng)
    with pytest.raises(ContractViolation):
        first_moment_given_excursion(e, 2, 0, rng)
    with pytest.raises(ContractViolation):
        first_moment_given_excursion(e, 2, 3, rng)


@pytest.mark.parametrize('mc_samples', [4, 9, 25, 1000])
def test_first_moment_uses_exactly_the_requested_samples(rng, mc_samples):
    e = sample_excursion(100, rng)
    assert first_moment_given_excursion(e, 2, mc_samples, rng).sample_count == mc_samples


def _pair_oracle(e, k1_weights):
    # E[X_1^2 | e] on the grid: 2 * sum_ij w_i w_j / (d1 (d1 + d2)) for k = 1
    N = e.N
    total = 0.0
    for i in range(1, N):
        for j in range(1, N):
            overlap = e.range_min_index(i, j)
            d1 = e.values[i]
            d2 = e.values[j] - overlap
            total += k1_weights[i] * k1_weights[j] / (d1 * (d1 + d2))
    return 2.0 * total


def test_second_moment_matches_grid_oracle(rng):
    e = sample_excursion(50, rng)
    weights = snap_weights(e.N)
    exact = _pair_oracle(e, weights)
    estimate = moment_given_excursion(e, 1, 2, 4000, rng)
    assert estimate.q == 2 and estimate.sample_count == 4000
    assert abs(estimate.estimate - exact) < 4 * estimate.standard_error

class ReversedUniforms:
    """Generator wrapper that hands out each uniform draw in reverse order."""

    def __init__(self, rng):
        self.rng = rng

    def uniform(self, low, high, size):
        return self.rng.uniform(low, high, size)[::-1]


def test_ordered_integrals_summed_over_orderings_for_k1():
    e = Excursion([0.0, 1.0, 0.5, 2.0, 0.0])
    forward = spanning_increments(e, [0.25, 0.75])
    backward = spanning_increments(e, [0.75, 0.25])
    assert forward.deltas.tolist() == [1.0, 1.5]
    assert backward.deltas.tolist() == [2.0, 0.5]
    # both orderings span the same length L = 1 + 2 - 0.5
    assert forward.deltas.sum() == backward.deltas.sum() == 2.5
    total = ordered_survival_integral(forward.deltas, 1) + ordered_survival_integral(backward.deltas, 1)
    assert total == pytest.approx((1.0 + 2.0) / (1.0 * 2.0 * 2.5), rel=1e-6)


@pytest.mark.parametrize('q', [2, 3])
def test_moment_estimate_is_exchangeable_in_the_points(q):
    e = sample_excursion(40, np.random.default_rng(11))
    forward = moment_given_excursion(e, 2, q, 1500, np.random.default_rng(12))
    backward = moment_given_excursion(e, 2, q, 1500, ReversedUniforms(np.random.default_rng(12)))
    assert forward.estimate != backward.estimate
    spread = math.hypot(forward.standard_error, backward.standard_error)
    assert abs(forward.estimate - backward.estimate) < 4 * spread



def test_first_moment_paths_agree(rng):
    e = sample_excursion(200, rng)
    weights = snap_weights(e.N)
    interior = np.where(weights > 0, e.values, 1.0)
    exact = first_moment_constant(2) * np.sum(weights * interior ** -0.5)
    estimate = moment_given_excursion(e, 2, 1, 3000, rng)
    assert abs(estimate.estimate - exact) < 4 * estimate.standard_error


def test_moment_order_is_bounded(rng):
    e = sample_excursion(20, rng)
    with pytest.raises(ContractViolation):
        moment_given_excursion(e, 2, 4, 10, rng)
    with pytest.raises(ContractViolation):
        moment_given_excursion(e, 2, 1, 1, rng)


def test_third_moment_is_positive(rng):
    e = sample_excursion(30, rng)
    estimate = moment_given_excursion(e, 2, 3, 20, rng)
    assert estimate.estimate > 0
    assert all(spanning_increments(e, [0.5]).deltas > 0)


def test_merge_estimates():
    first = MomentEstimate(k=2.0, q=1, estimate=1.0, standard_error=0.1, sample_count=100)
    second = MomentEstimate(k=2.0, q=1, estimate=3.0, standard_error=0.1, sample_count=100)
    merged = merge_estimates(first, second)
    assert merged.estimate == pytest.approx(2.0)
    assert merged.sample_count == 200
    # per-sample variance 1 plus the spread between the two means
    assert merged.standard_error == pytest.approx(math.sqrt(2.0 / 200))
    assert merged.to_dict()['sampleCount'] == 200


def test_merge_refuses_different_moments():
    first = MomentEstimate(k=2.0, q=1, estimate=1.0, standard_error=0.1, sample_count=10)
    with pytest.raises(ContractViolation):
        merge_estimates(first, MomentEstimate(k=3.0, q=1, estimate=1.0, standard_error=0.1, sample_count=10))


def test_gamma_counts_at_time_zero_vanish(rng):
    report = gamma_poisson_check(1000, 1.0, 2, [0.0, 1.0], 500, rng)
    assert np.all(report.counts[:, 0] == 0)
    assert report.marginal_fits[0].skipped


def test_gamma_counts_match_poisson_for_k1(rng):
    report = gamma_poisson_check(100000, 1.0, 1, [1.0, 2.0], 2000, rng)
    assert report.counts.shape == (2000, 2)
    for fit in report.marginal_fits:
        assert not fit.skipped
        assert fit.p_value > 1e-3
    assert abs(report.counts[:, 0].mean() - 1.0) < 4 * math.sqrt(1.0 / 2000)


def test_gamma_counts_match_poisson_for_k2(rng):
    report = gamma_poisson_check(100000, 1.0, 2, [1.0, 2.0], 3000, rng)
    for fit, t in zip(report.marginal_fits, (1.0, 2.0)):
        assert fit.extra['poissonMean'] == pytest.approx(t ** 2 / 2.0)
        assert fit.p_value > 1e-3
    assert np.all(np.diff(report.counts, axis=1) >= 0)


def test_gamma_increments_are_independent(rng):
    report = gamma_poisson_check(100000, 2.0, 2, [1.0, 1.5, 2.5], 3000, rng)
    assert len(report.independence_fits) == 2
    for fit in report.independence_fits:
        assert not fit.skipped
        assert fit.p_value > 1e-3
    payload = report.to_dict()
    assert payload['k'] == 2 and len(payload['marginal']) == 3
