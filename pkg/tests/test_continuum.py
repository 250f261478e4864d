# tests/test_continuum.py
import math

import numpy as np
import pytest

from models.continuum import (ContinuumSample, SubordinatorPath, check_bound,
                              coarsen_subordinator, extend_subordinator, rayleigh_cdf, root_mass,
                              sample_reduced_cut_times, sample_subordinator, sample_xk,
                              sample_xk_with_extension, time_changed_mass, time_grid)
from models.excursion import SpanningIncrements, sample_excursion, spanning_increments
from utils.stats import ks_against_cdf, ks_two_sample
from utils.validators import ContractViolation, HorizonError


class FixedNormals:
    """Stand-in generator returning scripted standard normal draws."""

    def __init__(self, *batches):
        self.batches = list(batches)

    def standard_normal(self, size):
        return np.array(self.batches.pop(0), dtype=float)[:size]


def flat_path(horizon, steps=1000):
    return SubordinatorPath(times=np.linspace(0.0, horizon, steps + 1), values=np.zeros(steps + 1))


def single_increment(delta):
    return SpanningIncrements(points=(0.5,), deltas=np.array([delta]),
                              branch_heights=np.zeros(1), attachments=np.array([-1]))


def test_increment_formula():
    path = sample_subordinator(1, 0.5, FixedNormals([2.0]))
    assert path.values.tolist() == [0.0, 0.0625]


def test_zero_normal_draw_is_redrawn():
    path = sample_subordinator(1, 0.5, FixedNormals([0.0], [2.0]))
    assert path.values[-1] == pytest.approx(0.0625)


def test_single_step_path_value():
    path = sample_subordinator(1, 3.0, FixedNormals([1.5]))
    assert path.values[-1] == pytest.approx(9.0 / 2.25)
    assert path.step_count == 1 and path.horizon == 3.0


def test_first_passage_probability(rng):
    draws = np.array([sample_subordinator(1, 1.0, rng).values[-1] for _ in range(20000)])
    p = math.erfc(1.0 / math.sqrt(2.0))  # P(|Z| >= 1)
    assert abs(np.mean(draws <= 1.0) - p) < 4 * math.sqrt(p * (1 - p) / draws.size)


def test_path_starts_at_zero_and_increases(rng):
    path = sample_subordinator(2000, 200.0, rng)
    assert path.values[0] == 0.0
    assert np.all(np.diff(path.values) >= 0.0)
    assert path.times[0] == 0.0 and path.times[-1] == 200.0
    assert np.all(np.diff(path.times) > 0.0)


def test_equal_step_increments_are_identically_distributed(rng):
    path = sample_subordinator(4000, 40.0, rng, spacing='uniform')
    increments = np.diff(path.values)
    fit = ks_two_sample(increments[:2000], increments[2000:])
    assert fit.p_value > 1e-3


def test_time_grid_shapes():
    assert time_grid(4, 2.0, 'uniform').tolist() == [0.0, 0.5, 1.0, 1.5, 2.0]
    grid = time_grid(100, 50.0)
    assert grid[0] == 0.0 and grid[1] == pytest.approx(50.0e-8) and grid[-1] == 50.0
    with pytest.raises(ContractViolation):
        time_grid(0, 1.0)
    with pytest.raises(ContractViolation):
        time_grid(10, 1.0, 'cubic')


@pytest.mark.parametrize('k', [1.0, 2.0, 3.0, 2.5])
def test_flat_path_closed_form(k):
    sample = sample_xk(k, flat_path(7.0), tail_threshold=1.5)
    assert sample.value == pytest.approx((math.gamma(k + 1) * 7.0) ** (1.0 / k))
    assert sample.value > 0


def test_flat_path_k1_value_is_horizon():
    assert sample_xk(1.0, flat_path(5.0), tail_threshold=1.5).value == pytest.approx(5.0)


def test_single_jump_path():
    path = SubordinatorPath(times=np.array([0.0, 1.0, 4.0]), values=np.array([0.0, 1.0, 1.0]))
    # mass 1 on [0, 1) and 1/2 on [1, 4]
    expected = math.sqrt(2.0) / 2.0 * (2.0 * 1.0 + 0.5 * 2.0 * (2.0 - 1.0))
    sample = sample_xk(2.0, path, tail_threshold=0.9)
    assert sample.value == pytest.approx(expected)
    assert sample.truncation_tail == pytest.approx(math.sqrt(2.0) / 2.0 * 0.5 * 2.0 * 2.0)


def test_short_horizon_raises(rng):
    path = sample_subordinator(100, 1e-3, rng)
    with pytest.raises(HorizonError) as excinfo:
        sample_xk(1.0, path)
    assert excinfo.value.achieved_mass == pytest.approx(root_mass(path)[-1])


def test_k_below_one_is_rejected():
    with pytest.raises(ContractViolation):
        sample_xk(0.5, flat_path(1.0), tail_threshold=1.5)


def test_left_rule_brackets_right_rule(rng):
    path = sample_subordinator(3000, 200.0, rng)
    for k in (1.0, 2.0, 3.0):
        upper = sample_xk(k, path, tail_threshold=1.0).value
        lower = sample_xk(k, path, tail_threshold=1.0, rule='right').value
        assert lower <= upper


@pytest.mark.slow
def test_bracket_shrinks_with_finer_grids(rng):
    fine = sample_subordinator(100000, 200.0, rng)
    widths = []
    for factor in (100, 10, 1):
        path = coarsen_subordinator(fine, factor)
        widths.append(sample_xk(2.0, path, tail_threshold=1.0).value
                      - sample_xk(2.0, path, tail_threshold=1.0, rule='right').value)
    assert widths[0] > widths[1] > widths[2] >= 0.0


def test_coarsening_keeps_endpoints(rng):
    path = sample_subordinator(1000, 10.0, rng)
    coarse = coarsen_subordinator(path, 7)
    assert coarse.times[0] == 0.0 and coarse.times[-1] == path.times[-1]
    assert np.isin(coarse.values, path.values).all()


def test_extension_keeps_the_prefix(rng):
    path = sample_subordinator(100, 10.0, rng)
    longer = extend_subordinator(path, 25.0, rng)
    assert longer.horizon == pytest.approx(25.0)
    assert np.array_equal(longer.values[:path.values.size], path.values)
    assert np.all(np.diff(longer.values) > 0.0)
    assert extend_subordinator(path, 5.0, rng) is path


def test_extension_until_threshold(rng):
    path = SubordinatorPath(times=np.array([0.0, 1.0]), values=np.array([0.0, 1.0]))
    extended, samples = sample_xk_with_extension([1.0, 2.0], path, rng, tail_threshold=0.1)
    assert extended.horizon > 1.0
    assert root_mass(extended)[-1] < 0.1
    assert set(samples) == {1.0, 2.0}


def test_time_changed_mass_for_k1_is_root_mass(rng):
    path = sample_subordinator(500, 20.0, rng, spacing='uniform')
    assert np.array_equal(time_changed_mass(path, 1, path.times), root_mass(path))
    assert time_changed_mass(path, 2, 0.0) == 1.0


def test_rayleigh_cdf_values():
    assert rayleigh_cdf(math.sqrt(2.0 * math.log(2.0))) == pytest.approx(0.5)
    assert rayleigh_cdf(-1.0) == 0.0
    assert rayleigh_cdf(0.0) == 0.0


@pytest.mark.slow
def test_k1_samples_are_rayleigh(rng):
    values = []
    for _ in range(2000):
        path = sample_subordinator(2000, 200.0, rng)
        _, samples = sample_xk_with_extension([1.0], path, rng)
        values.append(samples[1.0].value)
    values = np.array(values)
    assert ks_against_cdf(values, rayleigh_cdf).p_value > 1e-3
    mean = math.sqrt(math.pi / 2.0)
    # allow the left-rule discretization bias on top of Monte Carlo error
    assert abs(values.mean() - mean) < 4 * values.std(ddof=1) / math.sqrt(values.size) + 0.01 * mean


def test_reduced_cut_median_for_k2(rng):
    times = np.array([sample_reduced_cut_times(single_increment(1.0), 2.0, rng).separation_times[0]
                      for _ in range(20000)])
    assert np.median(times) == pytest.approx(math.sqrt(2.0 * math.log(2.0)), abs=0.025)


def test_reduced_cut_mean_for_k1(rng):
    times = np.array([sample_reduced_cut_times(single_increment(1.0), 1.0, rng).separation_times[0]
                      for _ in range(20000)])
    assert abs(times.mean() - 1.0) < 4 / math.sqrt(times.size)


def test_reduced_cut_joint_survival(rng):
    increments = SpanningIncrements(points=(0.3, 0.6), deltas=np.array([1.0, 0.5]),
                                    branch_heights=np.array([0.0, 0.6]), attachments=np.array([-1, 0]))
    t1, t2, draws = 1.2, 0.8, 20000
    hits = 0
    for _ in range(draws):
        eps = sample_reduced_cut_times(increments, 2.0, rng).separation_times
        assert np.all(eps > 0)
        hits += eps[0] > t1 and eps[1] > t2
    p = math.exp(-(1.0 * t1 ** 2 + 0.5 * t2 ** 2) / 2.0)
    assert abs(hits / draws - p) < 4 * math.sqrt(p * (1 - p) / draws)


def test_shared_segments_share_clocks(rng):
    # point 1 branches off the top of point 0's edge, so it can never outlive point 0
    increments = SpanningIncrements(points=(0.3, 0.6), deltas=np.array([1.0, 0.5]),
                                    branch_heights=np.array([0.0, 1.0]), attachments=np.array([-1, 0]))
    for _ in range(200):
        eps = sample_reduced_cut_times(increments, 2.0, rng).separation_times
        assert eps[1] <= eps[0]


def test_zero_length_paths_are_never_separated(rng):
    cuts = sample_reduced_cut_times(single_increment(0.0), 2.0, rng)
    assert cuts.never().tolist() == [True]
    assert cuts.point_count == 1


def test_negative_increments_are_rejected(rng):
    with pytest.raises(ContractViolation):
        sample_reduced_cut_times(single_increment(-0.1), 2.0, rng)


def test_k1_separation_rate_is_distance_from_root(rng):
    e = sample_excursion(2000, rng)
    s = 0.37
    increments = spanning_increments(e, [s])
    times = np.array([sample_reduced_cut_times(increments, 1.0, rng).separation_times[0]
                      for _ in range(20000)])
    rate = e.at(s)
    assert abs(times.mean() - 1.0 / rate) < 4 / (rate * math.sqrt(times.size))


def test_bound_for_k1_is_trivial():
    sample = ContinuumSample(k=1.0, value=2.3, truncation_tail=0.0, horizon=10.0, step_count=5)
    report = check_bound({1.0: sample})
    assert report.ok
    assert report.slack[1.0] == pytest.approx(1.0)


def test_bound_on_flat_path():
    path = flat_path(4.0)
    samples = {k: sample_xk(k, path, tail_threshold=1.5) for k in (1.0, 2.0, 3.0)}
    report = check_bound(samples)
    assert report.ok
    for k in (2.0, 3.0):
        assert report.slack[k] == pytest.approx(k + 4.0 - k * 4.0 ** (1.0 / k))


def test_bound_holds_on_random_paths(rng):
    for _ in range(50):
        path = sample_subordinator(2000, 200.0, rng)
        _, samples = sample_xk_with_extension([1.0, 2.0, 3.0, 4.0], path, rng)
        report = check_bound(samples)
        assert report.ok
        assert all(report.slack[k] > 0 for k in (2.0, 3.0, 4.0))
        assert report.to_dict()['violations'] == []


def test_bound_needs_shared_path_and_k1():
    a = ContinuumSample(k=1.0, value=1.0, truncation_tail=0.0, horizon=10.0, step_count=5)
    b = ContinuumSample(k=2.0, value=1.0, truncation_tail=0.0, horizon=20.0, step_count=5)
    with pytest.raises(ContractViolation):
        check_bound({2.0: b})
    with pytest.raises(ContractViolation):
        check_bound({1.0: a, 2.0: b})


def test_bound_reports_violations():
    a = ContinuumSample(k=1.0, value=0.0, truncation_tail=0.0, horizon=1.0, step_count=1)
    b = ContinuumSample(k=2.0, value=10.0, truncation_tail=0.0, horizon=1.0, step_count=1)
    report = check_bound({1.0: a, 2.0: b})
    assert not report.ok
    assert report.violations == (2.0,)
