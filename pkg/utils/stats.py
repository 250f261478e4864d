# utils/stats.py
"""Empirical distributions and the goodness-of-fit tests used by the experiments.

Statistics come from scipy.stats; KS p-values use its asymptotic method. All experiment runs use
at least 10^3 samples per side, where that regime is adequate.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from utils.validators import ContractViolation, ValidationError

logger = logging.getLogger(__name__)

MIN_EXPECTED = 5.0


@dataclass(frozen=True)
class EmpiricalDistribution:
    sorted_samples: np.ndarray
    count: int

    @classmethod
    def from_samples(cls, samples):
        values = np.sort(np.asarray(samples, dtype=float).ravel())
        if values.size < 1:
            raise ValidationError('an empirical distribution needs at least one sample')
        return cls(sorted_samples=values, count=int(values.size))


@dataclass(frozen=True)
class GofResult:
    statistic: float
    p_value: float
    sample_sizes: tuple
    test_name: str
    dof: int = None
    skipped: bool = False
    note: str = ''
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        payload = {
            'testName': self.test_name,
            'statistic': self.statistic,
            'pValueOrBound': self.p_value,
            'sampleSizes': list(self.sample_sizes),
        }
        if self.dof is not None:
            payload['dof'] = self.dof
        if self.skipped:
            payload['skipped'] = True
            payload['note'] = self.note
        payload.update(self.extra)
        return payload


def _as_distribution(samples):
    if isinstance(samples, EmpiricalDistribution):
        return samples
    return EmpiricalDistribution.from_samples(samples)


def ecdf_eval(dist, x):
    """Fraction of samples <= x (right-continuous step function). Accepts arrays."""
    dist = _as_distribution(dist)
    hits = np.searchsorted(dist.sorted_samples, x, side='right')
    return hits / dist.count


def ecdf_pairs(dist):
    """Return ``(x, F(x))`` at every distinct sample value, for plot-data CSVs."""
    dist = _as_distribution(dist)
    xs = np.unique(dist.sorted_samples)
    return xs, ecdf_eval(dist, xs)


def ks_two_sample(a, b):
    """
    Two-sample Kolmogorov-Smirnov test.

    Args:
        a: First sample (array or EmpiricalDistribution).
        b: Second sample.

    Returns:
        GofResult: Statistic and asymptotic p-value.
    """
    a = _as_distribution(a)
    b = _as_distribution(b)
    fit = sps.ks_2samp(a.sorted_samples, b.sorted_samples, method='asymp')
    return GofResult(
        statistic=float(fit.statistic),
        p_value=float(fit.pvalue),
        sample_sizes=(a.count, b.count),
        test_name='ks_two_sample',
    )


def ks_against_cdf(dist, cdf):
    """
    One-sample Kolmogorov-Smirnov test against a reference CDF.

    Args:
        dist: Sample (array or EmpiricalDistribution).
        cdf (callable): Vectorized reference CDF.

    Returns:
        GofResult: sup |F_n - F| and its asymptotic p-value.

    Raises:
        ContractViolation: The CDF leaves [0, 1] on the sample.
    """
    dist = _as_distribution(dist)
    reference = np.asarray(cdf(dist.sorted_samples), dtype=float)
    if np.any(reference < 0.0) or np.any(reference > 1.0) or np.any(np.isnan(reference)):
        raise ContractViolation('reference CDF returned values outside [0, 1]')
    fit = sps.kstest(dist.sorted_samples, cdf, method='asymp')
    return GofResult(
        statistic=float(fit.statistic),
        p_value=float(fit.pvalue),
        sample_sizes=(dist.count,),
        test_name='ks_against_cdf',
    )


def _merge_small_bins(observed, expected, min_expected):
    observed = list(observed)
    expected = list(expected)
    # fold the left tail forward, then the right tail backward
    while len(expected) > 1 and expected[0] < min_expected:
        expected[1] += expected.pop(0)
        observed[1] += observed.pop(0)
    while len(expected) > 1 and expected[-1] < min_expected:
        expected[-2] += expected.pop()
        observed[-2] += observed.pop()
    return np.array(observed, dtype=float), np.array(expected, dtype=float)


def chi_square_counts(observed, expected_pmf, min_expected=MIN_EXPECTED):
    """
    Pearson chi-square test of a count histogram against a reference pmf.

    Args:
        observed (array): ``observed[j]`` is the number of samples equal to ``j``.
        expected_pmf (callable): Reference pmf evaluated on integer arrays.
        min_expected (float): Tail bins are merged until each bin expects this many.

    Returns:
        GofResult: Statistic with ``dof = bins - 1``; ``skipped`` when fewer than
        two bins survive merging.
    """
    observed = np.asarray(observed, dtype=float)
    total = observed.sum()
    support = np.arange(observed.size)
    probabilities = np.asarray(expected_pmf(support), dtype=float)
    # everything beyond the last observed value goes into one extra tail bin
    tail = max(0.0, 1.0 - probabilities.sum())
    observed = np.append(observed, 0.0)
    expected = np.append(probabilities, tail) * total

    merged_observed, merged_expected = _merge_small_bins(observed, expected, min_expected)
    bins = merged_expected.size
    if bins < 2 or merged_expected.min() < min_expected:
        logger.warning(f"chi-square test skipped: {bins} bin(s) after merging")
        return GofResult(
            statistic=0.0,
            p_value=1.0,
            sample_sizes=(int(total),),
            test_name='chi_square_counts',
            dof=0,
            skipped=True,
            note='too few samples for the expected-count rule',
        )

    # chisquare needs matching totals
    merged_expected *= merged_observed.sum() / merged_expected.sum()
    fit = sps.chisquare(merged_observed, merged_expected, ddof=0)
    return GofResult(
        statistic=float(fit.statistic),
        p_value=float(fit.pvalue),
        sample_sizes=(int(total),),
        test_name='chi_square_counts',
        dof=bins - 1,
    )


def _pool_levels(values, min_count):
    """Map integer values to categories whose marginal counts reach ``min_count``.

    Adjacent values are accumulated left to right; a short last group is
    folded into its neighbour.
    """
    offset = values.min()
    counts = np.bincount(values - offset)
    mapping = np.empty(counts.size, dtype=np.int64)
    category, running = 0, 0
    for value, count in enumerate(counts):
        mapping[value] = category
        running += count
        if running >= min_count:
            category, running = category + 1, 0
    if running > 0 and category > 0:
        # leftover values join the previous category
        mapping[mapping == category] = category - 1
    return mapping[values - offset], int(mapping.max()) + 1


def chi_square_independence(x, y, min_expected=MIN_EXPECTED):
    """
    Chi-square test of independence between two integer-valued samples.

    Tail values of each variable are pooled until every cell of the
    contingency table expects at least ``min_expected`` counts.

    Args:
        x (array): First integer sample.
        y (array): Second integer sample (same length).
        min_expected (float): Expected-count rule.

    Returns:
        GofResult: Test result; ``skipped`` if the table collapses below 2x2.
    """
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if x.shape != y.shape or x.size == 0:
        raise ContractViolation('independence test needs paired, non-empty samples')
    total = x.size

    min_count = min_expected
    while min_count <= total:
        cx, rows = _pool_levels(x, min_count)
        cy, cols = _pool_levels(y, min_count)
        if rows < 2 or cols < 2:
            break
        table = np.zeros((rows, cols))
        np.add.at(table, (cx, cy), 1.0)
        expected = np.outer(table.sum(axis=1), table.sum(axis=0)) / total
        if expected.min() >= min_expected:
            statistic, p_value, dof, _ = sps.chi2_contingency(table, correction=False)
            return GofResult(
                statistic=float(statistic),
                p_value=float(p_value),
                sample_sizes=(total,),
                test_name='chi_square_independence',
                dof=int(dof),
            )
        min_count *= 1.5

    logger.warning('independence test skipped: contingency table collapsed')
    return GofResult(
        statistic=0.0,
        p_value=1.0,
        sample_sizes=(total,),
        test_name='chi_square_independence',
        dof=0,
        skipped=True,
        note='too few samples for the expected-count rule',
    )



def mean_ci(samples, level=0.95):
    """
    Sample mean with a normal-approximation confidence interval.

    Args:
        samples (array): At least two values.
        level (float): Confidence level in (0, 1).

    Returns:
        tuple: ``(mean, half_width)``.
    """
    values = np.asarray(samples, dtype=float)
    if values.size < 2:
        raise ValidationError('mean_ci needs at least two samples')
    z = sps.norm.ppf(0.5 * (1.0 + level))
    half_width = z * values.std(ddof=1) / np.sqrt(values.size)
    return float(values.mean()), float(half_width)
