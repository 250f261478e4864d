# models/moments.py
"""Conditional moments of X_k given the excursion, and Gamma-clock utilities."""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special
from scipy import stats as sps

from models.excursion import spanning_increments
from utils.stats import GofResult, chi_square_counts, chi_square_independence
from utils.validators import ContractViolation

logger = logging.getLogger(__name__)

QUAD_TOLERANCE = 1e-8
ENDPOINT_STRATUM = 1e-3
MAX_Q = 3


def gamma_tail(k, t):
    """p(t) = P(Gamma(k, 1) > t) = sum_{j<k} e^-t t^j / j!. Vectorized in ``t``."""
    return special.gammaincc(k, t)


def factorial(k):
    """Gamma(k + 1), defined for real k."""
    return special.gamma(k + 1.0)


def first_moment_constant(k):
    """``Gamma(1 + 1/k) (k!)^(1/k)``, so that ``E[X_k | e] = C * int e_s^(-1/k) ds``."""
    return special.gamma(1.0 + 1.0 / k) * factorial(k) ** (1.0 / k)


def survival_integral(rate, k):
    """Adaptive quadrature of ``int_0^inf exp(-rate x^k / k!) dx``."""
    kfact = factorial(k)
    value, _ = integrate.quad(lambda x: math.exp(-rate * x ** k / kfact), 0.0, np.inf,
                              epsabs=QUAD_TOLERANCE)
    return value


def _partial_survival(delta, k, upper):
    # closed form of int_0^upper exp(-delta y^k / k!) dy
    if delta <= 0.0:
        return upper
    kfact = factorial(k)
    scale = (kfact / delta) ** (1.0 / k)
    return scale / k * special.gamma(1.0 / k) * special.gammainc(1.0 / k, delta * upper ** k / kfact)


def ordered_survival_integral(deltas, k):
    """
    Ordered integral over ``x_1 > x_2 > ... > x_q > 0`` of
    ``exp(-sum_r Delta_r x_r^k / k!)``.

    The innermost variable is integrated in closed form (lower incomplete
    gamma); the others by nested adaptive quadrature, innermost first.

    Args:
        deltas (array): Spanning increments ``Delta_1..Delta_q`` (``Delta_1 > 0``).
        k (float): Clock parameter, >= 1.

    Returns:
        float: Value of the integral.
    """
    deltas = [float(d) for d in deltas]
    q = len(deltas)
    if q < 1 or deltas[0] <= 0.0:
        raise ContractViolation('ordered integral needs q >= 1 and Delta_1 > 0')
    kfact = factorial(k)

    def inner(r, upper):
        # integral over x_r in (0, upper) of the remaining factors
        if r == q - 1:
            return _partial_survival(deltas[r], k, upper)
        value, _ = integrate.quad(
            lambda x: math.exp(-deltas[r] * x ** k / kfact) * inner(r + 1, x),
            0.0, upper, epsabs=QUAD_TOLERANCE,
        )
        return value

    if q == 1:
        return _partial_survival(deltas[0], k, np.inf)
    value, _ = integrate.quad(
        lambda x: math.exp(-deltas[0] * x ** k / kfact) * inner(1, x),
        0.0, np.inf, epsabs=QUAD_TOLERANCE,
    )
    return value


@dataclass(frozen=True)
class MomentEstimate:
    k: float
    q: int
    estimate: float
    standard_error: float
    sample_count: int

    def to_dict(self):
        return {
            'k': self.k,
            'q': self.q,
            'estimate': self.estimate,
            'standardError': self.standard_error,
            'sampleCount': self.sample_count,
        }


def merge_estimates(first, second):
    """Count-weighted merge of two estimates of the same moment (pooled variance)."""
    if (first.k, first.q) != (second.k, second.q):
        raise ContractViolation('can only merge estimates of the same moment')
    n1, n2 = first.sample_count, second.sample_count
    total = n1 + n2
    mean = (n1 * first.estimate + n2 * second.estimate) / total
    # per-sample variances recovered from the standard errors
    var1 = first.standard_error ** 2 * n1
    var2 = second.standard_error ** 2 * n2
    pooled = (n1 * (var1 + (first.estimate - mean) ** 2)
              + n2 * (var2 + (second.estimate - mean) ** 2)) / total
    return MomentEstimate(k=first.k, q=first.q, estimate=mean,
                          standard_error=math.sqrt(pooled / total), sample_count=total)


def _interior_values(e, s):
    # snap to the grid and stay off the endpoints, where e vanishes
    indices = np.clip(np.rint(np.asarray(s) * e.N).astype(np.int64), 1, e.N - 1)
    return e.values[indices]


def _pair_means(e, u, exponent):
    left = _interior_values(e, u)
    right = _interior_values(e, 1.0 - u)
    return 0.5 * (left ** exponent + right ** exponent)


def first_moment_given_excursion(e, k, mc_samples, rng):
    """
    Monte Carlo estimate of ``E[X_k | e] = Gamma(1+1/k) (k!)^(1/k) int_0^1 e_s^(-1/k) ds``.

    Uses antithetic pairs ``(s, 1 - s)`` and stratifies the two endpoint
    strata of width 1e-3, where ``e_s^(-1/k)`` is heavy.

    Args:
        e (Excursion): The excursion.
        k (float): Clock parameter, >= 1.
        mc_samples (int): Number of antithetic pairs, at least 4. At least two go
            to each stratum.
        rng (numpy.random.Generator): Random stream.

    Returns:
        MomentEstimate: Estimate with its standard error.
    """
    if mc_samples < 4:
        raise ContractViolation('mc_samples must be >= 4')
    if np.any(e.values[1:-1] <= 0.0):
        raise ContractViolation('excursion vanishes at an interior grid point')
    exponent = -1.0 / k
    constant = first_moment_constant(k)
    width = ENDPOINT_STRATUM

    edge_count = max(2, mc_samples // 10)
    middle_count = mc_samples - edge_count
    edge = _pair_means(e, rng.uniform(0.0, width, edge_count), exponent)
    middle = _pair_means(e, rng.uniform(width, 0.5, middle_count), exponent)

    edge_weight, middle_weight = 2.0 * width, 1.0 - 2.0 * width
    estimate = edge_weight * edge.mean() + middle_weight * middle.mean()
    variance = (edge_weight ** 2 * edge.var(ddof=1) / edge_count
                + middle_weight ** 2 * middle.var(ddof=1) / middle_count)
    return MomentEstimate(
        k=float(k),
        q=1,
        estimate=float(constant * estimate),
        standard_error=float(constant * math.sqrt(variance)),
        sample_count=edge_count + middle_count,
    )


def first_moment_quadrature(e, k):
    """Deterministic grid evaluation of ``E[X_k | e]`` over the interior grid points."""
    interior = e.values[1:-1]
    if np.any(interior <= 0.0):
        raise ContractViolation('excursion vanishes at an interior grid point')
    return float(first_moment_constant(k) * np.sum(interior ** (-1.0 / k)) / e.N)


def moment_given_excursion(e, k, q, mc_samples, rng):
    """
    Monte Carlo estimate of ``E[X_k^q | e]``.

    Each sample draws ``s`` uniform on ``[0, 1]^q`` (snapped to interior grid
    points), computes the spanning increments, and evaluates the ordered
    x-integral by nested quadrature. Samples whose increments all vanish are
    redrawn.

    Args:
        e (Excursion): The excursion.
        k (float): Clock parameter, >= 1.
        q (int): Moment order, 1 to 3.
        mc_samples (int): Number of s-vectors.
        rng (numpy.random.Generator): Random stream.

    Returns:
        MomentEstimate: ``q!`` times the sample mean, with its standard error.
    """
    if q not in range(1, MAX_Q + 1):
        raise ContractViolation(f'moment order must be between 1 and {MAX_Q}')
    if mc_samples < 2:
        raise ContractViolation('mc_samples must be >= 2')
    values = np.empty(mc_samples)
    for i in range(mc_samples):
        while True:
            indices = np.clip(np.rint(rng.uniform(0.0, 1.0, q) * e.N), 1, e.N - 1)
            increments = spanning_increments(e, indices / e.N)
            if increments.deltas[0] > 0.0:
                break
            logger.debug('Degenerate spanning increments, redrawing')
        values[i] = ordered_survival_integral(increments.deltas, k)

    scale = math.factorial(q)
    return MomentEstimate(
        k=float(k),
        q=q,
        estimate=float(scale * values.mean()),
        standard_error=float(scale * values.std(ddof=1) / math.sqrt(mc_samples)),
        sample_count=mc_samples,
    )


@dataclass(frozen=True, eq=False)
class GammaPoissonReport:
    m: int
    a: float
    k: int
    t_grid: tuple
    counts: np.ndarray
    marginal_fits: tuple
    independence_fits: tuple

    def to_dict(self):
        return {
            'm': self.m,
            'a': self.a,
            'k': self.k,
            't_grid': list(self.t_grid),
            'marginal': [fit.to_dict() for fit in self.marginal_fits],
            'independence': [fit.to_dict() for fit in self.independence_fits],
        }


def gamma_poisson_check(m, a, k, t_grid, sims, rng):
    """
    Compare ``N_m(t) = #{i <= m : G_i <= t}`` with a Poisson process run at ``t^k / k!``.

    The ``G_i`` are Gamma(k) with rate ``a_m = (a / m)^(1/k)``. The vector of
    counts on the t-grid is drawn exactly, as a multinomial over the grid cells.

    Args:
        m (int): Number of Gamma variables.
        a (float): Limiting rate.
        k (int): Gamma shape.
        t_grid (list): Increasing evaluation times.
        sims (int): Replications.
        rng (numpy.random.Generator): Random stream.

    Returns:
        GammaPoissonReport: Per-t chi-square fits against Poisson(a t^k / k!) and
        independence tests of consecutive increments.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    rate = (a / m) ** (1.0 / k)
    cumulative = special.gammainc(k, rate * t_grid)
    cells = np.diff(np.concatenate([[0.0], cumulative]))
    cells = np.append(cells, max(0.0, 1.0 - cumulative[-1]))
    draws = rng.multinomial(m, cells / cells.sum(), size=sims)
    counts = np.cumsum(draws[:, :-1], axis=1)

    kfact = factorial(k)
    marginal = []
    for column, t in enumerate(t_grid):
        mean = a * t ** k / kfact
        histogram = np.bincount(counts[:, column])
        fit = chi_square_counts(histogram, lambda j, mean=mean: sps.poisson.pmf(j, mean))
        marginal.append(GofResult(
            statistic=fit.statistic, p_value=fit.p_value, sample_sizes=fit.sample_sizes,
            test_name=fit.test_name, dof=fit.dof, skipped=fit.skipped, note=fit.note,
            extra={'t': float(t), 'poissonMean': mean},
        ))

    independence = []
    for column in range(1, t_grid.size):
        fit = chi_square_independence(counts[:, column - 1], counts[:, column] - counts[:, column - 1])
        independence.append(GofResult(
            statistic=fit.statistic, p_value=fit.p_value, sample_sizes=fit.sample_sizes,
            test_name=fit.test_name, dof=fit.dof, skipped=fit.skipped, note=fit.note,
            extra={'t': [float(t_grid[column - 1]), float(t_grid[column])]},
        ))

    logger.info(f"Gamma/Poisson check: m={m}, a={a}, k={k}, {sims} replications")
    return GammaPoissonReport(
        m=m, a=float(a), k=k, t_grid=tuple(float(t) for t in t_grid), counts=counts,
        marginal_fits=tuple(marginal), independence_fits=tuple(independence),
    )
