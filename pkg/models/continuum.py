# models/continuum.py
"""The limit functional X_k on the Brownian CRT.

The mass of the root component of the Aldous-Pitman fragmentation at time t is
``(1 + L_t)^-1`` with L a stable-1/2 subordinator, ``E[exp(-lam L_t)] = exp(-t sqrt(2 lam))``.
Under this normalization X_1 is Rayleigh distributed.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from models.moments import factorial
from utils.validators import ContractViolation, HorizonError

logger = logging.getLogger(__name__)

DEFAULT_HORIZON = 200.0
DEFAULT_TAIL_THRESHOLD = 1e-4
GEOMETRIC_FLOOR = 1e-8
BOUND_TOLERANCE = 1e-6


@dataclass(frozen=True, eq=False)
class SubordinatorPath:
    times: np.ndarray
    values: np.ndarray

    @property
    def horizon(self):
        return float(self.times[-1])

    @property
    def step_count(self):
        return self.times.size - 1


def time_grid(step_count, horizon, spacing='geometric'):
    """
    Time grid ``0 = t_0 < ... < t_M = horizon``.

    ``geometric`` puts the grid points on a geometric progression from
    ``horizon * 1e-8`` up to the horizon, which resolves the early part of the
    path where the root mass moves fastest.
    """
    if step_count < 1 or horizon <= 0:
        raise ContractViolation('time grid needs step_count >= 1 and horizon > 0')
    if spacing == 'uniform' or step_count == 1:
        return np.linspace(0.0, horizon, step_count + 1)
    if spacing != 'geometric':
        raise ContractViolation(f'unknown grid spacing {spacing!r}')
    grid = np.concatenate([[0.0], horizon * np.geomspace(GEOMETRIC_FLOOR, 1.0, step_count)])
    grid[-1] = horizon
    return grid


def _stable_increments(steps, rng):
    # first-passage representation: T_a = a^2 / Z^2 for a standard normal Z
    normals = rng.standard_normal(steps.size)
    while np.any(normals == 0.0):
        zero = normals == 0.0
        normals[zero] = rng.standard_normal(int(zero.sum()))
    return steps ** 2 / normals ** 2


def sample_subordinator(step_count, horizon, rng, spacing='geometric'):
    """
    Sample the stable-1/2 subordinator on a time grid.

    Args:
        step_count (int): Number of grid steps M.
        horizon (float): Final time T.
        rng (numpy.random.Generator): Random stream.
        spacing (str): ``geometric`` (default) or ``uniform``.

    Returns:
        SubordinatorPath: ``L_0 = 0`` and increments ``dt^2 / Z^2``.
    """
    times = time_grid(step_count, horizon, spacing)
    increments = _stable_increments(np.diff(times), rng)
    return SubordinatorPath(times=times, values=np.concatenate([[0.0], np.cumsum(increments)]))


def extend_subordinator(path, horizon, rng, step=None):
    """Continue a path with fresh increments up to a larger horizon (uniform steps)."""
    if horizon <= path.horizon:
        return path
    if step is None:
        step = path.times[-1] - path.times[-2]
    count = max(1, int(math.ceil((horizon - path.horizon) / step)))
    extra = np.linspace(path.horizon, horizon, count + 1)[1:]
    increments = _stable_increments(np.diff(np.concatenate([[path.horizon], extra])), rng)
    return SubordinatorPath(
        times=np.concatenate([path.times, extra]),
        values=np.concatenate([path.values, path.values[-1] + np.cumsum(increments)]),
    )


def coarsen_subordinator(path, factor):
    """Keep every ``factor``-th grid point (and the last), on the same driving noise."""
    keep = np.arange(0, path.times.size, factor)
    if keep[-1] != path.times.size - 1:
        keep = np.append(keep, path.times.size - 1)
    return SubordinatorPath(times=path.times[keep], values=path.values[keep])


def root_mass(path):
    """``mu(T_t) = (1 + L_t)^-1`` on the grid."""
    return 1.0 / (1.0 + path.values)


def time_changed_mass(path, k, t):
    """``mu(T~_t) = mu(T_{t^k / k!})``, read off the grid as a right-continuous step."""
    s = np.asarray(t, dtype=float) ** k / factorial(k)
    index = np.searchsorted(path.times, s, side='right') - 1
    return root_mass(path)[np.clip(index, 0, path.times.size - 1)]


def rayleigh_cdf(x):
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, -np.expm1(-0.5 * np.maximum(x, 0.0) ** 2), 0.0)


@dataclass(frozen=True)
class ContinuumSample:
    k: float
    value: float
    truncation_tail: float
    horizon: float = None
    step_count: int = None
    rule: str = 'left'


def sample_xk(k, path, tail_threshold=DEFAULT_TAIL_THRESHOLD, rule='left'):
    """
    Evaluate ``X_k = (k!)^(1/k) / k * int_0^inf mu(T_s) s^(1/k - 1) ds`` on a path.

    The s-integral is exact on every step; the mass is taken at the left end of
    the step (an upper bound, L being non-decreasing) or at the right end
    (``rule="right"``, a lower bound).

    Args:
        k (float): Clock parameter, >= 1.
        path (SubordinatorPath): Subordinator path.
        tail_threshold (float): Maximum root mass allowed at the horizon.
        rule (str): ``left`` or ``right``.

    Returns:
        ContinuumSample: Value and a heuristic bound on the truncated tail.

    Raises:
        HorizonError: The root mass at the horizon exceeds ``tail_threshold``.
    """
    if k < 1:
        raise ContractViolation('k must be >= 1')
    mass = root_mass(path)
    if mass[-1] >= tail_threshold:
        raise HorizonError(float(mass[-1]), tail_threshold)

    exponent = 1.0 / k
    powers = path.times ** exponent
    weights = k * np.diff(powers)
    if rule == 'left':
        heights = mass[:-1]
    elif rule == 'right':
        heights = mass[1:]
    else:
        raise ContractViolation(f'unknown quadrature rule {rule!r}')

    constant = factorial(k) ** exponent / k
    return ContinuumSample(
        k=float(k),
        value=float(constant * np.dot(heights, weights)),
        truncation_tail=float(constant * mass[-1] * k * powers[-1]),
        horizon=path.horizon,
        step_count=path.step_count,
        rule=rule,
    )


def sample_xk_with_extension(k_values, path, rng, tail_threshold=DEFAULT_TAIL_THRESHOLD,
                             max_doublings=30):
    """
    Evaluate ``X_k`` for several k on one path, extending the path if needed.

    Returns:
        tuple: ``(path, {k: ContinuumSample})`` with the (possibly extended) path.
    """
    for _ in range(max_doublings + 1):
        if root_mass(path)[-1] < tail_threshold:
            return path, {float(k): sample_xk(k, path, tail_threshold) for k in k_values}
        logger.warning(f"Root mass {root_mass(path)[-1]:.2e} at horizon {path.horizon:g}; extending")
        path = extend_subordinator(path, 2.0 * path.horizon, rng)
    raise HorizonError(float(root_mass(path)[-1]), tail_threshold)


@dataclass(frozen=True, eq=False)
class ReducedCutTimes:
    point_count: int
    separation_times: np.ndarray

    def never(self):
        """Points whose root path has zero length are never separated."""
        return np.isinf(self.separation_times)


def _path_segments(increments):
    """Root paths of every point as lists of ``(edge, low, high)`` height intervals."""
    tops = increments.branch_heights + increments.deltas
    paths = []
    for r in range(len(increments.deltas)):
        own = [(r, float(increments.branch_heights[r]), float(tops[r]))]
        attach = int(increments.attachments[r])
        if attach >= 0:
            cut = float(increments.branch_heights[r])
            below = [(edge, low, min(high, cut)) for edge, low, high in paths[attach] if low < cut]
            own = below + own
        paths.append(own)
    return paths


def sample_reduced_cut_times(increments, k, rng):
    """
    Separation times from the root of the marked points of a reduced CRT subtree.

    Each maximal piece of the reduced tree between branch points carries an
    independent exponential clock with rate equal to its length; a point is
    separated at ``(k! E)^(1/k)`` where ``E`` is the smallest clock on its root
    path.

    Args:
        increments (SpanningIncrements): Reduced-tree structure.
        k (float): Clock parameter, >= 1.
        rng (numpy.random.Generator): Random stream.

    Returns:
        ReducedCutTimes: One separation time per point (``inf`` = never).
    """
    if np.any(increments.deltas < 0):
        raise ContractViolation('spanning increments must be non-negative')
    paths = _path_segments(increments)

    # split every edge at the heights where later points branch off it
    breakpoints = {r: {float(increments.branch_heights[r]),
                       float(increments.branch_heights[r] + increments.deltas[r])}
                   for r in range(len(increments.deltas))}
    for path in paths:
        for edge, low, high in path:
            breakpoints[edge].update((low, high))

    pieces = {}
    for edge in sorted(breakpoints):
        heights = sorted(breakpoints[edge])
        for low, high in zip(heights[:-1], heights[1:]):
            length = high - low
            pieces[(edge, low, high)] = rng.exponential(1.0 / length) if length > 0 else np.inf

    exponent = 1.0 / k
    kfact = factorial(k)
    times = np.empty(len(paths))
    for r, path in enumerate(paths):
        clock = min((value for (edge, low, high), value in pieces.items()
                     if any(edge == e and low >= lo and high <= hi for e, lo, hi in path)),
                    default=np.inf)
        times[r] = (kfact * clock) ** exponent if np.isfinite(clock) else np.inf
    return ReducedCutTimes(point_count=len(paths), separation_times=times)


@dataclass(frozen=True)
class BoundReport:
    slack: dict
    violations: tuple
    tolerance: float = BOUND_TOLERANCE
    ok: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, 'ok', not self.violations)

    def to_dict(self):
        return {
            'ok': self.ok,
            'tolerance': self.tolerance,
            'slack': {str(k): v for k, v in self.slack.items()},
            'violations': list(self.violations),
        }


def check_bound(samples, tolerance=BOUND_TOLERANCE):
    """
    Check ``k Gamma(k+1)^(-1/k) X_k <= k + X_1`` for samples sharing one path.

    Args:
        samples (dict): ``{k: ContinuumSample}``; must contain ``k = 1``.
        tolerance (float): Allowed numerical excess.

    Returns:
        BoundReport: Slack ``k + X_1 - lhs`` per k and the violating k values.
    """
    if 1.0 not in samples:
        raise ContractViolation('the bound needs the k = 1 sample of the same path')
    reference = samples[1.0]
    if any((s.horizon, s.step_count) != (reference.horizon, reference.step_count)
           for s in samples.values()):
        raise ContractViolation('bound samples must come from one subordinator path')
    x_one = reference.value
    slack = {}
    violations = []
    for k, sample in sorted(samples.items()):
        lhs = k * factorial(k) ** (-1.0 / k) * sample.value
        slack[k] = float(k + x_one - lhs)
        if slack[k] < -tolerance:
            violations.append(k)
            logger.error(f"Bound violated for k={k}: slack {slack[k]:.3e}")
    return BoundReport(slack=slack, violations=tuple(violations), tolerance=tolerance)
