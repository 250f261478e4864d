# models/kcut.py
"""The discrete k-cut process on a rooted tree.

Every vertex carries a rate-1 Poisson clock and is removed at its k-th ring.
Only rings on vertices still attached to the root count as cuts (records).
"""
import logging
from dataclasses import dataclass

import numpy as np

from models.moments import gamma_tail
from utils.validators import ContractViolation

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ClockAssignment:
    """Jump times of the per-vertex Poisson clocks.

    In full mode ``jumps`` has shape ``(n, k)``. In light mode only the first
    and the k-th jump are kept, as a ``(n, 2)`` array.
    """
    k: int
    jumps: np.ndarray
    full: bool = True

    @property
    def n(self):
        return self.jumps.shape[0]

    @property
    def first(self):
        return self.jumps[:, 0]

    @property
    def removal(self):
        """eta_v = eta_{v,k}, the time vertex v is removed."""
        return self.jumps[:, -1]

    @property
    def increments(self):
        if not self.full:
            raise ContractViolation('increments are only stored for full clocks')
        return np.diff(self.jumps, axis=1, prepend=0.0)


def clocks_from_increments(increments):
    """Build full clocks from an ``(n, k)`` array of positive waiting times."""
    increments = np.atleast_2d(np.asarray(increments, dtype=float))
    if np.any(increments <= 0):
        raise ContractViolation('clock increments must be strictly positive')
    return ClockAssignment(k=increments.shape[1], jumps=np.cumsum(increments, axis=1))


def sample_clocks(n, k, rng, full=True):
    """
    Sample the first k jump times of n independent rate-1 Poisson processes.

    Args:
        n (int): Number of vertices.
        k (int): Cuts needed to remove a vertex.
        rng (numpy.random.Generator): Random stream.
        full (bool): Keep every jump; otherwise keep only the first and k-th
            (the k-th drawn as the first plus an independent Gamma(k-1, 1)).

    Returns:
        ClockAssignment: Jump times per vertex.
    """
    if n < 1 or k < 1:
        raise ContractViolation('sample_clocks needs n >= 1 and k >= 1')
    if full or k <= 2:
        return clocks_from_increments(rng.standard_exponential((n, k)))
    first = rng.standard_exponential(n)
    last = first + rng.standard_gamma(k - 1, n)
    return ClockAssignment(k=k, jumps=np.column_stack([first, last]), full=False)


@dataclass(frozen=True)
class CutStatistics:
    total_cuts: int
    record_counts: tuple
    root_isolation_time: float

    @property
    def one_records(self):
        return self.record_counts[0]


@dataclass(frozen=True, eq=False)
class SurvivalTrajectory:
    separation_times: np.ndarray
    zero_cut_times: np.ndarray

    @property
    def n(self):
        return self.separation_times.size


def _check_sizes(tree, clocks):
    if clocks.n != tree.n:
        raise ContractViolation(f'clocks sized for {clocks.n} vertices, tree has {tree.n}')


def ancestor_minimum(tree, values):
    """
    Minimum of ``values`` over the strict ancestors of every vertex (+inf at the root).

    The sweep goes level by level from the root, so every parent is final
    before its children read it.
    """
    result = np.full(tree.n, np.inf)
    through = np.empty(tree.n)
    through[tree.root] = values[tree.root]
    parent = tree.parent
    for level in tree.levels[1:]:
        up = parent[level]
        result[level] = through[up]
        through[level] = np.minimum(through[up], values[level])
    return result


def count_records(tree, clocks):
    """
    Count the cuts of the k-cut process.

    Vertex v is an r-record iff ``eta_{v,r}`` is smaller than the removal time of
    every strict ancestor. Ties go to the ancestor, which has the smaller index.

    Args:
        tree (RootedTree): The tree.
        clocks (ClockAssignment): Full clocks, one row per vertex.

    Returns:
        CutStatistics: Total cuts, per-r record counts and root isolation time.
    """
    _check_sizes(tree, clocks)
    if not clocks.full:
        raise ContractViolation('record counts need full clocks')

    cutoff = ancestor_minimum(tree, clocks.removal)
    records = clocks.jumps < cutoff[:, None]
    per_rank = records.sum(axis=0)
    stats = CutStatistics(
        total_cuts=int(per_rank.sum()),
        record_counts=tuple(int(c) for c in per_rank),
        root_isolation_time=float(clocks.removal[tree.root]),
    )
    assert stats.total_cuts == sum(stats.record_counts)
    return stats


def survival_trajectory(tree, clocks):
    """
    Separation times of every vertex from the root.

    Args:
        tree (RootedTree): The tree.
        clocks (ClockAssignment): Full or light clocks.

    Returns:
        SurvivalTrajectory: Sorted ``eps_v = min(eta over root path)`` and sorted
        ``min(eps_v, eta_{v,1})`` (the times v stops counting towards a_n).
    """
    _check_sizes(tree, clocks)
    separation = np.minimum(ancestor_minimum(tree, clocks.removal), clocks.removal)
    zero_cut = np.minimum(separation, clocks.first)
    return SurvivalTrajectory(
        separation_times=np.sort(separation),
        zero_cut_times=np.sort(zero_cut),
    )


def evaluate_mass(trajectory, t, delta=1.0):
    """
    Root-component mass and zero-cut fraction at time ``delta * t``.

    Args:
        trajectory (SurvivalTrajectory): Output of :func:`survival_trajectory`.
        t (float): Rescaled time, >= 0.
        delta (float): Time scale, > 0.

    Returns:
        tuple: ``(mu_n(delta t), a_n(delta t) / n)``.
    """
    if t < 0 or delta <= 0:
        raise ContractViolation('evaluate_mass needs t >= 0 and delta > 0')
    x = delta * t
    n = trajectory.n
    mu = (n - np.searchsorted(trajectory.separation_times, x, side='right')) / n
    a_frac = (n - np.searchsorted(trajectory.zero_cut_times, x, side='right')) / n
    return float(mu), float(a_frac)


def time_scale(n, sigma, k):
    """delta_n = sigma^(1/k) n^(-1/2k)."""
    return sigma ** (1.0 / k) * n ** (-0.5 / k)


def scaled_cut_statistic(stats, n, sigma, k):
    """``X_k(T_n) / (n delta_n)``; accepts CutStatistics or a raw cut count."""
    total = stats.total_cuts if isinstance(stats, CutStatistics) else stats
    return total / (n * time_scale(n, sigma, k))


def record_excess(stats, n, sigma, k):
    """``(X_k - X_{k,1}) / (n delta_n)``, the share of cuts beyond first rings."""
    return (stats.total_cuts - stats.one_records) / (n * time_scale(n, sigma, k))


def integrated_zero_cut_mass(trajectory, delta):
    """Integral over t of ``a_n(delta t) / n``, the compensator of the 1-record count."""
    return float(trajectory.zero_cut_times.sum() / (trajectory.n * delta))


def expected_mass_given_tree(tree, t, k):
    """
    ``E[mu_n(t) | T_n]``: mean over vertices of ``p(t)^ht(v)``.

    ``p(t) = P(eta_v > t)`` and ``ht(v)`` counts the vertices on the root path.
    """
    survival = gamma_tail(k, t)
    return float(np.mean(survival ** (tree.depth + 1)))


def first_cut_time_on_reduced_tree(tree, clocks, reduced):
    """Earliest removal time among the vertices of a reduced subtree."""
    _check_sizes(tree, clocks)
    if reduced.member_flags.size != tree.n:
        raise ContractViolation('reduced subtree was built on a different tree')
    return float(clocks.removal[reduced.member_flags].min())
