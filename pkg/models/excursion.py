# models/excursion.py
"""Grid Brownian excursion coding the Brownian CRT.

Values are twice a standard normalized excursion, so ``d(s, t) = e_s + e_t - 2 b(s, t)``
is the CRT distance with the usual conventions.
"""
import csv
import logging
import threading
from dataclasses import dataclass

import numpy as np

from utils.validators import ContractViolation

logger = logging.getLogger(__name__)

EXCURSION_SCALE = 2.0
CLAMP_TOLERANCE = 1e-9


class Excursion:
    """Immutable grid excursion ``e_0..e_N`` on ``s_i = i / N``.

    Args:
        values (array): Excursion values, ``values[0] == values[-1] == 0``.
        bridge (array, optional): Unscaled Brownian bridge the excursion was
            built from; needed by :func:`refine_excursion`.
    """

    def __init__(self, values, bridge=None):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or values.size < 3:
            raise ContractViolation('an excursion needs at least three grid values')
        if values[0] != 0.0 or values[-1] != 0.0 or np.any(values < 0):
            raise ContractViolation('excursion must vanish at both ends and stay non-negative')
        values.setflags(write=False)
        self.values = values
        self.bridge = bridge
        self._table = None
        self._lock = threading.Lock()

    @property
    def N(self):
        return self.values.size - 1

    def index_of(self, s):
        """Snap a time in [0, 1] to the nearest grid index."""
        if not 0.0 <= s <= 1.0:
            raise ContractViolation(f'excursion time {s} outside [0, 1]')
        return int(np.rint(s * self.N))

    def at(self, s):
        return float(self.values[self.index_of(s)])

    def build_index(self):
        """Build the sparse range-minimum table (idempotent, thread-safe)."""
        if self._table is None:
            with self._lock:
                if self._table is None:
                    self._table = _sparse_table(self.values)
        return self._table

    def range_min_index(self, i, j):
        """Minimum of ``values[min(i,j)..max(i,j)]`` in O(1)."""
        table = self.build_index()
        lo, hi = (i, j) if i <= j else (j, i)
        depth = (hi - lo + 1).bit_length() - 1
        return float(min(table[depth][lo], table[depth][hi - (1 << depth) + 1]))


def _sparse_table(values):
    # table[d][i] = min(values[i : i + 2**d])
    table = [values]
    span = 1
    while 2 * span <= values.size:
        previous = table[-1]
        table.append(np.minimum(previous[:-span], previous[span:]))
        span *= 2
    logger.debug(f"Sparse table with {len(table)} levels for N={values.size - 1}")
    return table


def sample_bridge(N, rng):
    """Standard Brownian bridge on ``i / N`` from Gaussian increments with drift removed."""
    if N < 2:
        raise ContractViolation('bridge needs N >= 2')
    walk = np.concatenate([[0.0], np.cumsum(rng.standard_normal(N) / np.sqrt(N))])
    return walk - np.linspace(0.0, 1.0, N + 1) * walk[-1]


def vervaat_transform(bridge):
    """Rotate the bridge at its minimum; the result is a (scaled) excursion."""
    N = bridge.size - 1
    shift = int(np.argmin(bridge[:N]))
    rotated = np.concatenate([bridge[shift:N], bridge[:shift + 1]]) - bridge[shift]
    rotated[0] = rotated[-1] = 0.0
    return EXCURSION_SCALE * np.maximum(rotated, 0.0)


def sample_excursion(N, rng):
    """
    Sample the grid excursion ``e`` with ``e / 2`` a standard Brownian excursion.

    Args:
        N (int): Grid size (N + 1 values).
        rng (numpy.random.Generator): Random stream.

    Returns:
        Excursion: Vervaat transform of a Brownian bridge, scaled by 2.
    """
    bridge = sample_bridge(N, rng)
    return Excursion(vervaat_transform(bridge), bridge=bridge)


def refine_excursion(excursion, rng):
    """
    Halve the grid step while keeping the driving noise.

    Midpoints of the stored bridge are drawn from the conditional bridge law
    (mean of neighbours, variance h / 4) before the Vervaat transform is redone.
    """
    if excursion.bridge is None:
        raise ContractViolation('refinement needs the excursion to carry its bridge')
    coarse = excursion.bridge
    N = coarse.size - 1
    midpoints = 0.5 * (coarse[:-1] + coarse[1:]) + rng.standard_normal(N) * np.sqrt(0.25 / N)
    fine = np.empty(2 * N + 1)
    fine[0::2] = coarse
    fine[1::2] = midpoints
    return Excursion(vervaat_transform(fine), bridge=fine)


def range_min(e, s, t):
    """b(s, t): minimum of e between s and t (snapped to the grid, inclusive)."""
    return e.range_min_index(e.index_of(s), e.index_of(t))


def crt_distance(e, s, t):
    """CRT pseudo-distance ``e_s + e_t - 2 b(s, t)``."""
    i, j = e.index_of(s), e.index_of(t)
    return float(e.values[i] + e.values[j] - 2.0 * e.range_min_index(i, j))


@dataclass(frozen=True, eq=False)
class SpanningIncrements:
    """Lengths added to the reduced tree as each point is attached.

    ``branch_heights[r]`` is the height of the branch point where point r joins
    the tree spanned by the earlier points (0 for the first point) and
    ``attachments[r]`` the earlier point whose root path carries that branch
    point (-1 for the first point).
    """
    points: tuple
    deltas: np.ndarray
    branch_heights: np.ndarray
    attachments: np.ndarray

    @property
    def total_length(self):
        return float(self.deltas.sum())


def spanning_increments(e, points):
    """
    Spanning increments of the reduced tree spanned by the root and ``points``.

    Args:
        e (Excursion): The excursion.
        points (sequence): Times ``s_1..s_q`` in [0, 1], in insertion order.

    Returns:
        SpanningIncrements: ``Delta_1 = e_{s_1}`` and
        ``Delta_r = e_{s_r} - max_{i<r} b(s_i, s_r)``.
    """
    if len(points) < 1:
        raise ContractViolation('spanning increments need at least one point')
    indices = [e.index_of(s) for s in points]
    q = len(indices)
    deltas = np.empty(q)
    heights = np.zeros(q)
    attachments = np.full(q, -1, dtype=np.int64)
    deltas[0] = e.values[indices[0]]
    for r in range(1, q):
        overlaps = [e.range_min_index(indices[i], indices[r]) for i in range(r)]
        best = int(np.argmax(overlaps))
        heights[r] = overlaps[best]
        attachments[r] = best
        raw = e.values[indices[r]] - overlaps[best]
        if raw < -CLAMP_TOLERANCE:
            raise ContractViolation(f'negative spanning increment {raw!r}')
        deltas[r] = max(raw, 0.0)
    return SpanningIncrements(
        points=tuple(float(s) for s in points),
        deltas=deltas,
        branch_heights=heights,
        attachments=attachments,
    )


def dump_excursion_csv(e, path):
    """Write ``(i, e_i)`` rows for plotting."""
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(['i', 'e'])
        for i, value in enumerate(e.values):
            writer.writerow([i, repr(float(value))])
