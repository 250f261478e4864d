# experiments/tasks.py
"""Task fan-out and result containers shared by the experiment modes.

One task is one independent simulation (a tree, a path or an excursion). Its
random stream depends only on the experiment seed and its task index.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from functools import partial
from multiprocessing import Pool

import numpy as np

from utils.helpers import derive_stream
from utils.stats import EmpiricalDistribution, ecdf_pairs, mean_ci

logger = logging.getLogger(__name__)

BLOCK_WIDTH = 1 << 32

# Stream blocks for task families that are not indexed by a tree size
CONTINUUM_BLOCK = 1 << 16
EXCURSION_BLOCK = (1 << 16) + 1
GAMMA_BLOCK = (1 << 16) + 2


def stream_index(block, index):
    """Task index of the ``index``-th task in stream block ``block``."""
    return block * BLOCK_WIDTH + index


def task_stream(config, block, index):
    return derive_stream(config.seed, stream_index(block, index))


def run_tasks(task, config, block, count):
    """
    Run ``task(config, block, index)`` for ``index`` in ``range(count)``.

    Results come back in task-index order whatever the worker count.

    Args:
        task (callable): Module-level function (it is pickled for the pool).
        config (ExperimentConfig): The experiment config.
        block (int): Stream block of this task family.
        count (int): Number of tasks.

    Returns:
        list: One result per task.
    """
    bound = partial(task, config, block)
    try:
        if config.workers == 1 or count == 1:
            return [bound(index) for index in range(count)]
        chunksize = max(1, count // (4 * config.workers))
        with Pool(processes=config.workers) as pool:
            return pool.map(bound, range(count), chunksize=chunksize)
    except Exception as e:
        logger.error(f"Task {task.__name__} failed in block {block}: {str(e)}")
        raise


@dataclass
class Table:
    columns: list
    rows: list


@dataclass
class ExperimentResult:
    """What a mode hands back to the runner.

    ``tables`` maps file names to raw sample tables; ``samples.csv`` is the main
    one. ``distributions`` maps names to the sample arrays whose ECDFs go to
    ``ecdf.csv``.
    """
    tables: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    gof: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    distributions: dict = field(default_factory=dict)


def tagged(fit, **extra):
    """Copy of a GofResult with extra report fields."""
    return replace(fit, extra={**fit.extra, **extra})


def summarize(values):
    """Mean, 95% half-width and standard error of a sample (``None`` below two values)."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return {'mean': float(values.mean()), 'ciHalfWidth': None, 'standardError': None,
                'count': int(values.size)}
    mean, half_width = mean_ci(values)
    return {
        'mean': mean,
        'ciHalfWidth': half_width,
        'standardError': float(values.std(ddof=1) / math.sqrt(values.size)),
        'count': int(values.size),
    }


def combined_z(first, second):
    """``|m1 - m2| / sqrt(se1^2 + se2^2)`` for two :func:`summarize` outputs."""
    if first['standardError'] is None or second['standardError'] is None:
        return None
    spread = math.hypot(first['standardError'], second['standardError'])
    if spread == 0.0:
        return 0.0 if first['mean'] == second['mean'] else math.inf
    return abs(first['mean'] - second['mean']) / spread


def is_strictly_decreasing(values):
    values = [v for v in values if v is not None]
    return len(values) >= 2 and all(b < a for a, b in zip(values[:-1], values[1:]))


def ecdf_rows(distributions):
    """Rows ``(distribution, x, F)`` for every named sample."""
    rows = []
    for name, samples in distributions.items():
        samples = np.asarray(samples, dtype=float)
        samples = samples[np.isfinite(samples)]
        if samples.size == 0:
            continue
        xs, fs = ecdf_pairs(EmpiricalDistribution.from_samples(samples))
        rows.extend({'distribution': name, 'x': x, 'F': f} for x, f in zip(xs, fs))
    return rows
