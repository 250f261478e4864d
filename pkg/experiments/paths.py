# experiments/paths.py
"""Experiment modes on subordinator paths: ``continuum`` and ``bound-check``."""
import logging
import math

import numpy as np

from experiments.registry import mode
from experiments.tasks import (CONTINUUM_BLOCK, ExperimentResult, Table, run_tasks, summarize,
                               tagged, task_stream)
from models.continuum import (BOUND_TOLERANCE, check_bound, rayleigh_cdf, sample_subordinator,
                              sample_xk, sample_xk_with_extension)
from utils.stats import ks_against_cdf

logger = logging.getLogger(__name__)

CONTINUUM_COLUMNS = ['k', 'value', 'truncationTail', 'horizon', 'stepCount', 'seed']
BOUND_COLUMNS = ['path', 'k', 'value', 'slack', 'seed']

RAYLEIGH_MEAN = math.sqrt(math.pi / 2.0)


def _sampled_path(config, block, index, k_values):
    rng = task_stream(config, block, index)
    path = sample_subordinator(config.step_count, config.horizon, rng)
    return sample_xk_with_extension(k_values, path, rng, config.tail_threshold)


def continuum_task(config, block, index):
    """One X_k sample, with the right-rule value kept for the quadrature bracket."""
    path, samples = _sampled_path(config, block, index, [config.k])
    sample = samples[float(config.k)]
    lower = sample_xk(config.k, path, config.tail_threshold, rule='right')
    return {
        'k': sample.k,
        'value': sample.value,
        'truncationTail': sample.truncation_tail,
        'horizon': sample.horizon,
        'stepCount': sample.step_count,
        'seed': config.seed,
        'lowerValue': lower.value,
    }


def continuum_samples(config):
    """Rows of ``continuum_sims`` independent X_k samples."""
    logger.info(f"Sampling {config.continuum_sims} continuum paths for k={config.k}")
    return run_tasks(continuum_task, config, CONTINUUM_BLOCK, config.continuum_sims)


def continuum_summary(rows, config):
    values = np.array([row['value'] for row in rows])
    lower = np.array([row['lowerValue'] for row in rows])
    return {
        'k': float(config.k),
        'value': summarize(values),
        'meanBracketWidth': float(np.mean(values - lower)),
        'maxTruncationTail': float(max(row['truncationTail'] for row in rows)),
        'extendedPaths': sum(1 for row in rows if row['horizon'] > config.horizon),
    }


@mode('continuum')
def run_continuum(config):
    rows = continuum_samples(config)
    values = np.array([row['value'] for row in rows])
    result = ExperimentResult(
        tables={'samples.csv': Table(CONTINUUM_COLUMNS, rows)},
        results=continuum_summary(rows, config),
        distributions={f'continuum k={config.k}': values},
    )
    if float(config.k) == 1.0:
        fit = ks_against_cdf(values, rayleigh_cdf)
        result.gof.append(tagged(fit, reference='rayleigh'))
        result.results['rayleighMean'] = RAYLEIGH_MEAN
        result.results['meanRelativeError'] = abs(float(values.mean()) - RAYLEIGH_MEAN) / RAYLEIGH_MEAN
        logger.info(f"Rayleigh KS distance {fit.statistic:.4f} (p={fit.p_value:.3g})")
    return result


def _bound_k_values(config):
    return sorted({float(k) for k in config.k_values} | {1.0})


def bound_task(config, block, index):
    """Every k evaluated on one shared path, then the pathwise bound."""
    k_values = _bound_k_values(config)
    _, samples = _sampled_path(config, block, index, k_values)
    report = check_bound(samples)
    return [
        {'path': index, 'k': k, 'value': samples[k].value, 'slack': report.slack[k],
         'seed': config.seed}
        for k in k_values
    ]


@mode('bound-check')
def run_bound_check(config):
    per_path = run_tasks(bound_task, config, CONTINUUM_BLOCK, config.continuum_sims)
    rows = [row for rows in per_path for row in rows]
    per_k = []
    for k in _bound_k_values(config):
        slack = np.array([row['slack'] for row in rows if row['k'] == k])
        per_k.append({
            'k': k,
            'minSlack': float(slack.min()),
            'meanSlack': float(slack.mean()),
            'violations': int(np.sum(slack < -BOUND_TOLERANCE)),
        })
    violations = sum(entry['violations'] for entry in per_k)
    if violations:
        logger.error(f"Pathwise bound violated {violations} times")
    else:
        logger.info(f"Pathwise bound held on all {len(per_path)} paths")

    return ExperimentResult(
        tables={'samples.csv': Table(BOUND_COLUMNS, rows)},
        results={'paths': len(per_path), 'tolerance': BOUND_TOLERANCE, 'ok': violations == 0,
                 'perK': per_k},
        distributions={f'slack k={entry["k"]}': [row['slack'] for row in rows if row['k'] == entry['k']]
                       for entry in per_k},
    )
