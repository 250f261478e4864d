# experiments/formulas.py
"""Experiment modes checking the moment formula and the Gamma/Poisson limit."""
import logging

import numpy as np

from experiments.registry import mode
from experiments.tasks import (EXCURSION_BLOCK, GAMMA_BLOCK, ExperimentResult, Table, combined_z,
                               run_tasks, summarize, task_stream)
from experiments.trees import discrete_task
from models.excursion import sample_excursion
from models.gwtree import make_offspring_law
from models.moments import (MomentEstimate, first_moment_given_excursion, first_moment_quadrature,
                            gamma_poisson_check, merge_estimates, moment_given_excursion)

logger = logging.getLogger(__name__)

MOMENT_COLUMNS = ['excursion', 'k', 'q', 'estimate', 'standardError', 'sampleCount', 'closedForm',
                  'excursionSeed', 'gridSize']


def moment_task(config, block, index):
    """Moment estimates of orders 1..q on one excursion."""
    rng = task_stream(config, block, index)
    excursion = sample_excursion(config.grid_size, rng)
    estimates = [first_moment_given_excursion(excursion, config.k, config.mc_samples, rng)]
    for q in range(2, config.q + 1):
        estimates.append(moment_given_excursion(excursion, config.k, q, config.mc_samples, rng))

    closed_form = first_moment_quadrature(excursion, config.k)
    rows = []
    for estimate in estimates:
        row = estimate.to_dict()
        row.update({
            'excursion': index,
            'closedForm': closed_form if estimate.q == 1 else '',
            'excursionSeed': config.seed,
            'gridSize': excursion.N,
        })
        rows.append(row)
    return rows


def _pooled(rows, q):
    selected = [MomentEstimate(k=row['k'], q=row['q'], estimate=row['estimate'],
                               standard_error=row['standardError'], sample_count=row['sampleCount'])
                for row in rows if row['q'] == q]
    pooled = selected[0]
    for estimate in selected[1:]:
        pooled = merge_estimates(pooled, estimate)
    return pooled


@mode('moments')
def run_moments(config):
    logger.info(f"Estimating moments up to q={config.q} on {config.continuum_sims} excursions")
    per_excursion = run_tasks(moment_task, config, EXCURSION_BLOCK, config.continuum_sims)
    rows = [row for rows in per_excursion for row in rows]

    first = [row for row in rows if row['q'] == 1]
    closed_forms = np.array([row['closedForm'] for row in first])
    gaps = np.array([abs(row['estimate'] - row['closedForm']) for row in first])
    errors = np.array([row['standardError'] for row in first])
    closed_summary = summarize(closed_forms)

    results = {
        'k': float(config.k),
        'q': config.q,
        'closedFormFirstMoment': closed_summary,
        'withinThreeStandardErrors': float(np.mean(gaps <= 3.0 * errors)),
        'pooled': [_pooled(rows, q).to_dict() for q in range(1, config.q + 1)],
    }
    result = ExperimentResult(
        tables={'samples.csv': Table(MOMENT_COLUMNS, rows)},
        distributions={'closed-form first moment': closed_forms},
    )

    if config.n_list:
        n = max(config.n_list)
        law = make_offspring_law(config.law)
        if float(config.k) != int(config.k):
            result.skipped.append({'n': n, 'reason': 'the discrete process needs an integer k'})
        elif law.is_attainable(n):
            logger.info(f"Comparing with {config.sims} discrete simulations at n={n}")
            discrete_rows = run_tasks(discrete_task, config, config.n_list.index(n), config.sims)
            scaled = np.array([row['scaledStatistic'] for row in discrete_rows])
            discrete_summary = summarize(scaled)
            z = combined_z(closed_summary, discrete_summary)
            results['discreteComparison'] = {
                'n': n,
                'scaledStatistic': discrete_summary,
                'z': z,
                'withinThreeSigma': z is not None and z <= 3.0,
            }
            result.distributions[f'discrete n={n}'] = scaled
        else:
            result.skipped.append({'n': n, 'reason': f'offspring support has period {law.period}'})

    result.results = results
    return result


def gamma_task(config, block, index):
    gamma = config.gamma
    rng = task_stream(config, block, index)
    return gamma_poisson_check(gamma['m'], gamma['a'], int(config.k), gamma['t_grid'], config.sims, rng)


@mode('gamma-check')
def run_gamma_check(config):
    report = run_tasks(gamma_task, config, GAMMA_BLOCK, 1)[0]
    columns = ['replication'] + [f'count@{t!r}' for t in report.t_grid]
    rows = []
    for replication, counts in enumerate(report.counts):
        row = {'replication': replication}
        row.update({column: int(c) for column, c in zip(columns[1:], counts)})
        rows.append(row)

    summary = report.to_dict()
    del summary['marginal'], summary['independence']
    return ExperimentResult(
        tables={'samples.csv': Table(columns, rows)},
        results=summary,
        gof=list(report.marginal_fits) + list(report.independence_fits),
        distributions={f'N({t!r})': report.counts[:, i] for i, t in enumerate(report.t_grid)},
    )
