# experiments/trees.py
"""Experiment modes on conditioned Galton-Watson trees.

``discrete``, ``convergence``, ``records`` and ``reduced-cut``. Stream block b
holds the tasks for the b-th entry of ``n_list``.
"""
import logging
import math

import numpy as np

from config import Config
from experiments.paths import CONTINUUM_COLUMNS, continuum_samples, continuum_summary
from experiments.registry import mode
from experiments.tasks import (EXCURSION_BLOCK, ExperimentResult, Table, combined_z,
                               is_strictly_decreasing, run_tasks, summarize, tagged, task_stream)
from models.continuum import sample_reduced_cut_times
from models.excursion import sample_excursion, spanning_increments
from models.gwtree import (make_offspring_law, reduced_subtree, sample_conditioned_gw,
                           sample_uniform_vertices, scaled_reduced_length)
from models.kcut import (count_records, evaluate_mass, expected_mass_given_tree,
                         first_cut_time_on_reduced_tree, integrated_zero_cut_mass, record_excess,
                         sample_clocks, scaled_cut_statistic, survival_trajectory, time_scale)
from models.moments import factorial
from utils.stats import ks_against_cdf, ks_two_sample
from utils.validators import UnattainableSizeError

logger = logging.getLogger(__name__)


def discrete_columns(k):
    return (['n', 'k', 'sigma', 'seed', 'totalCuts']
            + [f'recordCount{r}' for r in range(1, k + 1)]
            + ['rootIsolationTime', 'scaledStatistic', 'scaledFirstRecords'])


RECORD_COLUMNS = ['n', 'k', 'sigma', 'seed', 'totalCuts', 'oneRecords', 'recordExcess',
                  'compensator', 'martingaleSquare', 'massAtScale', 'expectedMassAtScale',
                  'zeroCutFractionAtScale']
REDUCED_COLUMNS = ['n', 'k', 'sigma', 'seed', 'reducedCount', 'length', 'scaledFirstCut', 'pit']
CONTINUUM_REDUCED_COLUMNS = ['k', 'gridSize', 'seed', 'length', 'firstCut', 'pit']


def _sampled_tree(config, block, index):
    law = make_offspring_law(config.law)
    n = config.n_list[block]
    rng = task_stream(config, block, index)
    tree = sample_conditioned_gw(law, n, rng, Config.REJECTION_CAP)
    return law, tree, rng


def discrete_task(config, block, index):
    """Record counts of one tree of size ``n_list[block]``."""
    law, tree, rng = _sampled_tree(config, block, index)
    k = int(config.k)
    stats = count_records(tree, sample_clocks(tree.n, k, rng))
    row = {
        'n': tree.n,
        'k': k,
        'sigma': law.sigma,
        'seed': config.seed,
        'totalCuts': stats.total_cuts,
        'rootIsolationTime': stats.root_isolation_time,
        'scaledStatistic': scaled_cut_statistic(stats, tree.n, law.sigma, k),
        'scaledFirstRecords': scaled_cut_statistic(stats.one_records, tree.n, law.sigma, k),
    }
    row.update({f'recordCount{r}': count for r, count in enumerate(stats.record_counts, start=1)})
    return row


def records_task(config, block, index):
    """Record decomposition, compensator and mean-mass diagnostics of one tree."""
    law, tree, rng = _sampled_tree(config, block, index)
    k = int(config.k)
    clocks = sample_clocks(tree.n, k, rng)
    stats = count_records(tree, clocks)
    trajectory = survival_trajectory(tree, clocks)
    delta = time_scale(tree.n, law.sigma, k)
    # integral of a_n(t) over unscaled time
    compensator = tree.n * integrated_zero_cut_mass(trajectory, 1.0)
    mass, zero_cut_fraction = evaluate_mass(trajectory, 1.0, delta)
    return {
        'n': tree.n,
        'k': k,
        'sigma': law.sigma,
        'seed': config.seed,
        'totalCuts': stats.total_cuts,
        'oneRecords': stats.one_records,
        'recordExcess': record_excess(stats, tree.n, law.sigma, k),
        'compensator': compensator,
        'martingaleSquare': (stats.one_records - compensator) ** 2,
        'massAtScale': mass,
        'expectedMassAtScale': expected_mass_given_tree(tree, delta, k),
        'zeroCutFractionAtScale': zero_cut_fraction,
    }


def reduced_cut_task(config, block, index):
    """Rescaled first removal time on the tree reduced to uniform marked vertices."""
    law, tree, rng = _sampled_tree(config, block, index)
    k = int(config.k)
    clocks = sample_clocks(tree.n, k, rng, full=False)
    reduced = reduced_subtree(tree, sample_uniform_vertices(tree, config.marked_points, rng))
    length = scaled_reduced_length(tree, reduced, law.sigma)
    first_cut = first_cut_time_on_reduced_tree(tree, clocks, reduced) / time_scale(tree.n, law.sigma, k)
    return {
        'n': tree.n,
        'k': k,
        'sigma': law.sigma,
        'seed': config.seed,
        'reducedCount': reduced.vertex_count,
        'length': length,
        'scaledFirstCut': first_cut,
        'pit': math.exp(-length * first_cut ** k / factorial(k)),
    }


def continuum_reduced_task(config, block, index):
    """First cut on a reduced CRT spanned by uniform points of a fresh excursion."""
    rng = task_stream(config, block, index)
    excursion = sample_excursion(config.grid_size, rng)
    increments = spanning_increments(excursion, rng.uniform(0.0, 1.0, config.marked_points))
    cuts = sample_reduced_cut_times(increments, config.k, rng)
    first_cut = float(cuts.separation_times.min())
    length = increments.total_length
    pit = math.exp(-length * first_cut ** config.k / factorial(config.k)) if math.isfinite(first_cut) else math.nan
    return {
        'k': config.k,
        'gridSize': config.grid_size,
        'seed': config.seed,
        'length': length,
        'firstCut': first_cut,
        'pit': pit,
    }


def tree_blocks(config, task):
    """
    Run ``sims`` tasks for every attainable size in ``n_list``.

    Returns:
        tuple: ``([(n, rows)], skipped)`` where ``skipped`` lists
        ``{"n", "reason"}`` records for sizes the law cannot produce.
    """
    law = make_offspring_law(config.law)
    blocks, skipped = [], []
    for block, n in enumerate(config.n_list):
        if not law.is_attainable(n):
            reason = f'offspring support has period {law.period}'
            logger.info(f"Skipping n={n}: {reason}")
            skipped.append({'n': n, 'reason': reason})
            continue
        logger.info(f"Simulating {config.sims} trees with n={n} ({law.name} law)")
        try:
            rows = run_tasks(task, config, block, config.sims)
        except UnattainableSizeError as e:
            logger.info(f"Skipping n={n}: {str(e)}")
            skipped.append({'n': n, 'reason': str(e)})
            continue
        blocks.append((n, rows))
    return blocks, skipped


def _column(rows, name):
    return np.array([row[name] for row in rows], dtype=float)


def uniform_cdf(x):
    return np.clip(x, 0.0, 1.0)


@mode('discrete')
def run_discrete(config):
    blocks, skipped = tree_blocks(config, discrete_task)
    result = ExperimentResult(skipped=skipped)
    rows = []
    per_n = []
    for n, block_rows in blocks:
        rows.extend(block_rows)
        scaled = _column(block_rows, 'scaledStatistic')
        per_n.append({
            'n': n,
            'scaledStatistic': summarize(scaled),
            'meanTotalCuts': float(_column(block_rows, 'totalCuts').mean()),
            'meanRootIsolationTime': float(_column(block_rows, 'rootIsolationTime').mean()),
        })
        result.distributions[f'discrete n={n}'] = scaled
    result.tables['samples.csv'] = Table(discrete_columns(int(config.k)), rows)
    result.results = {'k': int(config.k), 'perN': per_n}
    return result


@mode('convergence')
def run_convergence(config):
    blocks, skipped = tree_blocks(config, discrete_task)
    continuum_rows = continuum_samples(config)
    limit = _column(continuum_rows, 'value')

    result = ExperimentResult(skipped=skipped)
    rows, per_n = [], []
    for n, block_rows in blocks:
        rows.extend(block_rows)
        scaled = _column(block_rows, 'scaledStatistic')
        fit = tagged(ks_two_sample(scaled, limit), n=n, sample='scaledStatistic')
        # 1-records only, without the record excess
        first_fit = tagged(ks_two_sample(_column(block_rows, 'scaledFirstRecords'), limit), n=n,
                           sample='scaledFirstRecords')
        result.gof.extend([fit, first_fit])
        per_n.append({
            'n': n,
            'scaledStatistic': summarize(scaled),
            'ksDistance': fit.statistic,
            'firstRecordKsDistance': first_fit.statistic,
        })
        result.distributions[f'discrete n={n}'] = scaled
        logger.info(f"n={n}: KS distance to the continuum law {fit.statistic:.4f} "
                    f"({first_fit.statistic:.4f} from 1-records)")
    result.distributions[f'continuum k={config.k}'] = limit

    distances = [entry['ksDistance'] for entry in per_n]
    result.tables['samples.csv'] = Table(discrete_columns(int(config.k)), rows)
    result.tables['continuum.csv'] = Table(CONTINUUM_COLUMNS, continuum_rows)
    result.results = {
        'k': int(config.k),
        'perN': per_n,
        'continuum': continuum_summary(continuum_rows, config),
        'ksDecreasing': is_strictly_decreasing(distances),
    }
    return result


@mode('records')
def run_records(config):
    blocks, skipped = tree_blocks(config, records_task)
    result = ExperimentResult(skipped=skipped)
    rows, per_n = [], []
    for n, block_rows in blocks:
        rows.extend(block_rows)
        excess = _column(block_rows, 'recordExcess')
        martingale = summarize(_column(block_rows, 'martingaleSquare'))
        compensator = summarize(_column(block_rows, 'compensator'))
        mass_gap = _column(block_rows, 'massAtScale') - _column(block_rows, 'expectedMassAtScale')
        per_n.append({
            'n': n,
            'recordExcess': summarize(excess),
            'compensatorIdentity': {
                'meanSquaredMartingale': martingale,
                'meanCompensator': compensator,
                'z': combined_z(martingale, compensator),
            },
            'massMinusExpectation': summarize(mass_gap),
        })
        result.distributions[f'record excess n={n}'] = excess
    result.tables['samples.csv'] = Table(RECORD_COLUMNS, rows)
    result.results = {
        'k': int(config.k),
        'perN': per_n,
        'recordExcessDecreasing': is_strictly_decreasing(
            [entry['recordExcess']['mean'] for entry in per_n]),
    }
    return result


@mode('reduced-cut')
def run_reduced_cut(config):
    blocks, skipped = tree_blocks(config, reduced_cut_task)
    result = ExperimentResult(skipped=skipped)
    rows, per_n = [], []
    for n, block_rows in blocks:
        rows.extend(block_rows)
        pit = _column(block_rows, 'pit')
        fit = tagged(ks_against_cdf(pit, uniform_cdf), n=n, reference='uniform')
        result.gof.append(fit)
        per_n.append({'n': n, 'ksDistance': fit.statistic,
                      'meanLength': float(_column(block_rows, 'length').mean())})
        result.distributions[f'pit n={n}'] = pit

    logger.info(f"Sampling {config.continuum_sims} reduced continuum trees")
    continuum_rows = run_tasks(continuum_reduced_task, config, EXCURSION_BLOCK, config.continuum_sims)
    continuum_pit = _column(continuum_rows, 'pit')
    continuum_pit = continuum_pit[np.isfinite(continuum_pit)]
    continuum = {'never': int(len(continuum_rows) - continuum_pit.size)}
    if continuum_pit.size:
        fit = tagged(ks_against_cdf(continuum_pit, uniform_cdf), reference='uniform', source='continuum')
        result.gof.append(fit)
        continuum['ksDistance'] = fit.statistic
        result.distributions['pit continuum'] = continuum_pit

    result.tables['samples.csv'] = Table(REDUCED_COLUMNS, rows)
    result.tables['continuum.csv'] = Table(CONTINUUM_REDUCED_COLUMNS, continuum_rows)
    result.results = {
        'k': int(config.k),
        'markedPoints': config.marked_points,
        'perN': per_n,
        'continuum': continuum,
        'ksDecreasing': is_strictly_decreasing([entry['ksDistance'] for entry in per_n]),
    }
    return result
