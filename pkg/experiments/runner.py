# experiments/runner.py
import logging
import os
import time

from experiments.registry import MODES
from experiments.tasks import ecdf_rows
from utils.helpers import ensure_dir, write_csv, write_json
from utils.validators import ConfigError

logger = logging.getLogger(__name__)

ECDF_COLUMNS = ['distribution', 'x', 'F']


def summary_payload(config, result):
    """The summary.json document; it holds nothing that depends on scheduling."""
    recorded = config.to_dict()
    # aggregates do not depend on the worker count
    del recorded['workers']
    return {
        'config': recorded,
        'results': result.results,
        'gof': [fit.to_dict() for fit in result.gof],
        'skipped': result.skipped,
    }


def run_experiment(config):
    """
    Run one experiment and write its report files.

    Files go to ``<output>/<experiment>/<label>/``: the raw sample tables,
    ``summary.json``, ``ecdf.csv``, ``config.json`` and ``timing.json``.

    Args:
        config (ExperimentConfig): Validated config.

    Returns:
        str: The run directory.

    Raises:
        ConfigError: No handler is registered for the experiment.
    """
    handler = MODES.get(config.experiment)
    if handler is None:
        raise ConfigError([f'experiment: no handler registered for {config.experiment!r}'])

    logger.info(f"Starting {config.experiment} experiment (seed={config.seed}, workers={config.workers})")
    started = time.perf_counter()
    try:
        result = handler(config)
    except Exception as e:
        logger.error(f"Experiment {config.experiment} failed: {str(e)}")
        raise
    elapsed = time.perf_counter() - started

    run_dir = ensure_dir(config.run_dir)
    for name, table in result.tables.items():
        write_csv(os.path.join(run_dir, name), table.columns, table.rows)
    write_csv(os.path.join(run_dir, 'ecdf.csv'), ECDF_COLUMNS, ecdf_rows(result.distributions))
    write_json(os.path.join(run_dir, 'summary.json'), summary_payload(config, result))
    write_json(os.path.join(run_dir, 'config.json'), config.to_dict())
    write_json(os.path.join(run_dir, 'timing.json'),
               {'runtimeSeconds': elapsed, 'workers': config.workers})

    logger.info(f"Finished {config.experiment} in {elapsed:.1f}s; results in {run_dir}")
    return run_dir
