# app.py
import argparse
import logging
import sys

# Import configuration
from config import Config, load_config

# Import experiment modes
from experiments import MODES, run_experiment
from utils.validators import EXPERIMENTS, ConfigError, KcutError

logger = logging.getLogger(__name__)


def build_parser():
    parser = argparse.ArgumentParser(
        prog='kcut',
        description='Simulate the k-cut model on conditioned Galton-Watson trees and its continuum limit.',
    )
    parser.add_argument('experiment', choices=EXPERIMENTS, help='experiment mode to run')
    parser.add_argument('--config', required=True, help='JSON experiment config')
    parser.add_argument('--seed', type=int, help='override the config seed (unsigned 64-bit)')
    parser.add_argument('--workers', type=int, help='override the worker count')
    parser.add_argument('--out', dest='output', help='override the output directory')
    parser.add_argument('--label', help='run label (default: seed-<seed>)')
    return parser


def main(argv=None):
    """Parse the command line, run one experiment and return the exit status."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, Config.LOG_LEVEL, logging.INFO),
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )

    overrides = {
        'experiment': args.experiment,
        'seed': args.seed,
        'workers': args.workers,
        'output': args.output,
        'label': args.label,
    }
    try:
        config = load_config(args.config, overrides)
    except ConfigError as e:
        for message in e.errors:
            print(f'kcut: {message}', file=sys.stderr)
        return 2

    if config.experiment not in MODES:
        print(f'kcut: experiment: {config.experiment} has no registered handler', file=sys.stderr)
        return 2

    try:
        run_dir = run_experiment(config)
    except KcutError as e:
        logger.error(f"Experiment aborted: {str(e)}")
        return 1

    print(run_dir)
    return 0


# Main entry point
if __name__ == '__main__':
    sys.exit(main())
