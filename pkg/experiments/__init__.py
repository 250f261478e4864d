# experiments/__init__.py
# Importing the mode modules registers their handlers
from experiments import formulas, paths, trees  # noqa: F401
from experiments.registry import MODES
from experiments.runner import run_experiment

__all__ = ['MODES', 'run_experiment']
