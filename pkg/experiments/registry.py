# experiments/registry.py
import logging

logger = logging.getLogger(__name__)

# experiment name -> handler(config) returning an ExperimentResult
MODES = {}


def mode(name):
    """Register an experiment handler under ``name``."""
    def decorator(handler):
        if name in MODES:
            raise ValueError(f'experiment mode {name!r} registered twice')
        MODES[name] = handler
        logger.debug(f"Registered experiment mode {name}")
        return handler
    return decorator
