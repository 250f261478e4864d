# utils/helpers.py
import csv
import json
import logging
import os

import numpy as np

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1


def splitmix64(value):
    """One round of the SplitMix64 finalizer on a 64-bit integer."""
    z = (value + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_stream(seed, task_index):
    """
    Build the random stream of one task.

    The Philox key is a 64-bit mix of the experiment seed and the task index, so
    streams depend only on ``(seed, task_index)`` and never on scheduling.

    Args:
        seed (int): Experiment seed (unsigned 64-bit).
        task_index (int): Index of the task in the experiment's task list.

    Returns:
        numpy.random.Generator: Independent counter-based generator.
    """
    high = splitmix64(seed & _MASK64)
    low = splitmix64(high ^ (task_index & _MASK64))
    return np.random.Generator(np.random.Philox(key=(high << 64) | low))


def to_builtin(value):
    """Convert numpy scalars/arrays (recursively) into JSON-serializable objects."""
    if isinstance(value, dict):
        return {str(key): to_builtin(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(item) for item in value]
    if isinstance(value, np.ndarray):
        return [to_builtin(item) for item in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        value = float(value)
    if isinstance(value, float) and not np.isfinite(value):
        # JSON has no infinities
        return None if np.isnan(value) else ('inf' if value > 0 else '-inf')
    return value


def _format_cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer, np.bool_)):
        return str(value.item())
    return str(value)


def write_csv(path, columns, rows):
    """
    Write rows to a CSV file with a fixed column order.

    Args:
        path (str): Target file.
        columns (list): Header names; each row is a dict keyed by them.
        rows (list): Row dicts.
    """
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row[column]) for column in columns])
    logger.info(f"Wrote {len(rows)} rows to {path}")


def write_json(path, payload):
    """Write ``payload`` as indented JSON with a trailing newline."""
    with open(path, 'w') as handle:
        json.dump(to_builtin(payload), handle, indent=2)
        handle.write('\n')
    logger.info(f"Wrote {path}")


def ensure_dir(path):
    """Create ``path`` (and parents) if it does not exist and return it."""
    os.makedirs(path, exist_ok=True)
    return path
