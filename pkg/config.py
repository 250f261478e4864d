# config.py
import copy
import json
import os
from dataclasses import asdict, dataclass, field, fields

from dotenv import load_dotenv

from utils.validators import ConfigError, validate_config

# Load environment variables from .env file
load_dotenv()


class Config:
    """Process-wide defaults for the simulator."""

    # Reproducibility and execution
    SEED = int(os.getenv('KCUT_SEED', 20240101))
    WORKERS = int(os.getenv('KCUT_WORKERS', 1))
    OUTPUT_DIR = os.getenv('KCUT_OUTPUT_DIR', 'out')
    LOG_LEVEL = os.getenv('KCUT_LOG_LEVEL', 'INFO').upper()

    # Discretization
    GRID_SIZE = int(os.getenv('KCUT_GRID_SIZE', 10000))
    STEP_COUNT = int(os.getenv('KCUT_STEP_COUNT', 10000))
    HORIZON = float(os.getenv('KCUT_HORIZON', 200.0))
    TAIL_THRESHOLD = float(os.getenv('KCUT_TAIL_THRESHOLD', 1e-4))

    # Tree sampling
    OFFSPRING_LAW = os.getenv('KCUT_OFFSPRING_LAW', 'binary')
    REJECTION_CAP = int(os.getenv('KCUT_REJECTION_CAP', 10 ** 6))


def _default_subordinator():
    return {
        'step_count': Config.STEP_COUNT,
        'horizon': Config.HORIZON,
        'tail_threshold': Config.TAIL_THRESHOLD,
    }


def _default_gamma():
    return {'m': 100000, 'a': 1.0, 't_grid': [1.0, 2.0]}


@dataclass
class ExperimentConfig:
    """Parameters of one experiment run.

    Field names match the keys of the JSON config document.
    """
    experiment: str
    k: float = 2
    n_list: list = field(default_factory=list)
    law: object = field(default_factory=lambda: Config.OFFSPRING_LAW)
    sims: int = 1000
    continuum_sims: int = 1000
    grid_size: int = field(default_factory=lambda: Config.GRID_SIZE)
    subordinator: dict = field(default_factory=_default_subordinator)
    seed: int = field(default_factory=lambda: Config.SEED)
    workers: int = field(default_factory=lambda: Config.WORKERS)
    output: str = field(default_factory=lambda: Config.OUTPUT_DIR)
    mc_samples: int = 1000
    q: int = 1
    marked_points: int = 2
    k_values: list = field(default_factory=lambda: [1, 2, 3, 4])
    gamma: dict = field(default_factory=_default_gamma)
    label: str = None

    @classmethod
    def from_dict(cls, data):
        """
        Build a validated config from a parsed JSON mapping.

        Missing optional keys take their defaults from :class:`Config`.

        Raises:
            ConfigError: Unknown keys or invalid values, with field paths.
        """
        if not isinstance(data, dict):
            raise ConfigError(['<root>: configuration must be a JSON object'])
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError([f'{key}: unknown configuration key' for key in unknown])
        if 'experiment' not in data:
            raise ConfigError(['experiment: required'])

        merged = asdict(cls(experiment=data['experiment']))
        for key, value in data.items():
            if key in ('subordinator', 'gamma') and isinstance(value, dict):
                merged[key] = {**merged[key], **value}
            else:
                merged[key] = copy.deepcopy(value)

        errors = validate_config(merged)
        if errors:
            raise ConfigError(errors)
        return cls(**merged)

    def to_dict(self):
        return asdict(self)

    @property
    def run_label(self):
        return self.label or f'seed-{self.seed}'

    @property
    def step_count(self):
        return self.subordinator['step_count']

    @property
    def horizon(self):
        return self.subordinator['horizon']

    @property
    def tail_threshold(self):
        return self.subordinator['tail_threshold']

    @property
    def run_dir(self):
        return os.path.join(self.output, self.experiment, self.run_label)


def load_config(path, overrides=None):
    """
    Read one JSON config document and apply command-line overrides.

    Args:
        path (str): JSON file.
        overrides (dict, optional): Field values that replace the file's
            (``None`` values are ignored).

    Returns:
        ExperimentConfig: The validated config.

    Raises:
        ConfigError: Unreadable file or invalid contents.
    """
    try:
        with open(path) as handle:
            data = json.load(handle)
    except OSError as e:
        raise ConfigError([f'<file>: cannot read {path}: {e.strerror}'])
    except json.JSONDecodeError as e:
        raise ConfigError([f'<file>: invalid JSON at line {e.lineno}: {e.msg}'])

    if isinstance(data, dict):
        for key, value in (overrides or {}).items():
            if value is not None:
                data[key] = value
    return ExperimentConfig.from_dict(data)
