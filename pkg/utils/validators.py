# utils/validators.py
import math
import numbers


class KcutError(Exception):
    """Base class for every error raised by the simulator."""


class ValidationError(KcutError, ValueError):
    """An input object (offspring law, sample array, ...) failed validation."""


class ConfigError(KcutError):
    """The experiment configuration is invalid.

    Attributes:
        errors (list): Messages of the form ``"field.path: reason"``.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__(self.errors)

    def __str__(self):
        return "; ".join(self.errors)


class UnattainableSizeError(KcutError):
    """No tree with the requested vertex count exists (or none was found)."""

    def __init__(self, n, reason):
        self.n = n
        self.reason = reason
        super().__init__(n, reason)

    def __str__(self):
        return f"tree size n={self.n} is unattainable: {self.reason}"


class ContractViolation(KcutError):
    """A caller broke a precondition (size mismatch, bad CDF values, ...)."""


class HorizonError(KcutError):
    """The subordinator horizon is too short for the requested tail threshold."""

    def __init__(self, achieved_mass, threshold):
        self.achieved_mass = achieved_mass
        self.threshold = threshold
        super().__init__(achieved_mass, threshold)

    def __str__(self):
        return (f"root mass at horizon is {self.achieved_mass:.3e}, "
                f"above threshold {self.threshold:.1e}")


EXPERIMENTS = (
    'discrete',
    'continuum',
    'convergence',
    'moments',
    'gamma-check',
    'bound-check',
    'records',
    'reduced-cut',
)

# Modes that simulate the discrete process need an integer k
DISCRETE_EXPERIMENTS = {'discrete', 'convergence', 'records', 'reduced-cut', 'gamma-check'}


def _is_int(value):
    return isinstance(value, numbers.Integral) and not isinstance(value, bool)


def _is_number(value):
    return isinstance(value, numbers.Real) and not isinstance(value, bool) and math.isfinite(value)


def validate_config(data):
    """
    Validate a raw experiment configuration mapping.

    Args:
        data (dict): Parsed JSON document (after CLI overrides).

    Returns:
        list: Error messages prefixed with the offending field path; empty if valid.
    """
    errors = []

    if not isinstance(data, dict):
        return ['<root>: configuration must be a JSON object']

    experiment = data.get('experiment')
    if experiment not in EXPERIMENTS:
        errors.append(f"experiment: must be one of {', '.join(EXPERIMENTS)}")

    k = data.get('k')
    if not _is_number(k) or k < 1:
        errors.append('k: must be a real number >= 1')
    elif experiment in DISCRETE_EXPERIMENTS and float(k) != int(k):
        errors.append(f'k: must be an integer for the {experiment} experiment')

    n_list = data.get('n_list', [])
    if not isinstance(n_list, list):
        errors.append('n_list: must be a list of integers')
    else:
        for i, n in enumerate(n_list):
            if not _is_int(n) or n < 1:
                errors.append(f'n_list[{i}]: must be an integer >= 1')
        if experiment in {'discrete', 'convergence', 'records', 'reduced-cut'} and not n_list:
            errors.append(f'n_list: must not be empty for the {experiment} experiment')

    law = data.get('law')
    if isinstance(law, list):
        if not law or not all(_is_number(p) for p in law):
            errors.append('law: explicit pmf must be a non-empty list of numbers')
    elif isinstance(law, dict):
        if 'name' not in law and 'pmf' not in law:
            errors.append('law: object form needs a "name" or a "pmf" key')
    elif not isinstance(law, str):
        errors.append('law: must be a law name, an explicit pmf list or an object')
    if not any(error.startswith('law:') for error in errors):
        from models.gwtree import make_offspring_law
        try:
            make_offspring_law(law)
        except (TypeError, ValueError) as e:
            errors.append(f'law: {str(e)}')

    for field in ('sims', 'continuum_sims', 'workers', 'marked_points'):
        value = data.get(field)
        if not _is_int(value) or value < 1:
            errors.append(f'{field}: must be an integer >= 1')

    mc_samples = data.get('mc_samples')
    if not _is_int(mc_samples) or mc_samples < 4:
        errors.append('mc_samples: must be an integer >= 4')

    grid_size = data.get('grid_size')
    if not _is_int(grid_size) or grid_size < 2:
        errors.append('grid_size: must be an integer >= 2')

    q = data.get('q')
    if not _is_int(q) or q not in (1, 2, 3):
        errors.append('q: must be 1, 2 or 3')

    seed = data.get('seed')
    if not _is_int(seed) or not 0 <= seed < 2 ** 64:
        errors.append('seed: must be an unsigned 64-bit integer')

    subordinator = data.get('subordinator')
    if not isinstance(subordinator, dict):
        errors.append('subordinator: must be an object with step_count and horizon')
    else:
        step_count = subordinator.get('step_count')
        if not _is_int(step_count) or step_count < 1:
            errors.append('subordinator.step_count: must be an integer >= 1')
        horizon = subordinator.get('horizon')
        if not _is_number(horizon) or horizon <= 0:
            errors.append('subordinator.horizon: must be > 0')
        threshold = subordinator.get('tail_threshold')
        if not _is_number(threshold) or not 0 < threshold < 1:
            errors.append('subordinator.tail_threshold: must be in (0, 1)')

    k_values = data.get('k_values', [])
    if not isinstance(k_values, list) or not all(_is_number(v) and v >= 1 for v in k_values):
        errors.append('k_values: must be a list of reals >= 1')

    gamma = data.get('gamma')
    if not isinstance(gamma, dict):
        errors.append('gamma: must be an object with m, a and t_grid')
    else:
        m = gamma.get('m')
        if not _is_int(m) or m < 1:
            errors.append('gamma.m: must be an integer >= 1')
        a = gamma.get('a')
        if not _is_number(a) or a <= 0:
            errors.append('gamma.a: must be > 0')
        t_grid = gamma.get('t_grid')
        if not isinstance(t_grid, list) or not t_grid:
            errors.append('gamma.t_grid: must be a non-empty list')
        else:
            for i, t in enumerate(t_grid):
                if not _is_number(t) or t < 0:
                    errors.append(f'gamma.t_grid[{i}]: must be a real >= 0')
            if all(_is_number(t) for t in t_grid) and list(t_grid) != sorted(t_grid):
                errors.append('gamma.t_grid: must be sorted ascending')

    output = data.get('output')
    if not isinstance(output, str) or not output:
        errors.append('output: must be a non-empty directory path')

    label = data.get('label')
    if label is not None and (not isinstance(label, str) or not label or '/' in label):
        errors.append('label: must be a non-empty name without "/"')

    return errors
