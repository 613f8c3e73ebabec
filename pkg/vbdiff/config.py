import logging

import numpy as np

from vbdiff.kernel import FORMULATIONS
from vbdiff.utils import VbdiffException

log = logging.getLogger(__name__)

descriptors = {  # Config file key to attribute (w/ default value)
    'experiment': ('experiment', 'circle'),
    'n': ('n_points', None),  # Defer to the experiment
    'alpha': ('alpha', None),
    'beta': ('beta', None),
    'preset': ('preset', None),  # Defer to the experiment
    'eps': ('eps', None),  # None sweeps eps_min..eps_max
    'eps_min': ('eps_min', 1e-5),
    'eps_max': ('eps_max', 1.0),
    'eps_count': ('eps_count', 65),
    'eps_multiplier': ('eps_multiplier', 1.0),
    'k_support': ('k_support', None),
    'k0': ('k0', 8),
    'seed': ('seed', 1),
    'eigenfunctions': ('eigenfunctions', None),
    'output_dir': ('output_dir', 'results'),
    'formulation': ('formulation', 'symmetric'),
    'tuning_min': ('tuning_min', -30),
    'tuning_max': ('tuning_max', 10),
    'full_sum_limit': ('full_sum_limit', 5000),
    'dense_limit': ('dense_limit', 200),
    'outlier_sizes': ('outlier_sizes', [1000, 10000, 100000]),
    'seeds': ('seeds', list(range(1, 11))),  # Samples of the ou1d_seeds study
    'n_per_dim': ('n_per_dim', 250),
    'amplitude': ('amplitude', 0.5),
    'workers': ('workers', 1),
    'record_timing': ('record_timing', True),
    'verbose': ('verbose', False),
    'input': ('input_path', None),
    'd': ('intrinsic_dim', None),
}

experiments = {  # Experiment kind to default N, number of eigenpairs and preset
    'ou1d_nice': (2000, 4, 'gradientflow-vb'),
    'ou1d_random': (20000, 4, 'gradientflow-vb'),
    'ou1d_seeds': (20000, 4, 'gradientflow-vb'),  # Runs both gradient-flow presets per seed
    'ou2d': (10000, 6, 'gradientflow-vb'),
    'circle': (1500, 5, 'laplacian-vb'),
    'circle_random': (1500, 5, 'laplacian-vb'),
    'sphere': (3000, 4, 'laplacian-vb'),
    'torus_operator': (None, None, None),
    'circle_operator': (3000, None, None),
    'circle_gradient_operator': (8000, None, 'gradientflow-vb'),
    'outlier_study': (None, 4, 'gradientflow-fixed'),
    'dimension': (3000, None, None),
}

presets = ('laplacian-vb', 'gradientflow-vb', 'laplacian-fixed', 'gradientflow-fixed')


class ConfigError(VbdiffException):

    pass


def coerce(text):
    '''true/false -> bool, none -> None, ints, floats, comma separated -> list; anything else stays text.'''
    text = text.strip()
    if ',' in text:
        return [coerce(item) for item in text.split(',') if item.strip()]
    lowered = text.lower()
    if lowered in ('true', 'false'):
        return lowered == 'true'
    if lowered == 'none':
        return None
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


class ParsedConfig(object):
    '''"key = value" lines; blank lines and "#" comments are ignored.'''

    def __init__(self, text=''):
        self.values = {}
        for number, line in enumerate(text.splitlines(), 1):
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise ConfigError('Line {0}: expected "key = value", got {1!r}.'.format(number, line))
            self.set(line)

    def set(self, assignment):
        key, _, value = assignment.partition('=')
        key = key.strip().lower()
        if not key or not _:
            raise ConfigError('Expected key=value, got {0!r}.'.format(assignment))
        self.values[key] = coerce(value)

    @classmethod
    def from_file(cls, path):
        with open(path) as f:
            return cls(f.read())

    def update(self, assignments):
        for assignment in assignments or ():
            self.set(assignment)
        return self


def preset_weights(preset, d):
    '''(alpha, beta) of a named preset for intrinsic dimension d.'''
    if preset == 'laplacian-vb':
        return 0.5 - d / 4.0, -0.5
    if preset == 'gradientflow-vb':
        return -d / 4.0, -0.5
    if preset == 'laplacian-fixed':
        return 1.0, 0.0
    if preset == 'gradientflow-fixed':
        return 0.5, 0.0
    raise ConfigError('Unknown preset {0!r}; expected one of {1}.'.format(preset, presets))


class Config(object):
    '''Defines default values and translates a parsed config file into experiment behavior flags'''

    def __init__(self, config=None, descriptors=descriptors):
        self.descriptors = descriptors.copy()
        for attr, default in self.descriptors.values():
            setattr(self, attr, list(default) if isinstance(default, list) else default)
        values = config.values if config is not None else {}
        for key, value in values.items():
            if key not in self.descriptors:
                raise ConfigError('Unknown config key {0!r}.'.format(key))
            setattr(self, self.descriptors[key][0], value)
        self.validate()
        self.set_will_flags()
        if self.verbose:
            log.info(str(self))

    def validate(self):
        if self.experiment not in experiments:
            raise ConfigError('Unknown experiment {0!r}; expected one of {1}.'.format(self.experiment,
                                                                                  sorted(experiments)))
        if self.preset is not None and self.preset not in presets:
            raise ConfigError('Unknown preset {0!r}; expected one of {1}.'.format(self.preset, presets))
        if self.formulation not in FORMULATIONS:
            raise ConfigError('Unknown formulation {0!r}; expected one of {1}.'.format(self.formulation,
                                                                                   FORMULATIONS))
        for attr in ('n_points', 'k_support', 'eigenfunctions', 'intrinsic_dim'):
            self._check_positive_int(attr, optional=True)
        for attr in ('eps_count', 'workers', 'n_per_dim', 'dense_limit', 'full_sum_limit'):
            self._check_positive_int(attr)
        if not isinstance(self.k0, int) or self.k0 < 2:
            raise ConfigError('k0 must be an integer >= 2, got {0!r}.'.format(self.k0))
        if not isinstance(self.seed, int):
            raise ConfigError('seed must be an integer, got {0!r}.'.format(self.seed))
        if not (0 < self.eps_min < self.eps_max):
            raise ConfigError('Need 0 < eps_min < eps_max, got {0!r} and {1!r}.'.format(self.eps_min, self.eps_max))
        if not self.eps_multiplier > 0:
            raise ConfigError('eps_multiplier must be positive.')
        if self.tuning_min >= self.tuning_max:
            raise ConfigError('tuning_min must be below tuning_max.')
        if self.eps is not None and self.eps != 'auto':
            sweep = self.eps if isinstance(self.eps, list) else [self.eps]
            self._check_increasing('eps', sweep)
            self.eps = sweep
        sizes = self.outlier_sizes if isinstance(self.outlier_sizes, list) else [self.outlier_sizes]
        self._check_increasing('outlier_sizes', sizes)
        if any(not isinstance(n, int) or n < 100 for n in sizes):
            raise ConfigError('outlier_sizes must be integers >= 100.')
        self.outlier_sizes = sizes
        seeds = self.seeds if isinstance(self.seeds, list) else [self.seeds]
        if not seeds or any(isinstance(s, bool) or not isinstance(s, int) for s in seeds):
            raise ConfigError('seeds must be a list of integers, got {0!r}.'.format(self.seeds))
        self.seeds = seeds

    def _check_positive_int(self, attr, optional=False):
        value = getattr(self, attr)
        if value is None and optional:
            return
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            raise ConfigError('{0} must be a positive integer, got {1!r}.'.format(attr, value))

    def _check_increasing(self, attr, values):
        if not values or any(isinstance(v, (bool, str)) or v is None for v in values):
            raise ConfigError('{0} must be a list of numbers, got {1!r}.'.format(attr, values))
        if values[0] <= 0 or any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigError('{0} must be positive and strictly increasing, got {1!r}.'.format(attr, values))

    def set_will_flags(self):
        self.will_tune = self.eps == 'auto'
        self.will_sweep = not self.will_tune and (self.eps is None or len(self.eps) > 1)
        self.will_read_input = self.input_path is not None

    @property
    def n(self):
        return self.n_points or experiments[self.experiment][0]

    @property
    def eigenpairs(self):
        return self.eigenfunctions or experiments[self.experiment][1]

    @property
    def tuning_grid(self):
        return range(self.tuning_min, self.tuning_max + 1)

    def weights(self, d):
        '''(alpha, beta): preset values for dimension d, explicit alpha/beta taking precedence.'''
        preset = self.preset or experiments[self.experiment][2]
        # experiments with an imposed bandwidth default to the unnormalized kernel
        alpha, beta = preset_weights(preset, d) if preset else (0.0, 0.0)
        alpha = self.alpha if self.alpha is not None else alpha
        beta = self.beta if self.beta is not None else beta
        return float(alpha), float(beta)

    def eps_values(self):
        '''The eps sweep, scaled by eps_multiplier; empty when eps is tuned.'''
        if self.will_tune:
            return np.array([])
        if self.eps is None:
            sweep = np.logspace(np.log10(self.eps_min), np.log10(self.eps_max), self.eps_count)
        else:
            sweep = np.array(self.eps, dtype=float)
        return sweep * self.eps_multiplier

    def __str__(self):
        descriptors = ['{0}: {1}'.format(v[0], getattr(self, v[0])) for v in self.descriptors.values()]
        descriptors.sort()
        cfg = 'Config: ' + '\n'.join(descriptors)
        will_flags = sorted(attr for attr in vars(self) if attr.startswith('will_'))
        cfg += '\nBehavior Flags: ' + '\n'.join(['{0}: {1}'.format(k, getattr(self, k)) for k in will_flags])
        return cfg

    __repr__ = __str__


def load_config(path=None, overrides=None):
    parsed = ParsedConfig.from_file(path) if path else ParsedConfig()
    return Config(parsed.update(overrides))
