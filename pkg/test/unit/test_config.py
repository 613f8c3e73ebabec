import numpy as np
import pytest

from vbdiff.config import (Config, ConfigError, ParsedConfig, coerce, descriptors, experiments, load_config,
                           preset_weights)


def test_default_descriptor_attributes_sanity():
    config = Config()
    for attr, value in descriptors.values():
        assert getattr(config, attr) == value
    assert config.will_sweep
    assert not config.will_tune
    assert not config.will_read_input


@pytest.mark.parametrize('text, value', [
    ('true', True), ('False', False), ('none', None), ('12', 12), ('-30', -30), ('1e-5', 1e-5), ('0.25', 0.25),
    ('auto', 'auto'), ('1000, 10000,100000', [1000, 10000, 100000]), ('0.01,0.1', [0.01, 0.1]),
])
def test_coerce(text, value):
    assert coerce(text) == value


config_string = """
# circle run
experiment = circle
n = 1500
preset = laplacian-fixed
eps = 0.01, 0.02, 0.04   # three values
k_support = 64
record_timing = false

verbose = false
"""


def test_parsed_config():
    config = Config(ParsedConfig(config_string))
    assert config.experiment == 'circle'
    assert config.n == 1500
    assert config.eps == [0.01, 0.02, 0.04]
    assert config.k_support == 64
    assert config.record_timing is False
    assert config.will_sweep
    assert np.allclose(config.eps_values(), [0.01, 0.02, 0.04])
    assert config.weights(1) == (1.0, 0.0)


def test_overrides_win(tmp_path):
    path = tmp_path / 'run.conf'
    path.write_text(config_string)
    config = load_config(str(path), ['n=300', 'eps=auto', 'alpha=0.3'])
    assert config.n == 300
    assert config.will_tune
    assert len(config.eps_values()) == 0
    assert config.weights(1) == (0.3, 0.0)


def test_default_sweep():
    sweep = Config().eps_values()
    assert len(sweep) == 65
    assert sweep[0] == pytest.approx(1e-5)
    assert sweep[-1] == pytest.approx(1.0)
    assert np.all(np.diff(sweep) > 0)
    doubled = Config(ParsedConfig('eps_multiplier = 50')).eps_values()
    assert np.allclose(doubled, 50 * sweep)


def test_single_eps_is_not_a_sweep():
    config = Config(ParsedConfig('eps = 0.03'))
    assert config.eps == [0.03]
    assert not config.will_sweep


def test_seeds():
    assert Config().seeds == list(range(1, 11))
    assert Config(ParsedConfig('seeds = 7')).seeds == [7]
    assert Config(ParsedConfig('seeds = 3, 4')).seeds == [3, 4]


@pytest.mark.parametrize('preset, d, weights', [
    ('laplacian-vb', 1, (0.25, -0.5)),
    ('laplacian-vb', 2, (0.0, -0.5)),
    ('gradientflow-vb', 1, (-0.25, -0.5)),
    ('laplacian-fixed', 3, (1.0, 0.0)),
    ('gradientflow-fixed', 1, (0.5, 0.0)),
])
def test_presets(preset, d, weights):
    assert preset_weights(preset, d) == weights


def test_experiment_defaults():
    for kind, (n, pairs, preset) in experiments.items():
        config = Config(ParsedConfig('experiment = {0}'.format(kind)))
        assert config.n == n
        assert config.eigenpairs == pairs
    assert Config(ParsedConfig('experiment = ou1d_nice')).weights(1) == (-0.25, -0.5)
    assert Config(ParsedConfig('experiment = circle_operator')).weights(1) == (0.0, 0.0)


@pytest.mark.parametrize('text', [
    'unknown_key = 1',
    'experiment = bogus',
    'preset = laplacian',
    'formulation = middle',
    'n = 0',
    'n = 2.5',
    'k0 = 1',
    'eps = 0.1, 0.01',
    'eps = -1',
    'eps_min = 2',
    'workers = 0',
    'outlier_sizes = 1000, 50',
    'seeds = 1, x',
    'seeds = true',
    'tuning_min = 20',
    'no equals sign here',
])
def test_invalid_config(text):
    with pytest.raises(ConfigError):
        Config(ParsedConfig(text))


def test_str_lists_attributes_and_flags():
    dump = str(Config())
    assert dump.startswith('Config: ')
    assert 'experiment: circle' in dump
    assert 'Behavior Flags: ' in dump
    assert 'will_tune: False' in dump
