import pytest

from vbdiff.config import Config, ParsedConfig


@pytest.fixture
def make_config(tmp_path):
    '''Builds a Config writing into a fresh directory, with timing off so reruns compare byte for byte.'''
    def make(**values):
        lines = ['output_dir = {0}'.format(tmp_path / 'out'), 'record_timing = false']
        for key, value in values.items():
            if isinstance(value, (list, tuple)):
                value = ', '.join(str(v) for v in value)
            lines.append('{0} = {1}'.format(key, value))
        return Config(ParsedConfig('\n'.join(lines)))
    return make
