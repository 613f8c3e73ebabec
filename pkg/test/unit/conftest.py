import pytest

from vbdiff.density import build_profile
from vbdiff.kernel import build_generator
from vbdiff.neighbors import knn
from vbdiff.pointcloud import gen_circle_nonuniform, gen_circle_uniform_grid, gen_gaussian_nice_1d


@pytest.fixture(scope='session')
def circle_cloud():
    return gen_circle_nonuniform(300)


@pytest.fixture(scope='session')
def circle_graph(circle_cloud):
    return knn(circle_cloud, 64)


@pytest.fixture(scope='session')
def circle_profile(circle_cloud, circle_graph):
    return build_profile(circle_cloud, circle_graph, -0.5, 1)


@pytest.fixture(scope='session')
def small_cloud():
    return gen_circle_nonuniform(150)


@pytest.fixture(scope='session')
def small_generator(small_cloud):
    '''Dense-support generator on 150 circle points, small enough for the dense eigensolver.'''
    profile = build_profile(small_cloud, knn(small_cloud, 16), -0.5, 1)
    return build_generator(small_cloud, profile.rho, 0.02, 0.25, 1)


@pytest.fixture(scope='session')
def grid_circle():
    return gen_circle_uniform_grid(400)


@pytest.fixture(scope='session')
def nice_line():
    return gen_gaussian_nice_1d(401)


@pytest.fixture
def output_dir(tmp_path):
    return str(tmp_path / 'out')
