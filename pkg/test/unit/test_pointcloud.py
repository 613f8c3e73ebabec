import math

import numpy as np
import pytest

from vbdiff import pointcloud
from vbdiff.pointcloud import (InvalidCovariance, MalformedCloud, PointCloud, WrongManifold, circle_cdf,
                               gen_circle_nonuniform, gen_circle_uniform_grid, gen_circle_vonmises,
                               gen_gaussian_nice_1d, gen_gaussian_random, gen_sphere_nonuniform, gen_torus_grid,
                               load_csv, perturb_circle, random_spd, remove_points, save_csv)


def test_circle_nonuniform_inverts_cdf():
    cloud = gen_circle_nonuniform(1500)
    assert cloud.n_points == 1500
    assert cloud.intrinsic_dim == 1
    assert np.max(np.abs(np.linalg.norm(cloud.points, axis=1) - 1.0)) < 1e-12
    t = np.arange(1, 1501) / 1501.0
    assert np.max(np.abs(circle_cdf(cloud.theta) - t)) < 1e-10


def test_circle_nonuniform_midpoint_is_pi():
    cloud = gen_circle_nonuniform(3)
    assert cloud.theta[1] == pytest.approx(math.pi, abs=1e-10)


def test_circle_grid_and_vonmises():
    grid = gen_circle_uniform_grid(8)
    assert grid.theta[2] == pytest.approx(math.pi / 2)
    sample = gen_circle_vonmises(2000, 1.0, seed=3)
    assert np.all((sample.theta >= 0) & (sample.theta < 2 * math.pi))
    # mass concentrates around theta = 0
    assert np.mean(np.cos(sample.theta)) > 0.3
    assert np.array_equal(sample.points, gen_circle_vonmises(2000, 1.0, seed=3).points)


def test_nice_grid_symmetry():
    cloud = gen_gaussian_nice_1d(2001)
    x = cloud.points[:, 0]
    assert x[1000] == pytest.approx(0.0, abs=1e-15)
    assert np.max(np.abs(x + x[::-1])) < 1e-12
    assert np.all(np.diff(x) > 0)
    assert cloud.latent is None


@pytest.mark.parametrize('dim', (1, 2))
def test_gaussian_random_mean(dim):
    n = 20000
    cloud = gen_gaussian_random(n, dim, np.eye(dim), seed=5)
    assert cloud.points.shape == (n, dim)
    assert np.all(np.abs(cloud.points.mean(axis=0)) < 4 / math.sqrt(n))
    assert np.array_equal(cloud.points, gen_gaussian_random(n, dim, np.eye(dim), seed=5).points)


@pytest.mark.parametrize('cov', ([[1.0, 2.0], [2.0, 1.0]], [[1.0, 0.5], [0.0, 1.0]], [[-1.0]]))
def test_invalid_covariance(cov):
    with pytest.raises(InvalidCovariance):
        gen_gaussian_random(10, len(cov), cov, seed=1)


def test_random_spd_is_positive_definite():
    cov = random_spd(3, seed=1)
    assert np.allclose(cov, cov.T)
    assert np.min(np.linalg.eigvalsh(cov)) >= 0.1 - 1e-12


def test_sphere_norms_and_octants():
    n = 8000
    cloud = gen_sphere_nonuniform(n, np.eye(3), seed=2)
    assert np.max(np.abs(np.linalg.norm(cloud.points, axis=1) - 1.0)) < 1e-12
    octant = (cloud.points > 0).dot([1, 2, 4])
    counts = np.bincount(octant, minlength=8)
    sigma = math.sqrt(n * (1 / 8.0) * (7 / 8.0))
    assert np.all(np.abs(counts - n / 8.0) < 5 * sigma)


def test_torus_grid():
    cloud = gen_torus_grid(250)
    assert cloud.n_points == 62500
    assert np.allclose(np.linalg.norm(cloud.points, axis=1), math.sqrt(2), atol=1e-12)
    rng = np.random.default_rng(0)
    for i, j in rng.integers(0, cloud.n_points, size=(10, 2)):
        dtheta, dphi = cloud.latent[i] - cloud.latent[j]
        chord = 2 * math.sqrt(math.sin(dtheta / 2) ** 2 + math.sin(dphi / 2) ** 2)
        assert np.linalg.norm(cloud.points[i] - cloud.points[j]) == pytest.approx(chord, abs=1e-12)


def test_perturb_circle():
    cloud = gen_circle_nonuniform(200)
    same = perturb_circle(cloud, 0.0, seed=1)
    assert same.label == cloud.label
    assert np.array_equal(same.points, cloud.points)
    assert np.array_equal(same.theta, cloud.theta)
    moved = perturb_circle(cloud, 0.5, seed=1)
    assert np.all((moved.theta >= 0) & (moved.theta < 2 * math.pi))
    assert np.allclose(np.linalg.norm(moved.points, axis=1), 1.0, atol=1e-12)
    with pytest.raises(WrongManifold):
        perturb_circle(gen_gaussian_nice_1d(10), 0.5, seed=1)


def test_point_cloud_invariants():
    with pytest.raises(ValueError):
        PointCloud([[1.0]])
    with pytest.raises(ValueError):
        PointCloud([[0.0], [np.nan]])
    with pytest.raises(ValueError):
        PointCloud([[2.0, 0.0], [0.0, 1.0]], label='circle')
    cloud = gen_circle_nonuniform(10)
    with pytest.raises(ValueError):
        cloud.points[0, 0] = 3.0


def test_remove_points_keeps_metadata():
    cloud = gen_circle_nonuniform(10)
    keep = np.ones(10, dtype=bool)
    keep[[0, 9]] = False
    sub = remove_points(cloud, keep)
    assert sub.n_points == 8
    assert sub.label == cloud.label
    assert sub.intrinsic_dim == 1
    assert np.array_equal(sub.theta, cloud.theta[1:9])


def test_csv_keeps_latent_and_precision(tmp_path):
    cloud = gen_torus_grid(4)
    path = str(tmp_path / 'torus.csv')
    save_csv(cloud, path)
    with open(path) as f:
        assert f.readline().strip() == 'x1,x2,x3,x4,theta,phi'
    loaded = load_csv(path, intrinsic_dim=2)
    assert np.array_equal(loaded.points, cloud.points)
    assert np.array_equal(loaded.latent, cloud.latent)


def test_load_csv_from_url(monkeypatch):
    calls = []

    class Response(object):
        text = 'x1,x2,theta\n1,0,0\n0,1,1.5707963267948966\n'

        def raise_for_status(self):
            pass

    def mock_get(url, **kw):
        calls.append(dict(kw, url=url))
        return Response()

    monkeypatch.setattr(pointcloud, 'get', mock_get)
    cloud = load_csv('https://example.com/circle.csv', headers={'Authorization': 'Basic abc'}, verify='/etc/certs')
    assert cloud.n_points == 2
    assert cloud.label == 'circle-external'
    assert calls == [dict(url='https://example.com/circle.csv', headers={'Authorization': 'Basic abc'},
                          verify='/etc/certs', cert=None)]


def test_malformed_csv(tmp_path):
    path = tmp_path / 'bad.csv'
    path.write_text('x1,x2\n1,zero\n')
    with pytest.raises(MalformedCloud):
        load_csv(str(path))
