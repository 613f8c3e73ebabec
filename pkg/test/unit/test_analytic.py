import math

import numpy as np
import pytest
from numpy.polynomial.hermite_e import hermegauss
from scipy.integrate import quad

from vbdiff.analytic import (EXP_COS_THETA, SIN_THETA, AnalyticTarget, NoLatent, circle_density_nonuniform,
                             circle_eigenfunction, hermite, ou2d_eigenfunction, ou_spectrum, reference_operator,
                             sphere_coordinate, vonmises_density)
from vbdiff.pointcloud import circle_cdf, gen_circle_uniform_grid, gen_gaussian_nice_1d, gen_torus_grid


def test_hermite_values():
    assert hermite(3, np.array([1.0]))[0] == pytest.approx(-2 / math.sqrt(6))
    assert np.array_equal(hermite(0, np.linspace(-3, 3, 7)), np.ones(7))
    x = np.linspace(-2, 2, 9)
    assert np.allclose(hermite(2, x), (x ** 2 - 1) / math.sqrt(2))
    assert np.allclose(hermite(4, x), (x ** 4 - 6 * x ** 2 + 3) / math.sqrt(24))
    with pytest.raises(ValueError):
        hermite(7, x)


def test_hermite_orthonormal():
    nodes, weights = hermegauss(20)
    weights = weights / math.sqrt(2 * math.pi)
    gram = np.array([[np.sum(weights * hermite(m, nodes) * hermite(n, nodes)) for n in range(7)]
                     for m in range(7)])
    assert np.allclose(gram, np.eye(7), atol=1e-6)


@pytest.mark.parametrize('n', (1, 2, 3, 4))
def test_hermite_recurrence(n):
    x = np.linspace(-3, 3, 13)
    assert np.allclose(math.sqrt(n + 1) * hermite(n + 1, x), x * hermite(n, x) - math.sqrt(n) * hermite(n - 1, x))


def test_ou2d_products():
    pts = np.array([[1.0, 1.0], [2.0, -0.5]])
    assert np.allclose(ou2d_eigenfunction(1, 1, pts), pts[:, 0] * pts[:, 1])
    assert np.array_equal(ou2d_eigenfunction(0, 0, pts), [1.0, 1.0])
    assert ou2d_eigenfunction(2, 1, pts)[0] == pytest.approx(0.0)
    with pytest.raises(ValueError):
        ou2d_eigenfunction(3, 2, pts)


def test_ou_spectrum_ordering():
    targets = ou_spectrum(2, 6)
    assert [t.params for t in targets] == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    assert [t.eigenvalue for t in targets] == [0, -1, -1, -2, -2, -2]
    assert [t.eigenvalue for t in ou_spectrum(1, 4)] == [0, -1, -2, -3]
    assert ou_spectrum(1, 4)[3].evaluate(gen_gaussian_nice_1d(11)).shape == (11,)


def test_circle_second_derivative_converges():
    theta = np.linspace(0, 2 * math.pi, 50, endpoint=False)
    errors = []
    for h in (1e-2, 5e-3):
        fd = (circle_eigenfunction(2, 'sin', theta + h) - 2 * circle_eigenfunction(2, 'sin', theta)
              + circle_eigenfunction(2, 'sin', theta - h)) / h ** 2
        errors.append(np.max(np.abs(fd + 4 * circle_eigenfunction(2, 'sin', theta))))
    assert math.log(errors[0] / errors[1], 2) == pytest.approx(2.0, abs=0.1)
    assert circle_eigenfunction(1, 'sin', np.array([0.0]))[0] == 0.0
    with pytest.raises(ValueError):
        circle_eigenfunction(0, 'sin', theta)


def test_targets_evaluate():
    cloud = gen_circle_uniform_grid(8)
    target = AnalyticTarget('circle_fourier', (1, 'sin'), -1.0)
    assert np.allclose(target.evaluate(cloud), np.sin(cloud.theta))
    assert np.allclose(AnalyticTarget('sphere_coordinate', (1,), -2.0).evaluate(cloud), cloud.points[:, 1])
    assert np.array_equal(sphere_coordinate(0, cloud.points), cloud.points[:, 0])
    with pytest.raises(NoLatent):
        target.evaluate(gen_gaussian_nice_1d(8))
    with pytest.raises(ValueError):
        AnalyticTarget('spherical_harmonic')


def test_nonuniform_circle_density():
    assert quad(circle_density_nonuniform, 0, 2 * math.pi)[0] == pytest.approx(1.0)
    assert circle_cdf(2 * math.pi) == pytest.approx(1.0)
    assert circle_cdf(math.pi) == pytest.approx(0.5)


def test_vonmises_density():
    assert quad(vonmises_density, 0, 2 * math.pi)[0] == pytest.approx(1.0)
    theta = np.linspace(0, 2 * math.pi, 9)
    ratio = vonmises_density(theta) / EXP_COS_THETA.value(theta)
    assert np.allclose(ratio, ratio[0])


def test_bandwidth_drift_reference():
    cloud = gen_circle_uniform_grid(64)
    theta = cloud.theta
    out = reference_operator('bandwidth_drift', SIN_THETA, cloud, rho=EXP_COS_THETA)
    assert np.allclose(out, -np.sin(theta) - 3 * np.sin(theta) * np.cos(theta))
    torus = gen_torus_grid(8)
    theta = torus.theta
    out = reference_operator('bandwidth_drift', SIN_THETA, torus, rho=EXP_COS_THETA)
    assert np.allclose(out, -np.sin(theta) - 4 * np.sin(theta) * np.cos(theta))


def test_gradient_flow_reference():
    cloud = gen_circle_uniform_grid(64)
    theta = cloud.theta
    out = reference_operator('gradient_flow', SIN_THETA, cloud, q=EXP_COS_THETA, c1=1.0)
    assert np.allclose(out, -np.sin(theta) - np.sin(theta) * np.cos(theta))
    assert np.allclose(reference_operator('laplacian', SIN_THETA, cloud), -np.sin(theta))


def test_exp_cos_derivatives():
    theta = np.linspace(0, 2 * math.pi, 40)
    h = 1e-4
    fd = (EXP_COS_THETA.value(theta + h) - 2 * EXP_COS_THETA.value(theta) + EXP_COS_THETA.value(theta - h)) / h ** 2
    assert np.allclose(EXP_COS_THETA.second(theta), fd, atol=1e-5)
    assert np.allclose(EXP_COS_THETA.log_derivative(theta), -np.sin(theta))


def test_reference_needs_latent():
    with pytest.raises(NoLatent):
        reference_operator('laplacian', SIN_THETA, gen_gaussian_nice_1d(10))
    with pytest.raises(ValueError):
        reference_operator('gradient_flow', SIN_THETA, gen_circle_uniform_grid(10))
