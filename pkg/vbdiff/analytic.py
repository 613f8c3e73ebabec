'''Closed-form eigenfunctions, invariant densities and continuous operators used as ground truth.'''
import math

import numpy as np
from numpy.polynomial import hermite_e
from scipy.special import i0

from vbdiff.utils import VbdiffException

KINDS = ('ou1d_hermite', 'ou2d_product', 'circle_fourier', 'sphere_coordinate', 'custom_operator')
OPERATORS = ('laplacian', 'gradient_flow', 'bandwidth_drift')
PARITIES = ('sin', 'cos')
MAX_HERMITE = 6
MAX_OU2D_DEGREE = 4
MAX_OU2D_TARGETS = (MAX_OU2D_DEGREE + 1) * (MAX_OU2D_DEGREE + 2) // 2


class NoLatent(VbdiffException):

    pass


def hermite(n, x):
    '''Probabilists' Hermite polynomial He_n / sqrt(n!), unit norm under the standard normal.'''
    if n < 0 or n > MAX_HERMITE:
        raise ValueError('Hermite degree must be in 0..{0}, got {1}.'.format(MAX_HERMITE, n))
    coeffs = np.zeros(n + 1)
    coeffs[n] = 1.0
    return hermite_e.hermeval(np.asarray(x, dtype=float), coeffs) / math.sqrt(math.factorial(n))


def ou2d_eigenfunction(nx, ny, pts):
    if nx < 0 or ny < 0 or nx + ny > MAX_OU2D_DEGREE:
        raise ValueError('Need nx, ny >= 0 and nx + ny <= {0}.'.format(MAX_OU2D_DEGREE))
    pts = np.asarray(pts, dtype=float)
    return hermite(nx, pts[:, 0]) * hermite(ny, pts[:, 1])


def circle_eigenfunction(k, parity, theta):
    if k < 1:
        raise ValueError('Circle frequency must be positive.')
    if parity not in PARITIES:
        raise ValueError('Parity must be one of {0}.'.format(PARITIES))
    wave = np.sin if parity == 'sin' else np.cos
    return wave(k * np.asarray(theta, dtype=float))


def sphere_coordinate(axis, pts):
    return np.asarray(pts, dtype=float)[:, axis]


def circle_density_nonuniform(theta):
    return (2.0 + np.cos(theta)) / (4.0 * np.pi)


def vonmises_density(theta, kappa=1.0):
    return np.exp(kappa * np.cos(theta)) / (2.0 * np.pi * i0(kappa))


class AnalyticTarget(object):
    '''A reference eigenfunction: kind, its integer parameters, and the exact eigenvalue.'''

    def __init__(self, kind, params=(), eigenvalue=None):
        if kind not in KINDS:
            raise ValueError('Unknown target kind {0!r}.'.format(kind))
        self.kind = kind
        self.params = tuple(params)
        self.eigenvalue = eigenvalue

    def evaluate(self, cloud):
        if self.kind == 'ou1d_hermite':
            return hermite(self.params[0], cloud.points[:, 0])
        if self.kind == 'ou2d_product':
            return ou2d_eigenfunction(self.params[0], self.params[1], cloud.points)
        if self.kind == 'circle_fourier':
            if cloud.theta is None:
                raise NoLatent('{0} has no latent angle.'.format(cloud))
            return circle_eigenfunction(self.params[0], self.params[1], cloud.theta)
        if self.kind == 'sphere_coordinate':
            return sphere_coordinate(self.params[0], cloud.points)
        raise ValueError('custom_operator targets have no closed-form eigenfunction.')

    def __str__(self):
        return 'AnalyticTarget({0}{1}, eigenvalue={2})'.format(self.kind, self.params, self.eigenvalue)

    __repr__ = __str__


def ou_target(n):
    return AnalyticTarget('ou1d_hermite', (n,), -float(n))


def circle_target(k, parity):
    return AnalyticTarget('circle_fourier', (k, parity), -float(k * k))


def ou_spectrum(dim, count):
    '''The first count OU eigenfunctions by |eigenvalue|, constant first.

    In 2-D a degree-n block lists H_n(x), H_{n-1}(x) H_1(y), ..., H_n(y).
    '''
    if dim == 1:
        if count > MAX_HERMITE + 1:
            raise ValueError('At most {0} one-dimensional OU targets.'.format(MAX_HERMITE + 1))
        return [ou_target(n) for n in range(count)]
    if dim != 2:
        raise ValueError('OU spectra are available in dimension 1 or 2.')
    targets = [AnalyticTarget('ou2d_product', (total - ny, ny), -float(total))
               for total in range(MAX_OU2D_DEGREE + 1) for ny in range(total + 1)]
    if count > len(targets):
        raise ValueError('At most {0} two-dimensional OU targets.'.format(len(targets)))
    return targets[:count]


class ThetaFunction(object):
    '''A function of the first latent angle with its first two derivatives.'''

    def __init__(self, value, first, second):
        self.value = value
        self.first = first
        self.second = second

    def log_derivative(self, theta):
        return self.first(theta) / self.value(theta)


SIN_THETA = ThetaFunction(np.sin, np.cos, lambda t: -np.sin(t))
EXP_COS_THETA = ThetaFunction(lambda t: np.exp(np.cos(t)),
                              lambda t: -np.sin(t) * np.exp(np.cos(t)),
                              lambda t: (np.sin(t) ** 2 - np.cos(t)) * np.exp(np.cos(t)))


def reference_operator(target, f, cloud, d=None, rho=None, q=None, c1=None):
    '''The continuous operator applied to f at every point, by latent-angle calculus.

    f, rho and q depend on theta only, so on the flat torus the Laplacian reduces to d^2/dtheta^2 as on the circle.

    laplacian:        f''
    gradient_flow:    f'' + c1 f' q'/q
    bandwidth_drift:  f'' + (d + 2) f' rho'/rho
    '''
    if target not in OPERATORS:
        raise ValueError('Unknown operator {0!r}; expected one of {1}.'.format(target, OPERATORS))
    if cloud.theta is None:
        raise NoLatent('{0} has no latent coordinates for a closed-form reference.'.format(cloud))
    theta = cloud.theta
    out = f.second(theta)
    if target == 'gradient_flow':
        if q is None or c1 is None:
            raise ValueError('gradient_flow needs q and c1.')
        out = out + c1 * f.first(theta) * q.log_derivative(theta)
    elif target == 'bandwidth_drift':
        if rho is None:
            raise ValueError('bandwidth_drift needs rho.')
        d = d if d is not None else cloud.intrinsic_dim
        out = out + (d + 2) * f.first(theta) * rho.log_derivative(theta)
    return out
