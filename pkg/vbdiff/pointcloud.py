'''Sample sets for the generator experiments and CSV (de)serialization of point clouds.'''
import logging
import math

import numpy as np
from requests import get
from scipy.optimize import bisect
from scipy.special import erf, erfinv

from vbdiff.utils import VbdiffException, read_rows, write_rows

log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
LATENT_COLUMNS = ('theta', 'phi')


class InversionFailure(VbdiffException):

    pass


class InvalidCovariance(VbdiffException):

    pass


class WrongManifold(VbdiffException):

    pass


class MalformedCloud(VbdiffException):

    pass


class PointCloud(object):
    '''N ambient points with optional latent coordinates (theta, phi) and a known intrinsic dimension.

    Arrays are made read-only on construction so a cloud can be shared by every stage of a sweep.
    '''

    def __init__(self, points, latent=None, intrinsic_dim=None, label=''):
        points = np.array(points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        if points.ndim != 2 or points.shape[0] < 2:
            raise ValueError('A point cloud needs at least two points, got shape {0}.'.format(points.shape))
        if not np.all(np.isfinite(points)):
            raise ValueError('Point coordinates must be finite.')
        if latent is not None:
            latent = np.array(latent, dtype=float)
            if latent.ndim == 1:
                latent = latent[:, None]
            if latent.shape[0] != points.shape[0]:
                raise ValueError('Latent coordinates must have one row per point.')
            latent.setflags(write=False)
        if intrinsic_dim is not None and int(intrinsic_dim) < 1:
            raise ValueError('Intrinsic dimension must be positive.')
        points.setflags(write=False)
        self.points = points
        self.latent = latent
        self.intrinsic_dim = None if intrinsic_dim is None else int(intrinsic_dim)
        self.label = label
        self._check_manifold()

    @property
    def n_points(self):
        return self.points.shape[0]

    @property
    def ambient_dim(self):
        return self.points.shape[1]

    @property
    def is_circle(self):
        return self.label.startswith('circle')

    @property
    def is_sphere(self):
        return self.label.startswith('sphere')

    @property
    def theta(self):
        if self.latent is None:
            return None
        return self.latent[:, 0]

    def _check_manifold(self):
        if self.is_circle or self.is_sphere:
            norms = np.linalg.norm(self.points, axis=1)
            if np.max(np.abs(norms - 1.0)) > 1e-12:
                raise ValueError('{0} cloud has points off the unit sphere.'.format(self.label))
        if self.is_circle and self.latent is not None:
            theta = self.latent[:, 0]
            if np.any(theta < 0) or np.any(theta >= TWO_PI):
                raise ValueError('Circle latent angles must lie in [0, 2*pi).')

    def subset(self, keep):
        keep = np.asarray(keep)
        latent = None if self.latent is None else self.latent[keep]
        return PointCloud(self.points[keep], latent=latent, intrinsic_dim=self.intrinsic_dim, label=self.label)

    def __len__(self):
        return self.n_points

    def __str__(self):
        return 'PointCloud({0}: N={1}, n={2}, d={3})'.format(self.label, self.n_points, self.ambient_dim,
                                                             self.intrinsic_dim)

    __repr__ = __str__


def remove_points(cloud, keep_mask):
    return cloud.subset(np.asarray(keep_mask, dtype=bool))


def embed_circle(theta):
    return np.column_stack((np.cos(theta), np.sin(theta)))


def circle_cdf(theta):
    '''CDF of the circle density q(theta) = (2 + cos theta) / (4 pi).'''
    return (2.0 * theta + np.sin(theta)) / (4.0 * np.pi)


def _invert_circle_cdf(t):
    theta, result = bisect(lambda th: circle_cdf(th) - t, 0.0, TWO_PI, xtol=1e-12, full_output=True, disp=False)
    if not result.converged:
        raise InversionFailure('Bisection on F(theta) = {0} did not converge ({1}).'.format(t, result.flag))
    return theta


def gen_circle_nonuniform(n):
    '''Deterministic grid theta_i = F^-1(i / (N + 1)) distributed as (2 + cos theta) / (4 pi).'''
    if n < 2:
        raise ValueError('N must be at least 2.')
    t = np.arange(1, n + 1) / float(n + 1)
    theta = np.array([_invert_circle_cdf(ti) for ti in t])
    return PointCloud(embed_circle(theta), latent=theta, intrinsic_dim=1, label='circle-nonuniform')


def gen_circle_uniform_grid(n):
    if n < 2:
        raise ValueError('N must be at least 2.')
    theta = TWO_PI * np.arange(n) / float(n)
    return PointCloud(embed_circle(theta), latent=theta, intrinsic_dim=1, label='circle-grid')


def gen_circle_vonmises(n, kappa=1.0, seed=1):
    '''I.i.d. angles with density proportional to exp(kappa cos theta).'''
    if n < 2:
        raise ValueError('N must be at least 2.')
    rng = np.random.default_rng(seed)
    theta = np.mod(rng.vonmises(0.0, kappa, size=n), TWO_PI)
    theta = np.where(theta >= TWO_PI, theta - TWO_PI, theta)
    return PointCloud(embed_circle(theta), latent=theta, intrinsic_dim=1, label='circle-vonmises')


def inverse_erf(u, tol=1e-14, max_iter=50):
    '''erf^-1 polished by Newton steps on erf.  Stops once every update is below tol.'''
    u = np.asarray(u, dtype=float)
    x = erfinv(u)
    scale = 0.5 * math.sqrt(math.pi)
    for _ in range(max_iter):
        step = (erf(x) - u) * scale * np.exp(x * x)
        x = x - step
        if np.max(np.abs(step), initial=0.0) < tol:
            break
    return x


def gen_gaussian_nice_1d(n):
    '''x_i = sqrt(2) erf^-1(2 i / (N + 1) - 1): a grid whose empirical law converges to N(0, 1).'''
    if n < 2:
        raise ValueError('N must be at least 2.')
    i = np.arange(1, n + 1)
    # integer numerator keeps u antisymmetric in i exactly
    u = (2.0 * i - (n + 1)) / float(n + 1)
    x = math.sqrt(2.0) * inverse_erf(u)
    return PointCloud(x[:, None], intrinsic_dim=1, label='gaussian-nice')


def check_covariance(cov):
    cov = np.atleast_2d(np.array(cov, dtype=float))
    if cov.shape[0] != cov.shape[1]:
        raise InvalidCovariance('Covariance must be square, got {0}.'.format(cov.shape))
    if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * max(1.0, np.max(np.abs(cov)))):
        raise InvalidCovariance('Covariance must be symmetric.')
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise InvalidCovariance('Covariance is not positive definite.')


def random_spd(dim, seed):
    '''cov = A^T A + 0.1 I with standard normal A, always symmetric positive definite.'''
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((dim, dim))
    return a.T.dot(a) + 0.1 * np.eye(dim)


def gen_gaussian_random(n, dim, cov, seed):
    if n < 2:
        raise ValueError('N must be at least 2.')
    chol = check_covariance(cov)
    if chol.shape[0] != dim:
        raise InvalidCovariance('Covariance is {0}x{0} but dim is {1}.'.format(chol.shape[0], dim))
    rng = np.random.default_rng(seed)
    points = rng.standard_normal((n, dim)).dot(chol.T)
    return PointCloud(points, intrinsic_dim=dim, label='gaussian')


def gen_sphere_nonuniform(n, cov, seed):
    '''Gaussian draws in R^3 projected onto the unit sphere; zero-norm draws are redrawn.'''
    if n < 2:
        raise ValueError('N must be at least 2.')
    chol = check_covariance(cov)
    if chol.shape[0] != 3:
        raise InvalidCovariance('Sphere covariance must be 3x3.')
    rng = np.random.default_rng(seed)
    points = rng.standard_normal((n, 3)).dot(chol.T)
    norms = np.linalg.norm(points, axis=1)
    while np.any(norms == 0):
        bad = norms == 0
        points[bad] = rng.standard_normal((int(bad.sum()), 3)).dot(chol.T)
        norms = np.linalg.norm(points, axis=1)
    points = points / norms[:, None]
    # a second pass pins every norm to 1 within an ulp or two
    points = points / np.linalg.norm(points, axis=1)[:, None]
    return PointCloud(points, intrinsic_dim=2, label='sphere')


def gen_torus_grid(n_per_dim):
    '''Uniform (theta, phi) grid on the flat torus embedded as (cos theta, sin theta, cos phi, sin phi).'''
    if n_per_dim < 2:
        raise ValueError('n_per_dim must be at least 2.')
    angles = TWO_PI * np.arange(n_per_dim) / float(n_per_dim)
    theta, phi = [a.ravel() for a in np.meshgrid(angles, angles, indexing='ij')]
    points = np.column_stack((np.cos(theta), np.sin(theta), np.cos(phi), np.sin(phi)))
    return PointCloud(points, latent=np.column_stack((theta, phi)), intrinsic_dim=2, label='torus')


def perturb_circle(cloud, amplitude, seed):
    '''theta_i <- (theta_i + U[0, amplitude]) mod 2 pi, re-embedded on the unit circle.'''
    if not cloud.is_circle or cloud.latent is None:
        raise WrongManifold('{0} is not a circle cloud with latent angles.'.format(cloud))
    if amplitude == 0:
        return cloud
    rng = np.random.default_rng(seed)
    theta = np.mod(cloud.theta + rng.uniform(0.0, amplitude, size=cloud.n_points), TWO_PI)
    theta = np.where(theta >= TWO_PI, theta - TWO_PI, theta)
    return PointCloud(embed_circle(theta), latent=theta, intrinsic_dim=1, label='circle-perturbed')


def save_csv(cloud, path):
    header = ['x{0}'.format(i + 1) for i in range(cloud.ambient_dim)]
    columns = [cloud.points]
    if cloud.latent is not None:
        header.extend(LATENT_COLUMNS[:cloud.latent.shape[1]])
        columns.append(cloud.latent)
    write_rows(path, header, np.hstack(columns))


def load_csv(source, intrinsic_dim=None, label='external', headers=None, verify=True, cert=None):
    '''Reads the CSV written by save_csv from a path or an http(s) URL.

    headers, verify (a bool or a CA bundle path) and cert are passed to requests for URLs.
    '''
    if source.startswith(('http://', 'https://')):
        response = get(source, headers=headers, verify=verify, cert=cert)
        response.raise_for_status()
        lines = response.text.splitlines()
    else:
        with open(source) as f:
            lines = f.read().splitlines()
    try:
        header, values = read_rows(lines)
    except ValueError as exc:
        raise MalformedCloud('{0}: {1}'.format(source, exc))
    latent_idx = [i for i, col in enumerate(header) if col in LATENT_COLUMNS]
    coord_idx = [i for i, col in enumerate(header) if col not in LATENT_COLUMNS]
    latent = values[:, latent_idx] if latent_idx else None
    if label == 'external' and latent is not None and len(latent_idx) == 1:
        norms = np.linalg.norm(values[:, coord_idx], axis=1)
        if np.max(np.abs(norms - 1.0)) <= 1e-12:
            label = 'circle-external'
    log.debug('Loaded %d points with columns %s from %s', values.shape[0], header, source)
    return PointCloud(values[:, coord_idx], latent=latent, intrinsic_dim=intrinsic_dim, label=label)
