'''Pilot bandwidth, pilot kernel density estimate and the final bandwidth function rho = q0^beta.'''
import logging
import math
import time

import numpy as np
from scipy.spatial.distance import cdist

from vbdiff.utils import VbdiffException, write_rows

log = logging.getLogger(__name__)

DEFAULT_K0 = 8
FULL_SUM_LIMIT = 5000
KDE_CHUNK = 1024


class DuplicatePoints(VbdiffException):

    def __init__(self, index):
        super(DuplicatePoints, self).__init__('Point {0} coincides with all of its pilot neighbors; '
                                              'remove duplicate points or raise k0.'.format(index))
        self.index = index


class UnknownDimension(VbdiffException):

    pass


class BandwidthProfile(object):
    '''rho0: pilot bandwidth (ambient length), eps0 = mean(rho0)^2, q0: pilot density, rho = q0^beta.'''

    def __init__(self, rho0, q0, beta, d):
        self.rho0 = np.asarray(rho0, dtype=float)
        self.eps0 = float(np.mean(self.rho0)) ** 2
        self.rho0_tilde = self.rho0 / math.sqrt(self.eps0)
        self.q0 = np.asarray(q0, dtype=float)
        self.beta = float(beta)
        self.d = int(d)
        self.rho = bandwidth_from_density(self.q0, self.beta)
        for arr in (self.rho0, self.rho0_tilde, self.q0, self.rho):
            arr.setflags(write=False)

    @property
    def n_points(self):
        return self.rho0.shape[0]

    def dump_csv(self, path):
        write_rows(path, ('i', 'rho0', 'q0', 'rho'), zip(range(self.n_points), self.rho0, self.q0, self.rho))

    def __str__(self):
        return 'BandwidthProfile(N={0}, eps0={1:.6g}, beta={2}, d={3})'.format(self.n_points, self.eps0,
                                                                                 self.beta, self.d)

    __repr__ = __str__


def pilot_bandwidth(graph, k0=DEFAULT_K0):
    '''rho0(x_i): root-mean-square distance to neighbors 2..k0, the point itself left out.'''
    if k0 < 2 or k0 > graph.k:
        raise ValueError('k0 must satisfy 2 <= k0 <= k={0}, got {1}.'.format(graph.k, k0))
    rho0 = np.sqrt(np.mean(graph.distances[:, 1:k0] ** 2, axis=1))
    zero = np.flatnonzero(rho0 == 0)
    if zero.size:
        raise DuplicatePoints(int(zero[0]))
    return rho0


def _kde_sums_dense(points, rho0):
    n = points.shape[0]
    sums = np.empty(n)
    for start in range(0, n, KDE_CHUNK):
        stop = min(n, start + KDE_CHUNK)
        sq = cdist(points[start:stop], points, 'sqeuclidean')
        sums[start:stop] = np.exp(-sq / (2.0 * np.outer(rho0[start:stop], rho0))).sum(axis=1)
    return sums


def _kde_sums_sparse(graph, rho0):
    # row i lists i itself first, so the diagonal term is in the sum
    scale = 2.0 * rho0[:, None] * rho0[graph.indices]
    return np.exp(-graph.distances ** 2 / scale).sum(axis=1)


def kde_pilot(cloud, rho0, d, graph=None, full_sum_limit=FULL_SUM_LIMIT):
    '''q0(x_i) = (2 pi)^(-d/2) / (rho0_i^d N) sum_l exp(-|x_i - x_l|^2 / (2 rho0_i rho0_l)), l = i included.

    Above full_sum_limit points the sum runs over the neighbor support only (needs graph).
    '''
    rho0 = np.asarray(rho0, dtype=float)
    if np.any(rho0 <= 0):
        raise ValueError('Pilot bandwidth must be positive.')
    if d < 1:
        raise ValueError('Intrinsic dimension must be positive.')
    n = cloud.n_points
    if graph is not None and n > full_sum_limit:
        sums = _kde_sums_sparse(graph, rho0)
    else:
        sums = _kde_sums_dense(cloud.points, rho0)
    q0 = (2.0 * math.pi) ** (-d / 2.0) * sums / (rho0 ** d * n)
    eps0 = float(np.mean(rho0)) ** 2
    return q0, eps0


def bandwidth_from_density(q0, beta):
    q0 = np.asarray(q0, dtype=float)
    if np.any(q0 <= 0):
        raise ValueError('Density estimate must be positive.')
    return q0 ** beta


def c_constants(alpha, beta, d):
    '''Drift coefficient c1 of the limiting operator and error exponent c2.'''
    c1 = 2.0 - 2.0 * alpha + d * beta + 2.0 * beta
    c2 = 0.5 - 2.0 * alpha + 2.0 * d * alpha + d * beta / 2.0 + beta
    return c1, c2


def error_bound_is_uniform(alpha, beta, d):
    '''True when both density exponents of the pointwise error bound keep it bounded as q -> 0.'''
    _, c2 = c_constants(alpha, beta, d)
    return c2 <= 0 and (1.0 - d * beta) / 2.0 > 0


def resolve_dimension(cloud, estimate=None):
    if cloud.intrinsic_dim is not None:
        return cloud.intrinsic_dim
    if estimate is not None:
        return max(1, int(round(estimate)))
    raise UnknownDimension('{0} has no intrinsic dimension and none was estimated.'.format(cloud))


def monte_carlo_volume(q0):
    return float(np.mean(1.0 / np.asarray(q0, dtype=float)))


def lowest_density(q0, count):
    '''Indices of the count smallest density values (stable on ties).'''
    return np.argsort(np.asarray(q0), kind='stable')[:int(count)]


def build_profile(cloud, graph, beta, d, k0=DEFAULT_K0, full_sum_limit=FULL_SUM_LIMIT, verbose=False):
    t0 = time.time()
    rho0 = pilot_bandwidth(graph, k0)
    q0, _ = kde_pilot(cloud, rho0, d, graph=graph, full_sum_limit=full_sum_limit)
    profile = BandwidthProfile(rho0, q0, beta, d)
    if verbose:
        log.info('Took %.3fs to build %s (q0 in [%.4g, %.4g]).', time.time() - t0, profile, q0.min(), q0.max())
    return profile
