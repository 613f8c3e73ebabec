'''Automatic eps selection from the kernel-sum statistic S(eps) = (1/N^2) sum_ij K_eps(x_i, x_j) and intrinsic
dimension estimation from its maximal log-log slope.'''
import logging
import time

import numpy as np
from scipy.spatial.distance import cdist

from vbdiff.utils import VbdiffException, write_rows

log = logging.getLogger(__name__)

DEFAULT_GRID = range(-30, 11)
FULL_SUM_LIMIT = 5000
S_CHUNK = 512
FLAT_SLOPE = 1e-12


class NoLinearRegion(VbdiffException):

    pass


class TuningCurve(object):
    '''S(eps_i) on the dyadic grid eps_i = 2^i with forward-difference slopes of log S against log eps.'''

    def __init__(self, exponents, S):
        self.exponents = np.asarray(exponents, dtype=int)
        self.eps = 2.0 ** self.exponents
        self.S = np.asarray(S, dtype=float)
        self.slopes = np.diff(np.log(self.S)) / np.diff(np.log(self.eps))

    @property
    def eps_star(self):
        return select_epsilon(self)[0]

    @property
    def a_max(self):
        return select_epsilon(self)[1]

    @property
    def d_hat(self):
        return select_epsilon(self)[2]

    def dump_csv(self, path):
        slopes = list(self.slopes) + [None]
        write_rows(path, ('i', 'eps', 'S', 'slope'), zip(self.exponents, self.eps, self.S, slopes))

    def __str__(self):
        return 'TuningCurve(i={0}..{1})'.format(self.exponents[0], self.exponents[-1])

    __repr__ = __str__


def _scaled_sq_dense(points, rho, start, stop):
    sq = cdist(points[start:stop], points, 'sqeuclidean')
    return sq / (4.0 * np.outer(rho[start:stop], rho))


def s_curve(cloud, rho=None, grid=DEFAULT_GRID, graph=None, full_sum_limit=FULL_SUM_LIMIT, verbose=False):
    '''S(eps) with the kernel exp(-|x_i - x_j|^2 / (4 eps rho_i rho_j)); rho = None is the fixed bandwidth.

    Uses every pair up to full_sum_limit points, the neighbor support (diagonal included) above it.
    '''
    exponents = np.asarray(list(grid), dtype=int)
    if exponents.size == 0:
        raise ValueError('Tuning grid is empty.')
    n = cloud.n_points
    rho = np.ones(n) if rho is None else np.asarray(rho, dtype=float)
    eps = 2.0 ** exponents
    totals = np.zeros(eps.size)
    t0 = time.time()
    if graph is None or n <= full_sum_limit:
        for start in range(0, n, S_CHUNK):
            scaled = _scaled_sq_dense(cloud.points, rho, start, min(n, start + S_CHUNK))
            for i, e in enumerate(eps):
                totals[i] += np.exp(-scaled / e).sum()
    else:
        log.warning('S(eps) summed over the %d-NN support only; large-eps values saturate below 1.', graph.k)
        scaled = graph.distances ** 2 / (4.0 * rho[:, None] * rho[graph.indices])
        for i, e in enumerate(eps):
            totals[i] = np.exp(-scaled / e).sum()
    curve = TuningCurve(exponents, totals / float(n * n))
    if verbose:
        log.info('Took %.3fs to evaluate %s over %d points.', time.time() - t0, curve, n)
    return curve


def select_epsilon(curve):
    '''eps at the maximal forward-difference slope (smallest eps on ties), that slope, and d_hat = 2 a_max.'''
    if curve.slopes.size == 0:
        raise ValueError('Tuning curve needs at least two grid points.')
    best = int(np.argmax(curve.slopes))
    a_max = float(curve.slopes[best])
    if a_max <= FLAT_SLOPE:
        raise NoLinearRegion('log S(eps) is flat over eps = 2^{0}..2^{1}.'.format(curve.exponents[0],
                                                                               curve.exponents[-1]))
    return float(curve.eps[best]), a_max, 2.0 * a_max


def estimate_dimension(cloud, graph=None, grid=DEFAULT_GRID, full_sum_limit=FULL_SUM_LIMIT):
    '''d_hat from the fixed-bandwidth curve, as a real; callers round.'''
    return select_epsilon(s_curve(cloud, None, grid, graph=graph, full_sum_limit=full_sum_limit))[2]
