'''Variable-bandwidth kernel assembly and the normalization cascade producing the generator L and its symmetric
conjugate Lhat = (S^-1 K S^-1 - P^-2) / eps.

The Gaussian shape is h(u) = exp(-u / 4), i.e. the kernel denominator is 4 eps rho(x) rho(y), for which the shape
moment ratio m = m2 / m0 is exactly 1.
'''
import logging
import math
import time

import numpy as np
from scipy import sparse
from scipy.integrate import quad
from scipy.spatial.distance import cdist
from scipy.special import gamma

from vbdiff.utils import write_rows

log = logging.getLogger(__name__)

FORMULATIONS = ('left', 'right', 'symmetric')
APPLY_CHUNK = 1024
APPLY_ELEMENTS = 2 ** 23


def shape(u):
    return np.exp(-u / 4.0)


class ShapeConstants(object):

    def __init__(self, m0, m2, m0_hat, m2_hat):
        self.m0 = m0
        self.m2 = m2
        self.m = m2 / m0
        self.m0_hat = m0_hat
        self.m2_hat = m2_hat

    def __str__(self):
        return 'ShapeConstants(m0={0:.12g}, m2={1:.12g}, m={2:.12g})'.format(self.m0, self.m2, self.m)

    __repr__ = __str__


def shape_constants(d, quadrature=False):
    '''Moments m0 = int h(|z|^2), m2 = 1/2 int z_1^2 h(|z|^2) and the hatted versions with h^2, over R^d.'''
    if not quadrature:
        return ShapeConstants((4 * math.pi) ** (d / 2.0), (4 * math.pi) ** (d / 2.0),
                              (2 * math.pi) ** (d / 2.0), 0.5 * (2 * math.pi) ** (d / 2.0))
    sphere_area = 2 * math.pi ** (d / 2.0) / gamma(d / 2.0)

    def radial(power, squared):
        def integrand(r):
            h = shape(r * r)
            return r ** power * (h * h if squared else h)
        return sphere_area * quad(integrand, 0, np.inf, epsabs=1e-13, epsrel=1e-12)[0]

    # int z_1^2 h = (1/d) int |z|^2 h by symmetry
    return ShapeConstants(radial(d - 1, False), radial(d + 1, False) / (2.0 * d),
                          radial(d - 1, True), radial(d + 1, True) / (2.0 * d))


def kernel_matrix(cloud, rho, eps, support=None):
    '''K_ij = exp(-|x_i - x_j|^2 / (4 eps rho_i rho_j)) on the neighbor support, then K <- (K + K^T) / 2.

    support is a NeighborGraph; None evaluates every pair.
    '''
    if eps <= 0:
        raise ValueError('eps must be positive.')
    rho = np.asarray(rho, dtype=float)
    n = cloud.n_points
    if support is None:
        sq = cdist(cloud.points, cloud.points, 'sqeuclidean')
        dense = np.exp(-sq / (4.0 * eps * np.outer(rho, rho)))
        np.fill_diagonal(dense, 1.0)
        K = sparse.csr_matrix(dense)
    else:
        rows = support.rows()
        cols = support.indices.ravel()
        values = np.exp(-support.distances.ravel() ** 2 / (4.0 * eps * rho[rows] * rho[cols]))
        K = sparse.csr_matrix((values, (rows, cols)), shape=(n, n))
    return symmetrize(K)


def symmetrize(matrix):
    return ((matrix + matrix.T) * 0.5).tocsr()


def row_sums(matrix):
    return np.asarray(matrix.sum(axis=1)).ravel()


def qS_normalization(K, rho, d):
    '''q^S_eps(x_i) = sum_l K_il / rho_i^d, proportional to a kernel density estimate.'''
    return row_sums(K) / np.asarray(rho, dtype=float) ** d


def alpha_normalize(K, qS, alpha):
    '''K_alpha = K_ij / (qS_i^alpha qS_j^alpha) and its row sums q^S_{eps,alpha}.'''
    qS = np.asarray(qS, dtype=float)
    if np.any(qS <= 0):
        raise ValueError('qS must be positive.')
    weights = sparse.diags(qS ** -alpha)
    Kalpha = symmetrize(weights.dot(K).dot(weights))
    return Kalpha, row_sums(Kalpha)


class GeneratorMatrices(object):
    '''Kernel, normalizations and the symmetric conjugate of one (eps, alpha) generator.

    P = rho, D = q^S_{eps,alpha}, S = P sqrt(D) are stored as diagonal vectors.
    '''

    def __init__(self, eps, alpha, K, qS, Kalpha, q_eps_alpha, Lhat, P, D, S):
        self.eps = eps
        self.alpha = alpha
        self.K = K
        self.qS = qS
        self.Kalpha = Kalpha
        self.q_eps_alpha = q_eps_alpha
        self.Lhat = Lhat
        self.P = P
        self.D = D
        self.S = S

    @property
    def n_points(self):
        return self.Lhat.shape[0]

    def markov(self):
        '''Row-stochastic Khat = D^-1 K_alpha.'''
        return sparse.diags(1.0 / self.D).dot(self.Kalpha).tocsr()

    def generator(self):
        '''Non-symmetric L = P^-2 (D^-1 K_alpha - I) / eps.'''
        scale = 1.0 / (self.eps * self.P ** 2)
        return (sparse.diags(scale).dot(self.markov()) - sparse.diags(scale)).tocsr()

    def apply(self, f):
        f = np.asarray(f, dtype=float)
        return (self.Kalpha.dot(f) / self.D - f) / (self.eps * self.P ** 2)

    def __str__(self):
        return 'GeneratorMatrices(N={0}, eps={1:.6g}, alpha={2}, nnz={3})'.format(self.n_points, self.eps,
                                                                                 self.alpha, self.Lhat.nnz)

    __repr__ = __str__


def generator_symmetric(Kalpha, q_eps_alpha, rho, eps, alpha=None, K=None, qS=None):
    '''Lhat_ij = (K_alpha_ij / sqrt(D_i D_j) - delta_ij) / (eps rho_i rho_j), similar to L through S.'''
    rho = np.asarray(rho, dtype=float)
    D = np.asarray(q_eps_alpha, dtype=float)
    S = rho * np.sqrt(D)
    inv_s = sparse.diags(1.0 / S)
    Lhat = (inv_s.dot(Kalpha).dot(inv_s) - sparse.diags(1.0 / rho ** 2)) / eps
    return GeneratorMatrices(eps, alpha, K, qS, Kalpha, D, symmetrize(Lhat), rho, D, S)


def build_generator(cloud, rho, eps, alpha, d, graph=None, verbose=False):
    t0 = time.time()
    K = kernel_matrix(cloud, rho, eps, support=graph)
    qS = qS_normalization(K, rho, d)
    Kalpha, q_eps_alpha = alpha_normalize(K, qS, alpha)
    gm = generator_symmetric(Kalpha, q_eps_alpha, rho, eps, alpha=alpha, K=K, qS=qS)
    if verbose:
        log.info('Took %.3fs to assemble %s.', time.time() - t0, gm)
    return gm


def _directed_rows(cloud, graph, start, stop):
    '''Squared distances and column indices for rows start:stop, over the support or every point.'''
    if graph is None:
        sq = cdist(cloud.points[start:stop], cloud.points, 'sqeuclidean')
        cols = np.broadcast_to(np.arange(cloud.n_points), sq.shape)
        return sq, cols
    return graph.distances[start:stop] ** 2, graph.indices[start:stop]


def _blocks(n):
    rows = max(1, min(APPLY_CHUNK, APPLY_ELEMENTS // n))
    return [(start, min(n, start + rows)) for start in range(0, n, rows)]


def _apply_one_sided(cloud, rho, eps, formulation, f, graph, m):
    n = cloud.n_points
    out = np.empty(n)
    for start, stop in _blocks(n):
        sq, cols = _directed_rows(cloud, graph, start, stop)
        if formulation == 'left':
            scale = rho[start:stop, None]
        else:
            scale = rho[cols]
        weights = shape(sq / (eps * scale))
        averaged = (weights * f[cols]).sum(axis=1) / weights.sum(axis=1)
        out[start:stop] = (averaged - f[start:stop]) / (eps * m * rho[start:stop])
    return out


def _kernel_rows(cloud, rho, eps, start, stop):
    sq = cdist(cloud.points[start:stop], cloud.points, 'sqeuclidean')
    return np.exp(-sq / (4.0 * eps * np.outer(rho[start:stop], rho)))


def _apply_symmetric_pairs(cloud, rho, eps, f, alpha, d):
    '''L f through the alpha cascade over every pair, one block of kernel rows at a time.

    The qS_i^-alpha factor of K_alpha cancels between the numerator and D_i, leaving
    sum_j K_ij w_j f_j / sum_j K_ij w_j with w = qS^-alpha.
    '''
    n = cloud.n_points
    blocks = _blocks(n)
    qS = np.empty(n)
    for start, stop in blocks:
        qS[start:stop] = _kernel_rows(cloud, rho, eps, start, stop).sum(axis=1)
    weights = (qS / rho ** d) ** -alpha
    weighted_f = weights * f
    out = np.empty(n)
    for start, stop in blocks:
        K = _kernel_rows(cloud, rho, eps, start, stop)
        averaged = K.dot(weighted_f) / K.dot(weights)
        out[start:stop] = (averaged - f[start:stop]) / (eps * rho[start:stop] ** 2)
    return out


def apply_generator(cloud, rho, eps, f, formulation='symmetric', alpha=0.0, d=None, graph=None):
    '''Pointwise kernel estimate of the continuous operator applied to f.

    left: bandwidth eps rho(x), prefactor 1 / (eps m rho)       -> Laplacian
    right: bandwidth eps rho(y), prefactor 1 / (eps m rho)      -> Laplacian + (d + 2) grad(rho)/rho . grad
    symmetric: bandwidth eps rho(x) rho(y) with the alpha cascade, prefactor 1 / (eps m rho^2)
    '''
    if formulation not in FORMULATIONS:
        raise ValueError('Unknown formulation {0!r}; expected one of {1}.'.format(formulation, FORMULATIONS))
    rho = np.asarray(rho, dtype=float)
    f = np.asarray(f, dtype=float)
    d = d if d is not None else (cloud.intrinsic_dim or 1)
    m = shape_constants(d).m
    if formulation != 'symmetric':
        return _apply_one_sided(cloud, rho, eps, formulation, f, graph, m)
    if graph is None:
        return _apply_symmetric_pairs(cloud, rho, eps, f, alpha, d) / m
    return build_generator(cloud, rho, eps, alpha, d, graph=graph).apply(f) / m


def export_coo(matrix, path):
    coo = sparse.coo_matrix(matrix)
    write_rows(path, ('i', 'j', 'value'), zip(coo.row, coo.col, coo.data))
