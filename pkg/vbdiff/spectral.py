'''Eigenpairs of the symmetric conjugate Lhat, recovery of generator eigenvectors U = S^-1 Uhat, sqrt(N) scaling and
alignment against reference eigenfunctions.'''
import logging
import math
import time

import numpy as np
from scipy.linalg import eigh, lstsq, orthogonal_procrustes, svdvals
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from vbdiff.utils import VbdiffException, format_cell, write_rows

log = logging.getLogger(__name__)

SOLVER_TOL = 1e-10
DENSE_LIMIT = 200
REPEAT_RTOL = 1e-2


class DisconnectedGraph(VbdiffException):

    def __init__(self, sizes):
        super(DisconnectedGraph, self).__init__('Kernel support splits into {0} components of sizes {1}; '
                                                'increase eps or k.'.format(len(sizes), sizes))
        self.sizes = sizes


class SolverFailure(VbdiffException):

    def __init__(self, iterations, message=''):
        super(SolverFailure, self).__init__('Eigensolver did not converge within {0} iterations. {1}'
                                            .format(iterations, message).strip())
        self.iterations = iterations


class DegenerateEigenvector(VbdiffException):

    pass


class AlignmentAmbiguous(VbdiffException):

    pass


class EmptyMask(VbdiffException):

    pass


class Spectrum(object):
    '''Eigenvalues (descending, at or below zero) with generator eigenvectors as columns.'''

    def __init__(self, eigenvalues, eigenvectors, scaled=False):
        self.eigenvalues = np.asarray(eigenvalues, dtype=float)
        self.eigenvectors = np.asarray(eigenvectors, dtype=float)
        self.scaled = scaled

    @property
    def n_pairs(self):
        return self.eigenvalues.shape[0]

    def dump_csv(self, path, latent=None):
        columns = [self.eigenvectors]
        first = [format_cell(v) for v in self.eigenvalues]
        if latent is not None:
            latent = np.asarray(latent, dtype=float).reshape(self.eigenvectors.shape[0], -1)
            columns.insert(0, latent)
            first = [''] * latent.shape[1] + first
        write_rows(path, first, np.hstack(columns))

    def __str__(self):
        return 'Spectrum(M={0}, scaled={1}, eigenvalues={2})'.format(self.n_pairs, self.scaled,
                                                                     np.array2string(self.eigenvalues, precision=4))

    __repr__ = __str__


def check_connected(matrix):
    # stored zeros (underflowed kernel entries) are not edges
    matrix = matrix.tocsr(copy=True)
    matrix.eliminate_zeros()
    count, labels = connected_components(matrix, directed=False)
    if count > 1:
        sizes = sorted(np.bincount(labels).tolist(), reverse=True)
        raise DisconnectedGraph(sizes)


def eigs_near_zero(gm, M, tol=SOLVER_TOL, maxiter=None, dense_limit=DENSE_LIMIT, verbose=False):
    '''M eigenpairs of Lhat closest to zero (its largest algebraic eigenvalues), mapped back through S^-1.'''
    n = gm.n_points
    if M < 1 or M >= n:
        raise ValueError('Need 1 <= M < N, got M={0}, N={1}.'.format(M, n))
    check_connected(gm.Lhat)
    t0 = time.time()
    if n <= dense_limit or M >= n - 1:
        values, vectors = eigh(gm.Lhat.toarray())
        values, vectors = values[-M:], vectors[:, -M:]
    else:
        maxiter = maxiter or int(10 * M * math.sqrt(n))
        # fixed start vector keeps reruns byte identical
        v0 = np.random.default_rng(0).standard_normal(n)
        try:
            values, vectors = eigsh(gm.Lhat, k=M, which='LA', tol=tol, maxiter=maxiter, v0=v0)
        except ArpackNoConvergence as exc:
            raise SolverFailure(maxiter, '{0} of {1} eigenpairs converged.'.format(len(exc.eigenvalues), M))
    order = np.argsort(values)[::-1]
    values, vectors = values[order], vectors[:, order]
    if verbose:
        log.info('Took %.3fs to find %d eigenpairs of %s; leading %s.', time.time() - t0, M, gm, values[:4])
    return Spectrum(values, vectors / gm.S[:, None], scaled=False)


def scale_sqrtN(spectrum):
    '''Each column rescaled to norm sqrt(N), sign chosen so its largest-magnitude entry is positive.'''
    vectors = np.array(spectrum.eigenvectors, dtype=float)
    n = vectors.shape[0]
    for col in range(vectors.shape[1]):
        norm = np.linalg.norm(vectors[:, col])
        if norm == 0:
            raise DegenerateEigenvector('Eigenvector {0} is identically zero.'.format(col))
        vectors[:, col] *= math.sqrt(n) / norm
        if vectors[np.argmax(np.abs(vectors[:, col])), col] < 0:
            vectors[:, col] = -vectors[:, col]
    return Spectrum(spectrum.eigenvalues, vectors, scaled=True)


def _as_columns(matrix):
    matrix = np.asarray(matrix, dtype=float)
    return matrix[:, None] if matrix.ndim == 1 else matrix


def align_orthogonal(estimated, reference):
    '''Orthogonal Q minimizing |estimated Q - reference| (Procrustes); returns (Q, estimated Q).'''
    estimated, reference = _as_columns(estimated), _as_columns(reference)
    if estimated.shape != reference.shape:
        raise ValueError('Shapes differ: {0} vs {1}.'.format(estimated.shape, reference.shape))
    singular = svdvals(estimated.T.dot(reference))
    if singular.min() <= 1e-12 * max(singular.max(), np.finfo(float).tiny):
        raise AlignmentAmbiguous('Cross product is rank deficient (singular values {0}).'.format(singular))
    rotation, _ = orthogonal_procrustes(estimated, reference)
    return rotation, estimated.dot(rotation)


def group_repeated(eigenvalues, rtol=REPEAT_RTOL):
    '''Index blocks of eigenvalues equal within relative tolerance of the block's first member.'''
    blocks = []
    for i, value in enumerate(eigenvalues):
        if blocks:
            first = eigenvalues[blocks[-1][0]]
            if abs(value - first) <= rtol * max(abs(value), abs(first)):
                blocks[-1].append(i)
                continue
        blocks.append([i])
    return blocks


def align_blocks(estimated, reference, blocks):
    '''Procrustes alignment block by block; columns outside every block are returned unchanged.'''
    estimated, reference = _as_columns(estimated), _as_columns(reference)
    aligned = estimated.copy()
    for block in blocks:
        _, aligned[:, block] = align_orthogonal(estimated[:, block], reference[:, block])
    return aligned


def least_squares_map(estimated, targets):
    '''B minimizing |estimated B - targets|; minimum-norm solution when rank deficient.'''
    estimated, targets = _as_columns(estimated), _as_columns(targets)
    if estimated.shape[0] < estimated.shape[1]:
        raise ValueError('Need at least as many rows as columns.')
    B, _, rank, singular = lstsq(estimated, targets)
    if rank < estimated.shape[1]:
        cond = singular[0] / singular[-1] if singular[-1] > 0 else np.inf
        log.warning('Least-squares map is rank deficient (rank %d of %d, condition number %.3g).',
                    rank, estimated.shape[1], cond)
    return B


def mse(a, b, mask=None):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError('Lengths differ: {0} vs {1}.'.format(a.shape, b.shape))
    if mask is not None:
        a, b = a[mask], b[mask]
    if a.size == 0:
        raise EmptyMask('No points selected for the error metric.')
    return float(np.mean((a - b) ** 2))
