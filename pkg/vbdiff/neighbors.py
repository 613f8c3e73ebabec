'''Exact k-nearest-neighbor search feeding the pilot bandwidth and the sparse kernel support.'''
import logging
import time

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from vbdiff.utils import VbdiffException, write_rows

log = logging.getLogger(__name__)

KDTREE_MAX_DIM = 16
BRUTE_CHUNK = 512
DEFAULT_K = 128
TORUS_K = 500
TIE_RTOL = 1e-12


class KTooLarge(VbdiffException):

    pass


class NeighborGraph(object):
    '''Per-point sorted neighbor lists.  Row i starts with i itself at distance 0.'''

    def __init__(self, indices, distances):
        indices = np.asarray(indices, dtype=np.int64)
        distances = np.asarray(distances, dtype=float)
        if indices.shape != distances.shape or indices.ndim != 2:
            raise ValueError('Indices and distances must be matching N x k matrices.')
        indices.setflags(write=False)
        distances.setflags(write=False)
        self.indices = indices
        self.distances = distances

    @property
    def k(self):
        return self.indices.shape[1]

    @property
    def n_points(self):
        return self.indices.shape[0]

    def rows(self):
        return np.repeat(np.arange(self.n_points), self.k)

    def dump_csv(self, path):
        write_rows(path, ('i', 'j', 'distance'),
                   zip(self.rows(), self.indices.ravel(), self.distances.ravel()))

    def __str__(self):
        return 'NeighborGraph(N={0}, k={1})'.format(self.n_points, self.k)

    __repr__ = __str__


def default_k(n_points, label=''):
    if label.startswith('torus'):
        return min(n_points, TORUS_K)
    return min(n_points, DEFAULT_K)


def _order_row(candidates, dists, i, k):
    '''Sort by distance, then self before others, then smaller index.'''
    order = np.lexsort((candidates, candidates != i, dists))[:k]
    return candidates[order], dists[order]


def _knn_tree(points, k, workers):
    n = points.shape[0]
    tree = cKDTree(points)
    k_query = min(n, k + 1)
    dists, idx = tree.query(points, k=k_query, workers=workers)
    dists = dists.reshape(n, k_query)
    idx = idx.reshape(n, k_query).astype(np.int64)
    out_idx = np.empty((n, k), dtype=np.int64)
    out_dist = np.empty((n, k))
    if k_query > k:
        boundary_tie = np.isclose(dists[:, k], dists[:, k - 1], rtol=TIE_RTOL, atol=0.0)
    else:
        boundary_tie = np.zeros(n, dtype=bool)
    for i in range(n):
        if boundary_tie[i]:
            # the tree picks arbitrarily among equidistant points at the cut; resolve by index
            row = cdist(points[i:i + 1], points)[0]
            cands = np.flatnonzero(row <= dists[i, k - 1] * (1.0 + TIE_RTOL))
            if cands.size < k:
                cands = np.arange(n)
            out_idx[i], out_dist[i] = _order_row(cands, row[cands], i, k)
        else:
            out_idx[i], out_dist[i] = _order_row(idx[i, :k], dists[i, :k], i, k)
    return out_idx, out_dist


def _knn_brute(points, k):
    n = points.shape[0]
    out_idx = np.empty((n, k), dtype=np.int64)
    out_dist = np.empty((n, k))
    everyone = np.arange(n)
    for start in range(0, n, BRUTE_CHUNK):
        block = cdist(points[start:start + BRUTE_CHUNK], points)
        for offset, row in enumerate(block):
            i = start + offset
            out_idx[i], out_dist[i] = _order_row(everyone, row, i, k)
    return out_idx, out_dist


def knn(cloud, k, workers=1, verbose=False):
    '''Exact k nearest neighbors of every point (itself included), ties broken by smaller index.'''
    n = cloud.n_points
    if k < 1:
        raise ValueError('k must be positive.')
    if k > n:
        raise KTooLarge('k={0} exceeds the number of points N={1}.'.format(k, n))
    t0 = time.time()
    if cloud.ambient_dim <= KDTREE_MAX_DIM:
        indices, distances = _knn_tree(cloud.points, k, workers)
    else:
        indices, distances = _knn_brute(cloud.points, k)
    if verbose:
        log.info('Took %.3fs for exact %d-NN of %d points in R^%d.', time.time() - t0, k, n, cloud.ambient_dim)
    return NeighborGraph(indices, distances)


def symmetrized_support(graph):
    '''Union of (i, j) and (j, i) over every neighbor pair, diagonal included.'''
    n = graph.n_points
    directed = sparse.csr_matrix((np.ones(graph.indices.size), (graph.rows(), graph.indices.ravel())),
                                 shape=(n, n))
    return (directed + directed.T).astype(bool).tocsr()
