'''End-to-end experiments: generate -> knn -> density -> kernel -> spectral -> align -> error, swept over eps.'''
from concurrent.futures import ThreadPoolExecutor
import logging
import math
import os
import time

import numpy as np

from vbdiff import analytic, density, kernel, neighbors, pointcloud, spectral, tuning
from vbdiff.config import ConfigError, preset_weights
from vbdiff.utils import VbdiffException, format_float, write_rows

log = logging.getLogger(__name__)

OPERATOR_EXPERIMENTS = ('circle_operator', 'torus_operator', 'circle_gradient_operator')
IMPOSED_BANDWIDTH = ('circle_operator', 'torus_operator')
REQUIRED_PAIRS = {'ou1d_nice': 4, 'ou1d_random': 4, 'ou1d_seeds': 4, 'ou2d': 6, 'circle': 3, 'circle_random': 3,
                  'sphere': 4, 'outlier_study': 4}
SCORED_COLUMN = {'ou2d': 4, 'circle': 2, 'circle_random': 2}  # xy and sin(theta); H3 otherwise
OPERATOR_FULL_LIMIT = 20000
SEED_PRESETS = ('gradientflow-fixed', 'gradientflow-vb')
OUTLIER_MASK = (-2.0, 2.0)


class SweepFailed(VbdiffException):

    pass


class ResultTable(object):
    '''One row per successful eps: (eps, mse, eig_err, wall_time_s); failed eps go to failures.'''

    header = ('eps', 'mse', 'eig_err', 'wall_time_s')

    def __init__(self, rows=(), failures=(), meta=None):
        self.rows = list(rows)
        self.failures = list(failures)
        self.meta = meta or []

    def best(self):
        if not self.rows:
            raise SweepFailed('No eps value succeeded.')
        return min(self.rows, key=lambda row: row[1])

    def write(self, output_dir, config_text=''):
        write_rows(os.path.join(output_dir, 'results.csv'), self.header, self.rows)
        write_rows(os.path.join(output_dir, 'failures.csv'), ('eps', 'error'), self.failures)
        with open(os.path.join(output_dir, 'meta.txt'), 'w') as f:
            f.write(config_text + '\n')
            for key, value in self.meta:
                f.write('{0}: {1}\n'.format(key, value))

    def __len__(self):
        return len(self.rows)


def eps_tag(eps):
    return '{0:.6e}'.format(eps)


def scale_columns(matrix):
    '''Each column rescaled to Euclidean norm sqrt(N), the empirical L2(q) normalization.'''
    matrix = np.array(matrix, dtype=float)
    matrix = matrix[:, None] if matrix.ndim == 1 else matrix
    norms = np.linalg.norm(matrix, axis=0)
    if np.any(norms == 0):
        raise spectral.DegenerateEigenvector('Reference function vanishes on every sample.')
    return matrix * (math.sqrt(matrix.shape[0]) / norms)


def generate_cloud(config):
    kind = config.experiment
    if config.will_read_input:
        return pointcloud.load_csv(config.input_path, intrinsic_dim=config.intrinsic_dim)
    n, seed = config.n, config.seed
    if kind in ('ou1d_nice', 'outlier_study'):
        return pointcloud.gen_gaussian_nice_1d(n or config.outlier_sizes[0])
    if kind in ('ou1d_random', 'ou1d_seeds'):
        return pointcloud.gen_gaussian_random(n, 1, np.eye(1), seed)
    if kind == 'ou2d':
        return pointcloud.gen_gaussian_random(n, 2, np.eye(2), seed)
    if kind == 'circle':
        return pointcloud.gen_circle_nonuniform(n)
    if kind == 'circle_random':
        return pointcloud.perturb_circle(pointcloud.gen_circle_nonuniform(n), config.amplitude, seed)
    if kind == 'circle_operator':
        return pointcloud.gen_circle_uniform_grid(n)
    if kind == 'circle_gradient_operator':
        return pointcloud.gen_circle_vonmises(n, 1.0, seed)
    if kind == 'torus_operator':
        return pointcloud.gen_torus_grid(config.n_per_dim)
    return pointcloud.gen_sphere_nonuniform(n, pointcloud.random_spd(3, seed), seed)


class Experiment(object):
    '''Runs one configured experiment.  The eps-independent stages (cloud, neighbor graph, dimension, bandwidth)
    are computed once by prepare() and shared read-only by every point of the sweep.
    '''

    def __init__(self, config, cloud=None, weights=None):
        self.config = config
        self.verbose = config.verbose
        self.cloud = cloud
        self.weights = weights
        self.graph = None
        self.all_pairs = False
        self.d = None
        self.alpha = None
        self.beta = None
        self.profile = None
        self.curve = None
        self.meta = []

    def prepare(self):
        t0 = time.time()
        if self.cloud is None:
            self.cloud = generate_cloud(self.config)
        kind, n = self.config.experiment, self.cloud.n_points
        # an unset k_support means every pair while N stays within full_sum_limit
        self.all_pairs = self.config.k_support is None and n <= self.config.full_sum_limit
        k = min(self.config.k_support or neighbors.default_k(n, self.cloud.label), n)
        self.graph = neighbors.knn(self.cloud, k, workers=self.config.workers, verbose=self.verbose)
        self.d = self.resolve_dimension()
        self.alpha, self.beta = self.weights or self.config.weights(self.d)
        if kind not in OPERATOR_EXPERIMENTS + ('dimension',):
            self.profile = density.build_profile(self.cloud, self.graph, self.beta, self.d, k0=self.config.k0,
                                                 full_sum_limit=self.config.full_sum_limit, verbose=self.verbose)
        support = 'all pairs' if self.all_pairs else '{0}-NN'.format(k)
        self.meta.extend([('cloud', self.cloud), ('k_support', k), ('kernel_support', support), ('d', self.d),
                          ('alpha', self.alpha), ('beta', self.beta)])
        if kind not in IMPOSED_BANDWIDTH + ('dimension',):
            c1, c2 = density.c_constants(self.alpha, self.beta, self.d)
            self.meta.extend([('c1', c1), ('c2', c2),
                              ('uniform_error_bound', density.error_bound_is_uniform(self.alpha, self.beta, self.d))])
        if self.profile is not None:
            self.meta.extend([('eps0', format_float(self.profile.eps0)),
                              ('volume', format_float(density.monte_carlo_volume(self.profile.q0)))])
        if self.verbose:
            log.info('Took %.3fs to prepare %s.', time.time() - t0, self.cloud)
        return self

    def resolve_dimension(self):
        if self.config.intrinsic_dim is not None:
            return self.config.intrinsic_dim
        estimate = None
        if self.cloud.intrinsic_dim is None:
            estimate = tuning.estimate_dimension(self.cloud, self.graph, self.config.tuning_grid,
                                                 self.config.full_sum_limit)
            log.warning('Intrinsic dimension unknown; estimated d_hat = %.3f.', estimate)
        return density.resolve_dimension(self.cloud, estimate)

    @property
    def rho(self):
        kind = self.config.experiment
        if kind in IMPOSED_BANDWIDTH:
            return analytic.EXP_COS_THETA.value(self.cloud.theta)
        if kind == 'circle_gradient_operator':
            return analytic.vonmises_density(self.cloud.theta) ** self.beta
        if self.profile is None:
            return None
        return self.profile.rho

    def tune(self):
        self.curve = tuning.s_curve(self.cloud, self.rho, self.config.tuning_grid, graph=self.graph,
                                    full_sum_limit=self.config.full_sum_limit, verbose=self.verbose)
        self.curve.dump_csv(os.path.join(self.config.output_dir, 'tuning.csv'))
        eps_star, a_max, d_hat = tuning.select_epsilon(self.curve)
        self.meta.extend([('eps_star', format_float(eps_star)), ('a_max', format_float(a_max)),
                          ('d_hat', format_float(d_hat))])
        return eps_star

    def eps_values(self):
        if self.config.will_tune:
            return np.array([self.tune()])
        return self.config.eps_values()

    def generator(self, eps):
        graph = None if self.all_pairs else self.graph
        return kernel.build_generator(self.cloud, self.rho, eps, self.alpha, self.d, graph=graph,
                                      verbose=self.verbose)

    def spectrum(self, eps, M=None):
        M = M or self.config.eigenpairs
        if M >= self.cloud.n_points:
            raise ConfigError('eigenfunctions={0} needs more than {0} points, got N={1}.'.format(
                M, self.cloud.n_points))
        raw = spectral.eigs_near_zero(self.generator(eps), M, dense_limit=self.config.dense_limit,
                                      verbose=self.verbose)
        return spectral.scale_sqrtN(raw)

    def evaluate(self, eps):
        '''(mse, eig_err) for one eps.'''
        if self.config.experiment in OPERATOR_EXPERIMENTS:
            return self.evaluate_operator(eps)
        spectrum = self.spectrum(eps)
        latent = self.cloud.latent if self.cloud.latent is not None else self.cloud.points
        spectrum.dump_csv(os.path.join(self.config.output_dir, 'eigvecs_{0}.csv'.format(eps_tag(eps))),
                          latent=latent)
        return self.compare_spectrum(spectrum)

    def reference_targets(self, count):
        '''Closed-form eigenfunctions matching spectrum columns 1..count-1, as many as are available.'''
        kind = self.config.experiment
        if kind in ('circle', 'circle_random'):
            return [analytic.circle_target(k, parity) for k in range(1, count // 2 + 1)
                    for parity in ('cos', 'sin')][:count - 1]
        if kind == 'ou2d':
            return analytic.ou_spectrum(2, min(count, analytic.MAX_OU2D_TARGETS))[1:]
        return analytic.ou_spectrum(1, min(count, analytic.MAX_HERMITE + 1))[1:]

    def compare_spectrum(self, spectrum, mask=None):
        '''MSE of the scored eigenfunction after aligning its eigenspace, and the eigenvalue error there.

        Reference eigenvalues equal within spectral.REPEAT_RTOL form one eigenspace; only the block holding the
        scored column is rotated onto its references.
        '''
        kind = self.config.experiment
        vectors, values = spectrum.eigenvectors, spectrum.eigenvalues
        if spectrum.n_pairs < REQUIRED_PAIRS.get(kind, 4):
            raise ConfigError('{0} needs at least {1} eigenpairs.'.format(kind, REQUIRED_PAIRS.get(kind, 4)))
        if kind == 'sphere':
            coords = self.cloud.points
            fitted = vectors[:, 1:4].dot(spectral.least_squares_map(vectors[:, 1:4], coords))
            errors = [spectral.mse(fitted[:, axis], coords[:, axis]) for axis in range(3)]
            return max(errors), float(np.max(np.abs(values[1:4] + 2.0)))
        targets = self.reference_targets(spectrum.n_pairs)
        scored = SCORED_COLUMN.get(kind, 3) - 1
        block = next(b for b in spectral.group_repeated([t.eigenvalue for t in targets]) if scored in b)
        reference = np.zeros((self.cloud.n_points, len(targets)))
        reference[:, block] = scale_columns(np.column_stack([targets[i].evaluate(self.cloud) for i in block]))
        aligned = spectral.align_blocks(vectors[:, 1:len(targets) + 1], reference, [block])
        error = spectral.mse(aligned[:, scored], reference[:, scored], mask=mask)
        eig_err = max(abs(values[i + 1] - targets[i].eigenvalue) for i in block)
        return error, float(eig_err)

    def evaluate_operator(self, eps):
        cloud, kind = self.cloud, self.config.experiment
        f = analytic.SIN_THETA
        # all pairs while the blocked sums stay affordable, the neighbor support beyond
        graph = self.graph if cloud.n_points > OPERATOR_FULL_LIMIT else None
        formulation = 'symmetric' if kind == 'circle_gradient_operator' else self.config.formulation
        estimate = kernel.apply_generator(cloud, self.rho, eps, f.value(cloud.theta), formulation=formulation,
                                          alpha=self.alpha, d=self.d, graph=graph)
        if kind == 'circle_gradient_operator':
            c1, _ = density.c_constants(self.alpha, self.beta, self.d)
            reference = analytic.reference_operator('gradient_flow', f, cloud, q=analytic.EXP_COS_THETA, c1=c1)
        elif formulation == 'left':
            reference = analytic.reference_operator('laplacian', f, cloud)
        else:
            reference = analytic.reference_operator('bandwidth_drift', f, cloud, d=self.d,
                                                    rho=analytic.EXP_COS_THETA)
        return spectral.mse(estimate, reference), float(np.max(np.abs(estimate - reference)))

    def sweep_point(self, eps):
        t0 = time.time()
        try:
            error, eig_err = self.evaluate(eps)
        except ConfigError:
            raise
        except VbdiffException as exc:
            log.warning('eps=%s failed: %s', eps_tag(eps), exc)
            return None, (eps, '{0}: {1}'.format(type(exc).__name__, exc))
        wall = time.time() - t0 if self.config.record_timing else 0.0
        if self.verbose:
            log.info('Took %.3fs at eps=%s (mse %.4g).', wall, eps_tag(eps), error)
        return (eps, error, eig_err, wall), None

    def sweep(self, eps_values):
        with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
            results = list(pool.map(self.sweep_point, eps_values))
        rows = [row for row, _ in results if row is not None]
        failures = [failure for _, failure in results if failure is not None]
        return ResultTable(rows, failures, self.meta)

    def run(self):
        if self.config.experiment == 'outlier_study':
            return outlier_study(self.config)
        if self.config.experiment == 'ou1d_seeds':
            return seeds_study(self.config)
        self.prepare()
        if self.config.experiment == 'dimension':
            self.tune()
            return ResultTable(meta=self.meta)
        return self.sweep(self.eps_values())


def finish(table, config):
    table.write(config.output_dir, str(config))
    if table.failures and not table.rows:
        raise SweepFailed('All {0} eps values failed; see failures.csv.'.format(len(table.failures)))
    return table


def run_experiment(config):
    return finish(Experiment(config).run(), config)


class StudyExperiment(Experiment):
    '''One cloud of a multi-cloud study: scored at every eps without writing eigenvectors.'''

    def mask(self):
        return None

    def evaluate(self, eps):
        return self.compare_spectrum(self.spectrum(eps), mask=self.mask())


class OutlierExperiment(StudyExperiment):
    '''OU eigenfunction H3 scored on -2 <= x <= 2 only.'''

    def mask(self):
        x = self.cloud.points[:, 0]
        return (x >= OUTLIER_MASK[0]) & (x <= OUTLIER_MASK[1])


def outlier_count(n):
    return math.isqrt(n)


def outlier_study(config):
    '''Fixed-bandwidth OU runs on the nice 1-D grid after removing the floor(sqrt(N)) lowest-density points.

    Returns the best row per N; outliers.csv lists (n, removed, eps, mse) and meta.txt the power-law fit.
    '''
    rows, failures, studies = [], [], []
    alpha, beta = config.weights(1)
    for n in config.outlier_sizes:
        cloud = pointcloud.gen_gaussian_nice_1d(n)
        k = min(config.k_support or neighbors.default_k(n), n)
        graph = neighbors.knn(cloud, k, workers=config.workers, verbose=config.verbose)
        q0 = density.build_profile(cloud, graph, beta, 1, k0=config.k0, full_sum_limit=config.full_sum_limit).q0
        removed = outlier_count(n)
        keep = np.ones(n, dtype=bool)
        keep[density.lowest_density(q0, removed)] = False
        experiment = OutlierExperiment(config, pointcloud.remove_points(cloud, keep))
        experiment.prepare()
        table = experiment.sweep(experiment.eps_values())
        failures.extend(table.failures)
        if not table.rows:
            log.warning('Every eps failed at N=%d.', n)
            continue
        best = table.best()
        rows.append(best)
        studies.append((n, removed, best[0], best[1]))
    write_rows(os.path.join(config.output_dir, 'outliers.csv'), ('n', 'removed', 'eps', 'mse'), studies)
    meta = [('alpha', alpha), ('beta', beta)]
    if len(studies) >= 2:
        slope, intercept = np.polyfit(np.log([s[0] for s in studies]), np.log([s[3] for s in studies]), 1)
        meta.extend([('power_law_exponent', format_float(slope)),
                     ('power_law_prefactor', format_float(math.exp(intercept)))])
    return ResultTable(rows, failures, meta)


def seeds_study(config):
    '''Fixed against variable bandwidth on independent OU samples, eps chosen separately for every sample.

    Returns the best row per (seed, preset); seeds.csv lists (seed, preset, eps, mse) and meta.txt the median
    best MSE of each preset with the fixed-to-variable ratio.
    '''
    rows, failures, studies = [], [], []
    best = dict((preset, []) for preset in SEED_PRESETS)
    for seed in config.seeds:
        cloud = pointcloud.gen_gaussian_random(config.n, 1, np.eye(1), seed)
        for preset in SEED_PRESETS:
            experiment = StudyExperiment(config, cloud, weights=preset_weights(preset, 1))
            experiment.prepare()
            table = experiment.sweep(experiment.eps_values())
            failures.extend(table.failures)
            if not table.rows:
                log.warning('Every eps failed for seed %d with %s.', seed, preset)
                continue
            row = table.best()
            rows.append(row)
            studies.append((seed, preset, row[0], row[1]))
            best[preset].append(row[1])
    write_rows(os.path.join(config.output_dir, 'seeds.csv'), ('seed', 'preset', 'eps', 'mse'), studies)
    meta = [('n', config.n)]
    for preset in SEED_PRESETS:
        if best[preset]:
            meta.append(('median_mse_' + preset, format_float(np.median(best[preset]))))
    fixed, variable = (best[preset] for preset in SEED_PRESETS)
    if fixed and variable:
        meta.append(('fixed_to_variable_ratio', format_float(np.median(fixed) / np.median(variable))))
    return ResultTable(rows, failures, meta)
