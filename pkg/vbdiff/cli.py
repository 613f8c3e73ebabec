import argparse
import logging
import os
import sys

from requests.exceptions import RequestException

from vbdiff import density, kernel, pointcloud
from vbdiff.config import ConfigError, load_config
from vbdiff.experiment import OPERATOR_EXPERIMENTS, Experiment, eps_tag, finish, generate_cloud, run_experiment
from vbdiff.utils import VbdiffException, format_float

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PIPELINE = 2

commands = {  # Subcommand to help text
    'generate': 'write the configured point cloud to cloud.csv',
    'density': 'pilot bandwidth, pilot density and rho = q0^beta to density.csv',
    'build': 'assemble the symmetric generator at one eps and export it to lhat.csv',
    'eigs': 'leading eigenpairs at one eps to eigvecs_<eps>.csv',
    'tune': 'S(eps) curve to tuning.csv with eps_star and the dimension estimate',
    'operator-check': 'pointwise operator error against its closed form over the eps sweep',
    'experiment': 'full eps sweep to results.csv, eigvecs_<eps>.csv, failures.csv and meta.txt',
}


class UsageError(Exception):

    pass


class ArgumentParser(argparse.ArgumentParser):
    '''Raises on bad arguments instead of exiting, so usage errors map to their own exit code.'''

    def error(self, message):
        raise UsageError(message)


def build_parser():
    common = ArgumentParser(add_help=False)
    common.add_argument('--config', help='key = value config file')
    common.add_argument('--set', action='append', default=[], metavar='KEY=VALUE',
                        help='override a config key; may be repeated')
    common.add_argument('--verbose', action='store_true', help='log stage timings')
    parser = ArgumentParser(prog='vbdiff', description='Variable-bandwidth diffusion-kernel generator estimation')
    subparsers = parser.add_subparsers(dest='command', parser_class=ArgumentParser)
    subparsers.required = True
    for name, text in commands.items():
        subparsers.add_parser(name, parents=[common], help=text)
    return parser


def single_eps(experiment):
    eps = experiment.eps_values()
    if len(eps) != 1:
        raise ConfigError('This command needs a single eps value or eps = auto.')
    return float(eps[0])


def generate(config):
    path = os.path.join(config.output_dir, 'cloud.csv')
    cloud = generate_cloud(config)
    pointcloud.save_csv(cloud, path)
    print('{0} -> {1}'.format(cloud, path))


def run_density(config):
    experiment = Experiment(config).prepare()
    profile = experiment.profile or density.build_profile(experiment.cloud, experiment.graph, experiment.beta,
                                                          experiment.d, k0=config.k0,
                                                          full_sum_limit=config.full_sum_limit)
    profile.dump_csv(os.path.join(config.output_dir, 'density.csv'))
    print('{0} volume={1}'.format(profile, format_float(density.monte_carlo_volume(profile.q0))))


def build(config):
    experiment = Experiment(config).prepare()
    gm = experiment.generator(single_eps(experiment))
    kernel.export_coo(gm.Lhat, os.path.join(config.output_dir, 'lhat.csv'))
    print(gm)


def eigs(config):
    experiment = Experiment(config).prepare()
    eps = single_eps(experiment)
    spectrum = experiment.spectrum(eps)
    spectrum.dump_csv(os.path.join(config.output_dir, 'eigvecs_{0}.csv'.format(eps_tag(eps))),
                      latent=experiment.cloud.latent)
    print(spectrum)


def tune(config):
    experiment = Experiment(config).prepare()
    experiment.tune()
    for key in ('eps_star', 'a_max', 'd_hat'):
        print('{0}: {1}'.format(key, dict(experiment.meta)[key]))


def operator_check(config):
    if config.experiment not in OPERATOR_EXPERIMENTS:
        raise ConfigError('operator-check runs one of {0}.'.format(OPERATOR_EXPERIMENTS))
    report(run_experiment(config))


def experiment(config):
    if config.experiment == 'dimension':
        table = finish(Experiment(config).run(), config)
        print('\n'.join('{0}: {1}'.format(k, v) for k, v in table.meta if k in ('eps_star', 'a_max', 'd_hat')))
        return
    report(run_experiment(config))


def report(table):
    if table.rows:
        eps, error, eig_err, _ = table.best()
        print('best eps={0} mse={1} eig_err={2} ({3} ok, {4} failed)'.format(
            format_float(eps), format_float(error), format_float(eig_err), len(table.rows), len(table.failures)))


handlers = {
    'generate': generate,
    'density': run_density,
    'build': build,
    'eigs': eigs,
    'tune': tune,
    'operator-check': operator_check,
    'experiment': experiment,
}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        overrides = list(args.set)
        if args.verbose:
            overrides.append('verbose=true')
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format='%(asctime)s %(levelname)s %(name)s: %(message)s')
        config = load_config(args.config, overrides)
    except (UsageError, ConfigError, OSError) as exc:
        sys.stderr.write('vbdiff: {0}\n'.format(exc))
        return EXIT_USAGE
    try:
        handlers[args.command](config)
    except (ConfigError, pointcloud.MalformedCloud, OSError, RequestException) as exc:
        sys.stderr.write('vbdiff: {0}\n'.format(exc))
        return EXIT_USAGE
    except VbdiffException as exc:
        log.error('%s: %s', type(exc).__name__, exc)
        return EXIT_PIPELINE
    return EXIT_OK
