import sys
import json
import logging
import argparse

from .errors import SDTError
from .config import EXPERIMENTS, default_config, load_config, merge, parse_value
from .experiments import run_experiment


log = logging.getLogger(__name__)

# command line option -> config field
FLAGS = {
    'h': 'h',
    'radius': 'radius',
    'center': 'center',
    'dims': 'dims',
    'origin': 'origin',
    'metric': 'metric',
    'alpha': 'alpha',
    'alphas': 'alphas',
    'seed': 'seed',
    'iterations': 'iterations',
    'cfl': 'cfl',
    'sign_epsilon': 'sign_epsilon',
    'log_every': 'log_every',
    'band': 'band',
    'bins': 'hist_bins',
    'range': 'hist_range',
    'order': 'curvature_order',
    'convention': 'convention',
    'shape': 'shape',
    'vertices': 'vertices',
    'out_dir': 'out_dir',
    'rate': 'rate',
}

DESCRIPTIONS = {
    'quant1d': 'quantized and biased SDT of a 1D sphere',
    'quant2d': 'quantization levels of the SDT of a 2D shape',
    'gradients': 'banding and flat gradients of the quantized SDT',
    'higher': 'second derivatives and curvature of the quantized SDT',
    'voronoi': 'Voronoi edges of the feature transform',
    'reinit': 'dither and reinitialize the quantized SDT',
    'sweep-alpha': 'reinitialization runs for several dither amplitudes',
    'curvature-hist': 'mean curvature histograms of a 3D sphere',
    'dither': 'the dithered SDT and its noise',
}


#
def _common_parser():
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument('--h', metavar='H', help='sampling period, SI scale factors allowed (500m)')
    common.add_argument('--radius', metavar='R', help='sphere radius')
    common.add_argument('--center', metavar='X[,Y[,Z]]', help='sphere center')
    common.add_argument('--dims', metavar='N[,M[,K]]', help='samples per axis')
    common.add_argument('--origin', metavar='X[,Y[,Z]]', help='coordinate of sample 0')
    common.add_argument('--metric', metavar='NAME',
                        help="euclidean, manhattan, chebyshev or 'chamfer:axial,diagonal[,corner]'")
    common.add_argument('--alpha', help="dither amplitude divisor (> 1), 'none' for no dither")
    common.add_argument('--alphas', metavar='A,B,...', help="alpha sweep, 'none' runs without dither")
    common.add_argument('--seed', help='dither seed')
    common.add_argument('--iterations', help='reinitialization steps')
    common.add_argument('--cfl', help='dt / h')
    common.add_argument('--sign-epsilon', dest='sign_epsilon', help='sign clamp magnitude / h')
    common.add_argument('--log-every', dest='log_every', metavar='N', help='error report stride')
    common.add_argument('--band', help='curvature band half width (default h)')
    common.add_argument('--bins', help='curvature histogram bins')
    common.add_argument('--range', metavar='LOW,HIGH', help='curvature histogram range')
    common.add_argument('--order', help='curvature stencil order, 2 or 4')
    common.add_argument('--convention', help='level convention: raw or corrected_sdt')
    common.add_argument('--shape', help='sphere or polygon')
    common.add_argument('--vertices', metavar='X,Y;X,Y;...', help='polygon corners')
    common.add_argument('--out-dir', dest='out_dir', metavar='DIR', help='output directory')
    common.add_argument('--rate', action='store_const', const='true', help='log reinitialization steps per second')
    common.add_argument('--config', metavar='FILE', help='key = value config file; flags win over it')
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', dest='verbosity', action='store_const', const=logging.DEBUG,
                           help='log debug messages')
    verbosity.add_argument('-q', '--quiet', dest='verbosity', action='store_const', const=logging.WARNING,
                           help='log warnings and errors only')
    return common


#
def build_parser():
    parser = argparse.ArgumentParser(prog='pysdtq',
                                     description='Quantization of signed distance transforms and its correction.',
                                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub = parser.add_subparsers(dest='experiment', required=True, metavar='EXPERIMENT')
    common = _common_parser()
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common], help=DESCRIPTIONS[name], description=DESCRIPTIONS[name],
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    return parser


#
def build_config(experiment,given):
    '''
    The experiment's defaults, overridden by the config file, overridden
    by the flags.

    Parameters:

    experiment : subcommand name.
    given : dict of the options that were given, as text.
    '''
    config = default_config(experiment)
    if 'config' in given:
        overrides = load_config(given['config'])
        if overrides.pop('experiment', experiment) != experiment:
            log.warning('config file experiment ignored, running %s', experiment)
        config = merge(config, overrides)
    flags = {FLAGS[k]: parse_value(FLAGS[k], v) for k, v in given.items() if k in FLAGS}
    return merge(config, flags)


#
def configure_logging(level):
    logging.basicConfig(format='%(levelname)s %(name)s: %(message)s', stream=sys.stderr)
    logging.getLogger().setLevel(level)


#
def main(argv=None):
    '''
    Runs one experiment from the command line.

    Returns:

    0 when all artifacts were written, 1 on error. Errors are reported as a
    single line 'error type=<class> message=<json string>' on stderr.
    '''
    args = vars(build_parser().parse_args(argv))
    experiment = args.pop('experiment')
    configure_logging(args.pop('verbosity', logging.INFO))
    log.info('%s was called with: %s', experiment, ' '.join(f'{k}={v}' for k, v in args.items()))
    try:
        config = build_config(experiment, args)
        run_experiment(config)
    except (SDTError, OSError) as e:
        print(f'error type={type(e).__name__} message={json.dumps(str(e))}', file=sys.stderr)
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
