"""
Command-line entry point.

    python -m euler_boltzmann simulate --scenario theorem36-burgers-1d
    python -m euler_boltzmann certify --config my_scenario.ini
    python -m euler_boltzmann plot --out runs/theorem36-burgers-1d/simulate --which gradient

Exit status: 0 completed, 2 blow-up detected, 1 any error or failed check.
"""
import argparse
import json
import logging
import sys

from euler_boltzmann import __version__, config, runner
from euler_boltzmann.errors import EulerBoltzmannError, InvalidConfig
from euler_boltzmann.plots import PLOTS, emit_plots
from euler_boltzmann.scenarios import builtin_scenarios
from euler_boltzmann.snapshots import update_manifest

logger = logging.getLogger(__name__)


def _add_run_arguments(parser):
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument('--scenario', help='built-in scenario name (%s) or scenario file path'
                        % ', '.join(s.name for s in builtin_scenarios()))
    source.add_argument('--config', help='path to a scenario file')
    parser.add_argument('--out', default=config.OUTPUT_DIR,
                        help='output root directory (default: %(default)s, env EB_OUTPUT_DIR)')
    parser.add_argument('--cells', type=int, help='cells per axis (default: scenario value)')
    parser.add_argument('--ordinates', type=int, help='product ordinate order, 2 or more (default: scenario value)')
    parser.add_argument('--groups', type=int, help='frequency groups (default: scenario value)')
    parser.add_argument('--dt', type=float, help='maximum time step (default: CFL-limited)')
    parser.add_argument('--cfl', type=float, help='CFL number in (0, 1] (default: scenario value)')
    parser.add_argument('--horizon', type=float, help='final time (default: scenario value)')
    parser.add_argument('--backend', choices=config.BACKENDS, help='transport backend (default: scenario value)')
    parser.add_argument('--seed', type=int, help=f'random seed (default: scenario value or {config.DEFAULT_SEED})')
    parser.add_argument('--cadence', type=int, help='output every N steps (default: scenario value)')
    parser.add_argument('--split', choices=config.SPLITS, help='operator splitting (default: scenario value)')
    parser.add_argument('--plots', action='store_true', help='emit SVG plots after the run')


def build_parser():
    parser = argparse.ArgumentParser(
        prog='euler-boltzmann',
        description='Desk-scale laboratory for the Euler-Boltzmann equations with vacuum. '
                    'Worker threads for transport: env EB_NUM_THREADS (default 1); '
                    'log level: env EB_LOG_LEVEL (default INFO).')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    commands = parser.add_subparsers(dest='command', required=True)
    for mode in config.MODES:
        _add_run_arguments(commands.add_parser(mode, help=f'{mode} a scenario'))
    plot = commands.add_parser('plot', help='plot the artifacts of a finished run')
    plot.add_argument('--out', required=True, help='run directory holding timeseries.csv and certificate.json')
    plot.add_argument('--which', default='all', choices=('all',) + PLOTS, help='plot selector (default: all)')
    return parser


def run_config_from_args(args):
    return config.RunConfig(
        scenario=args.scenario or args.config,
        mode=args.command,
        output_dir=args.out,
        cells=args.cells, ordinates=args.ordinates, groups=args.groups,
        dt=args.dt, cfl=args.cfl, horizon=args.horizon, backend=args.backend,
        cadence=args.cadence, seed=args.seed, split=args.split, plots=args.plots,
    )


def handle(args):
    """
    Execute parsed arguments and return {'status': exit code, 'body': dict}.
    """
    try:
        if args.command == 'plot':
            paths = emit_plots(args.out, args.which)
            update_manifest(args.out, paths)
            return {'status': runner.EXIT_COMPLETED, 'body': {'plots': paths}}
        if args.command not in config.MODES:
            raise InvalidConfig(f'Unknown command {args.command!r}')
        artifacts = runner.run(run_config_from_args(args))
        return {'status': artifacts.exit_code, 'body': artifacts.to_dict()}
    except EulerBoltzmannError as e:
        logger.error('%s: %s', e.code, e.message)
        return {'status': runner.EXIT_ERROR, 'body': e.to_dict()}
    except Exception as e:
        logger.exception('unexpected failure')
        return {'status': runner.EXIT_ERROR, 'body': {'error': f'Internal error: {str(e)}'}}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=config.LOG_LEVEL,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    response = handle(args)
    print(json.dumps(response['body'], indent=2, sort_keys=True, default=str))
    return response['status']


if __name__ == '__main__':
    sys.exit(main())
