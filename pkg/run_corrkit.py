'''
Command-line entry point for corrkit: build states, evaluate correlation
monotones and run the randomized condition suites.

Usage:
    run_corrkit.py [-c CONFIG_JSON_FILEPATH] [-v] COMMAND [options]

    Commands:
        eval STATE MONOTONE [MONOTONE ...]
        construct KIND [--d1 --d2 --Q --p --lambda --dims --d --n-sites]
        check CONDITION MONOTONE --dims D1,D2,.. --trials N --seed S
              (or check 3 MONOTONE --demo-filter --d1 D --lambda L1,L2,..)
        scan STATE MONOTONE --trials N --seed S
        bell STATE [--functional CHSH|tilted_chsh|FILE.json] --seed S
        reductions STATE
        filter MONOTONE --d1 D --lambda L1,L2,..

    Arguments:
        -c, --config_json_filepath: run configuration JSON; flags override it
        -v, --verbose: debug logging

Exit codes: 0 pass, 1 violation, 2 invalid input, 3 unsupported regime,
4 inconclusive. The seed falls back to the CORRKIT_SEED environment variable.
'''
import os
import sys
import logging
import argparse

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), 'shared'))

from corrkit_shared import cli_functions  # noqa: E402
from corrkit_shared.errors import ConfigError  # noqa: E402


def build_parser():
    parser = argparse.ArgumentParser(prog='run_corrkit.py')
    parser.add_argument('-c', '--config_json_filepath', required=False,
                        help='Filepath to a run configuration JSON')
    parser.add_argument('-v', '--verbose', action='store_true', help='Debug logging')
    sub = parser.add_subparsers(dest='command')

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--out', help='Report or state output path')
    common.add_argument('--seed', type=int)
    common.add_argument('--threads', type=int, help='Cap on processes and BLAS threads')
    common.add_argument('--num-processes', dest='num_processes', type=int)
    common.add_argument('--restarts', type=int)
    common.add_argument('--iters', type=int)
    common.add_argument('--tol', type=float)
    common.add_argument('--violation-tol', dest='violation_tol', type=float)
    common.add_argument('--seesaw-allowance', dest='seesaw_allowance', type=float)
    common.add_argument('--reduction-tol', dest='reduction_tol', type=float)

    p = sub.add_parser('eval', parents=[common], help='Evaluate monotones on a state')
    p.add_argument('state')
    p.add_argument('monotones', nargs='+')

    p = sub.add_parser('construct', parents=[common], help='Write a constructed state')
    p.add_argument('kind', choices=cli_functions.CONSTRUCT_KINDS)
    p.add_argument('--d1', type=int)
    p.add_argument('--d2', type=int)
    p.add_argument('--Q', type=int)
    p.add_argument('--p')
    p.add_argument('--lambda', dest='lam')
    p.add_argument('--dims')
    p.add_argument('--d', type=int)
    p.add_argument('--n-sites', dest='n_sites', type=int)

    p = sub.add_parser('check', parents=[common], help='Run a condition suite')
    p.add_argument('condition', choices=['1', '2', '3', 'oneway'])
    p.add_argument('monotones', nargs=1)
    p.add_argument('--dims')
    p.add_argument('--trials', type=int)
    p.add_argument('--rank', type=int)
    p.add_argument('--efficient', action='store_true', default=None)
    p.add_argument('--preserve-dims', dest='preserve_dims', action='store_true', default=None)
    p.add_argument('--demo-filter', dest='demo_filter', action='store_true', default=None)
    p.add_argument('--d1', type=int)
    p.add_argument('--lambda', dest='lam')

    p = sub.add_parser('scan', parents=[common], help='Maximality scan around a candidate')
    p.add_argument('state')
    p.add_argument('monotones', nargs=1)
    p.add_argument('--trials', type=int)
    p.add_argument('--rank', type=int)

    p = sub.add_parser('bell', parents=[common], help='See-saw Bell value')
    p.add_argument('state')
    p.add_argument('--functional')

    p = sub.add_parser('reductions', parents=[common], help='Reduced-state checks')
    p.add_argument('state')

    p = sub.add_parser('filter', parents=[common], help='Cyclic filtering demonstration')
    p.add_argument('monotones', nargs=1)
    p.add_argument('--d1', type=int)
    p.add_argument('--lambda', dest='lam')
    return parser


TOLERANCE_FLAGS = ('violation_tol', 'seesaw_allowance', 'reduction_tol')
SEESAW_FLAGS = ('restarts', 'iters', 'tol')


def resolve_config(args):
    '''Config file values, overridden by any flag given on the command line.'''
    if args.config_json_filepath:
        logging.info(f'Reading run configuration from {args.config_json_filepath}')
        config = cli_functions.load_run_config(args.config_json_filepath)
    else:
        config = cli_functions.RunConfig()
    flags = {k: v for k, v in vars(args).items()
             if v is not None and k not in ('config_json_filepath', 'verbose')}
    for key, value in flags.items():
        if key in TOLERANCE_FLAGS:
            config.tolerances[key] = value
        elif key in SEESAW_FLAGS:
            config.seesaw[key] = value
        else:
            setattr(config, key, value)
    return config


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(format='%(asctime)s [corrkit]: %(message)s', datefmt='%H:%M',
                        level=logging.DEBUG if args.verbose else logging.INFO,
                        stream=sys.stdout)
    try:
        config = resolve_config(args)
    except ConfigError as e:
        logging.error(f'ConfigError: {e}')
        return cli_functions.EXIT_INVALID
    return cli_functions.run_command(config)


if __name__ == '__main__':
    sys.exit(main())
