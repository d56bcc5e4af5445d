import sys
import logging
import argparse

import numpy as np

from romes_closure.errors import ConfigError, RomesError
from romes_closure.runners.runner import RunnerROMES
from romes_closure.utils.config import load_config, validate_config


EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def build_parser():
    parser = argparse.ArgumentParser(prog='romes', description='ROMES error-model experiments')
    sub = parser.add_subparsers(dest='command', required=True)
    for name, text in (('run', 'offline training, online validation and metric tables'),
                       ('pareto', 'error/cost Pareto study over the configured grid')):
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument('config', type=str, help='experiment config (.json, .yaml or .yml)')
        cmd.add_argument('--seed-override', type=int, default=None, help='shift every seed by this offset')
        cmd.add_argument('--out', type=str, default=None, help='output directory')
        cmd.add_argument('--quiet', action='store_true', help='warnings only, no progress bars')
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logger = logging.getLogger('romes')
    try:
        cfg = load_config(args.config)
        if args.seed_override is not None:
            cfg = cfg.with_seed_offset(args.seed_override)
        if args.out is not None:
            cfg = cfg.replace(output_dir=args.out)
        cfg = validate_config(cfg)
    except ConfigError as e:
        print(f'config error: {e}', file=sys.stderr)
        return EXIT_CONFIG
    try:
        runner = RunnerROMES(cfg, quiet=args.quiet)
        if args.command == 'run':
            runner.run()
        else:
            runner.pareto()
    except ConfigError as e:
        print(f'config error: {e}', file=sys.stderr)
        return EXIT_CONFIG
    except (RomesError, FloatingPointError, np.linalg.LinAlgError) as e:
        logger.error(str(e))
        print(f'numerical failure: {e}', file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
