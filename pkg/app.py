"""
NHArray - Non-Hermitian Resonator Array Simulator
Main Application Entry Point
"""

import argparse
import logging
import os
import sys

from dotenv import load_dotenv

from src.services.config_service import (
    FIGURE_PRESETS, apply_overrides, default_out_dir, load_config, preset_config
)
from src.services.experiment_service import EXIT_CONFIG, EXIT_IO, run_experiment
from src.utils.errors import ConfigError
from src.utils.validators import COMMANDS, OUTPUT_FORMATS

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"


def setup_logging(level: str):
    handlers = [logging.StreamHandler()]
    log_file = os.getenv('NHARRAY_LOG_FILE')
    if log_file:
        handlers.append(logging.FileHandler(log_file, encoding='utf-8'))
    logging.basicConfig(level=level.upper(), format=LOG_FORMAT, handlers=handlers, force=True)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--out', help='output directory')
    common.add_argument('--format', choices=OUTPUT_FORMATS, help='csv or csv+svg')
    common.add_argument('--tol', type=float, help='zero-mode tolerance')
    common.add_argument('--jobs', type=int, help='worker threads for sweeps and scans')
    common.add_argument('--log-level', default=None, help='DEBUG, INFO, WARNING, ERROR')

    parser = argparse.ArgumentParser(
        prog='nharray',
        description='Non-Hermitian coupled resonator array: spectra, evolution and drive scans'
    )
    commands = parser.add_subparsers(dest='command', required=True)

    for command in COMMANDS:
        sub = commands.add_parser(command, parents=[common], help=f"run the {command} command")
        sub.add_argument('--config', required=True, help='JSON experiment document')

    reproduce = commands.add_parser('reproduce', parents=[common], help='run a figure preset')
    reproduce.add_argument('figure', choices=sorted(FIGURE_PRESETS, key=lambda name: int(name[3:])))

    return parser


def load_experiment(args):
    """Config for the parsed arguments with command-line overrides applied."""
    if args.command == 'reproduce':
        config = preset_config(args.figure)
        out = args.out or os.path.join(default_out_dir(), args.figure)
        return apply_overrides(config, tol=args.tol, out=out, formats=args.format)

    config = load_config(args.config)
    command = args.command
    # A robustness document runs through the evolve subcommand
    if command == 'evolve' and config.run.command == 'robustness':
        command = None
    return apply_overrides(config, command=command, tol=args.tol, out=args.out, formats=args.format)


def main(argv=None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level or os.getenv('NHARRAY_LOG_LEVEL', 'INFO'))

    try:
        config = load_experiment(args)
    except ConfigError as e:
        where = f" (line {e.line}, column {e.column})" if e.line is not None else ''
        for message in e.errors:
            print(f"config error{where}: {message}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"cannot read config: {e}", file=sys.stderr)
        return EXIT_IO

    result = run_experiment(config, jobs=args.jobs)
    if not result['success']:
        print(f"error: {result['error']}", file=sys.stderr)
        return result['exit_code']

    print(f"{len(result['files'])} file(s) written to {config.output.directory}")
    return result['exit_code']


if __name__ == '__main__':
    sys.exit(main())
