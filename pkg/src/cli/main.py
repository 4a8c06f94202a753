"""
Command-line dispatch for the face quality toolkit.

Exit statuses: 0 on success, 2 for usage or configuration errors (including
missing input paths), 1 for any other failure.
"""
import argparse
import json
import logging
from dataclasses import replace
from typing import Any, Dict, List, Optional, Sequence

from config.settings import LOG_LEVEL
from ..models.run_config import VALID_BACKEND_KINDS, VALID_MODES, BackendConfig, ConfigError, RunConfig
from .commands import COMMANDS, cmd_report

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', metavar='PATH', help='JSON run configuration')
    common.add_argument('--seed', type=int, help='global seed')
    common.add_argument('--out', metavar='DIR', help='output directory')
    common.add_argument('--mode', choices=VALID_MODES, help='training augmentation mode')
    common.add_argument('--attacks', metavar='LIST', help='comma-separated evaluation attacks')
    common.add_argument('--backend', choices=VALID_BACKEND_KINDS, help='recognition backend kind')
    common.add_argument('--oracle-check', action='store_true',
                        help='compare SGD heads with the closed-form ridge fit')
    common.add_argument('--k', type=int, help='faces forwarded per track')

    parser = argparse.ArgumentParser(prog='fqa', description='Face quality assessment toolkit')
    subparsers = parser.add_subparsers(dest='command', required=True)
    subparsers.add_parser('synth', parents=[common], help='write the synthetic desk dataset')
    subparsers.add_parser('augment', parents=[common], help='augment and label training crops')
    subparsers.add_parser('train-head', parents=[common], help='train quality heads')
    subparsers.add_parser('eval', parents=[common], help='attack evaluation and correlation report')
    subparsers.add_parser('pipeline-sim', parents=[common], help='simulate the edge pipeline')
    report = subparsers.add_parser('report', parents=[common], help='re-render report CSVs')
    report.add_argument('--report', metavar='PATH', help='report.json (default <out>/eval/report.json)')
    return parser


def parse_attacks(value: Optional[str]) -> Optional[List[str]]:
    if value is None:
        return None
    attacks = [name.strip() for name in value.split(',') if name.strip()]
    if not attacks:
        raise ConfigError("--attacks must name at least one attack")
    return attacks


def load_config(args: argparse.Namespace) -> RunConfig:
    """
    Effective config: file values, then flag overrides.

    Raises:
        ConfigError: On an invalid file or flag combination
    """
    overrides: Dict[str, Any] = {
        'seed': args.seed,
        'output_dir': args.out,
        'mode': args.mode,
        'attacks': parse_attacks(args.attacks),
        'oracle_check': True if args.oracle_check else None,
    }
    config = RunConfig.load(args.config, overrides)

    try:
        if args.k is not None:
            config = replace(config, pipeline=replace(config.pipeline, k=args.k))
        if args.backend is not None:
            backends = tuple(b for b in config.backends if b.kind == args.backend)
            if not backends:
                if args.backend != 'oracle':
                    raise ConfigError("--backend precomputed needs a precomputed backend with an "
                                      "archive in the config file")
                backends = (BackendConfig(),)
            config = replace(config, backends=backends)
    except ValueError as e:
        raise ConfigError(f"Invalid config: {str(e)}")
    return config


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments, run one command and map failures to exit statuses.

    Returns:
        Process exit status
    """
    logging.basicConfig(level=LOG_LEVEL, format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE

    try:
        config = load_config(args)
        logger.info(f"Running {args.command} (config {config.config_hash()[:12]}, seed {config.seed})")
        if args.command == 'report':
            summary = cmd_report(config, args.report)
        else:
            summary = COMMANDS[args.command](config)
    except ConfigError as e:
        logger.error(f"{args.command}: {str(e)}")
        return EXIT_USAGE
    except Exception as e:
        logger.error(f"{args.command} failed: {str(e)}")
        return EXIT_FAILURE

    print(json.dumps(summary, indent=2, sort_keys=True, default=str))
    return EXIT_OK
