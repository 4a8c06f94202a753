"""
Command-line entry points: synth, augment, train-head, eval, pipeline-sim, report.
"""

from .commands import (
    COMMANDS,
    build_backend,
    cmd_augment,
    cmd_eval,
    cmd_pipeline_sim,
    cmd_report,
    cmd_synth,
    cmd_train_head,
    prepare_manifest
)

from .main import build_parser, load_config, main

__all__ = [
    'COMMANDS',
    'build_backend',
    'cmd_augment',
    'cmd_eval',
    'cmd_pipeline_sim',
    'cmd_report',
    'cmd_synth',
    'cmd_train_head',
    'prepare_manifest',
    'build_parser',
    'load_config',
    'main'
]
