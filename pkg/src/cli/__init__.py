"""
Metaclust - Command Line Interface
==================================
"""

from .config import RunConfig, load_run_config, parse_run_config
from .main import build_parser, main
from .selfcheck import SelfCheckReport, StageReport, run_selfcheck

__all__ = [
    'RunConfig',
    'load_run_config',
    'parse_run_config',
    'build_parser',
    'main',
    'SelfCheckReport',
    'StageReport',
    'run_selfcheck',
]
