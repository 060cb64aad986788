"""
Report commands, CSV writers and figures
"""

from .experiment_runner import COMMANDS, CommandResult, ExperimentConfig, build_config, load_config
from .report_writer import ReportWriter

__all__ = ['COMMANDS', 'CommandResult', 'ExperimentConfig', 'ReportWriter', 'build_config', 'load_config']
