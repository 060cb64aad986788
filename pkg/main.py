"""
Main Command Line Module

This is the main entry point of the laboratory. It orchestrates all components:
- Parses the command and the override flags
- Loads and validates the configuration
- Runs the requested report command and prints its summary
- Maps failures to the exit-code contract

Exit codes: 0 success, 2 configuration or validation error, 3 Laplace-domain
error, 4 numerical or statistical failure.
"""

import argparse
import logging
import os
import sys
from typing import Dict, List, Optional

sys.path.append(os.path.join(os.path.dirname(__file__), 'src'))

from src.errors import RankLabError
from src.reports.experiment_runner import COMMANDS, CommandResult, ExperimentConfig, load_config
from selfcheck import cmd_selfcheck


class RankLabCLI:
    """
    Command line application that coordinates configuration, commands and reports
    """

    def __init__(self, args: argparse.Namespace):
        """
        Initialize the application

        Args:
            args (argparse.Namespace): Parsed command line
        """
        self.args = args
        self.setup_logging(args.verbose)
        self.logger = logging.getLogger(__name__)
        self.commands = dict(COMMANDS, selfcheck=cmd_selfcheck)

    def setup_logging(self, verbose: bool = False) -> None:
        """
        Set up logging configuration
        """
        os.makedirs('logs', exist_ok=True)

        logging.basicConfig(
            level=logging.DEBUG if verbose else logging.INFO,
            format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            handlers=[
                logging.FileHandler('logs/ranklab.log'),
                logging.StreamHandler(sys.stderr)
            ]
        )

    def overrides(self) -> Dict[str, object]:
        """
        Command line values that win over the configuration file
        """
        return {
            'seed': self.args.seed,
            'output_dir': self.args.out,
            'strict': True if self.args.strict else None,
            'workers': self.args.workers,
        }

    def load_config(self) -> ExperimentConfig:
        try:
            return load_config(self.args.config, self.overrides())
        except RankLabError as e:
            self.logger.error(f"Error loading configuration: {e}")
            raise

    def run(self) -> int:
        """
        Run the requested command

        Returns:
            int: Process exit code
        """
        command = self.args.command
        try:
            config = self.load_config()
            if command != 'validate':
                check = self.commands['validate'](config)
                if check.exit_code != 0:
                    print(check.summary)
                    return check.exit_code

            self.logger.info(f"Running {command} (seed {config.seed}, output {config.output_dir})")
            result: CommandResult = self.commands[command](config)
            print(result.summary)
            for path in result.files:
                self.logger.info(f"Output: {path}")
            self.logger.info(f"{command} finished with exit code {result.exit_code}")
            return result.exit_code

        except RankLabError as e:
            self.logger.error(f"{command} failed: {e}")
            print(f"error: {e}", file=sys.stderr)
            return e.exit_code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='ranklab',
        description='Stationary laws of rank-based interacting diffusions and their mean-field limit')
    parser.add_argument('command', choices=list(COMMANDS) + ['selfcheck'], help='Report to produce')
    parser.add_argument('--config', default='config/config.json', help='Configuration file (JSON)')
    parser.add_argument('--seed', type=int, default=None, help='Master seed (unsigned 64-bit)')
    parser.add_argument('--out', default=None, help='Output directory')
    parser.add_argument('--strict', action='store_true', help='Reject grid points outside V2 and infeasible rows')
    parser.add_argument('--workers', type=int, default=None, help='Worker processes')
    parser.add_argument('--verbose', action='store_true', help='Debug logging')
    return parser


def main(argv: Optional[List[str]] = None) -> None:
    """
    Main entry point
    """
    args = build_parser().parse_args(argv)
    try:
        app = RankLabCLI(args)
        code = app.run()
    except Exception as e:
        logging.error(f"Fatal error: {e}")
        code = 1
    sys.exit(code)


if __name__ == "__main__":
    main()
