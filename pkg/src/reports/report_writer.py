"""
Report Writer Module

This module handles the files a command leaves in its output directory:
- CSV tables with the configuration hash echoed in every row
- Sample dumps with '#'-prefixed metadata header lines
- A metadata JSON with wall time and the list of written files

CSV content depends only on the configuration and seed; wall time lives in
the metadata file so that reruns produce byte-identical tables.
"""

import json
import logging
import os
import time
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

FLOAT_FORMAT = '%.17g'


class ReportWriter:
    """
    Collects the outputs of one command run
    """

    def __init__(self, output_dir: str, command: str, config_hash: str):
        """
        Args:
            output_dir (str): Directory owned by the command for its duration
            command (str): Command name, used for the metadata file
            config_hash (str): Hash echoed in every CSV row
        """
        self.output_dir = output_dir
        self.command = command
        self.config_hash = config_hash
        self.files: List[str] = []
        self.logger = logging.getLogger(__name__)
        self._started = time.perf_counter()

        os.makedirs(output_dir, exist_ok=True)

    def path(self, filename: str) -> str:
        return os.path.join(self.output_dir, filename)

    def write_table(self, filename: str, rows: Sequence[Dict[str, Any]],
                    columns: Optional[Sequence[str]] = None) -> pd.DataFrame:
        """
        Write rows as CSV with a trailing config_hash column

        Args:
            filename (str): File name inside the output directory
            rows (Sequence[Dict[str, Any]]): One dict per row
            columns (Optional[Sequence[str]]): Column order; inferred from the rows when omitted

        Returns:
            pd.DataFrame: The written table
        """
        frame = pd.DataFrame(list(rows), columns=list(columns) if columns else None)
        frame['config_hash'] = self.config_hash
        target = self.path(filename)
        try:
            frame.to_csv(target, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
        except OSError as e:
            self.logger.error(f"Error writing {target}: {e}")
            raise
        self.files.append(target)
        self.logger.info(f"Wrote {len(frame)} rows to {target}")
        return frame

    def write_dump(self, filename: str, frame: pd.DataFrame, header: Dict[str, Any]) -> str:
        """
        Write a sample dump preceded by '# key: value' metadata lines

        Args:
            filename (str): File name inside the output directory
            frame (pd.DataFrame): One row per draw or retained state
            header (Dict[str, Any]): Metadata such as seed, step and model hash

        Returns:
            str: Path of the written file
        """
        target = self.path(filename)
        try:
            with open(target, 'w', newline='') as f:
                for key, value in header.items():
                    f.write(f"# {key}: {value}\n")
                f.write(f"# config_hash: {self.config_hash}\n")
                frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
        except OSError as e:
            self.logger.error(f"Error writing {target}: {e}")
            raise
        self.files.append(target)
        self.logger.info(f"Wrote {len(frame)} draws to {target}")
        return target

    def register(self, target: str) -> None:
        """
        Record a file produced by another writer (figures)
        """
        self.files.append(target)

    def write_metadata(self, extra: Optional[Dict[str, Any]] = None) -> str:
        """
        Write <command>_metadata.json with wall time and file list
        """
        metadata = {
            'command': self.command,
            'config_hash': self.config_hash,
            'wall_time_seconds': round(time.perf_counter() - self._started, 3),
            'files': [os.path.basename(f) for f in self.files],
        }
        metadata.update(extra or {})
        target = self.path(f"{self.command}_metadata.json")
        try:
            with open(target, 'w') as f:
                json.dump(metadata, f, indent=2, default=str)
        except OSError as e:
            self.logger.error(f"Error writing metadata: {e}")
            raise
        self.logger.debug(f"Metadata saved to {target}")
        return target
