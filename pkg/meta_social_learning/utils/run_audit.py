"""
Audit logging for simulation runs, training and report emission
"""

import logging
from typing import Iterable, Optional

from .logging_config import format_seeds


class RunAuditLogger:
    """Audit trail of what was run, with which seeds and configuration."""

    def __init__(self, log_file: Optional[str] = None):
        """
        Initialize audit logger.

        Args:
            log_file: Optional file path for audit logs
        """
        self.logger = logging.getLogger("meta_social_learning.audit")

        if log_file:
            handler = logging.FileHandler(log_file)
            formatter = logging.Formatter(
                '%(asctime)s - AUDIT - %(levelname)s - %(message)s'
            )
            handler.setFormatter(formatter)
            self.logger.addHandler(handler)
            self.logger.setLevel(logging.INFO)

    def log_run_start(self, experiment: str, config_hash: str, seeds: Iterable[int]) -> None:
        """Log the start of an experiment."""
        self.logger.info(
            f"Run started - Experiment: {experiment}, Config: {config_hash}, "
            f"Seeds: {format_seeds(seeds)}"
        )

    def log_run_complete(self, experiment: str, config_hash: str, replicates: int) -> None:
        """Log a completed experiment."""
        self.logger.info(
            f"Run complete - Experiment: {experiment}, Config: {config_hash}, "
            f"Replicates: {replicates}"
        )

    def log_run_failure(self, experiment: str, error: str) -> None:
        """Log a failed experiment."""
        self.logger.warning(f"Run failed - Experiment: {experiment}, Error: {error}")

    def log_training(self, space: str, algo: str, run: int, best_fitness: float, generations: int) -> None:
        """Log one finished controller training run."""
        self.logger.info(
            f"Training run finished - Space: {space}, Algorithm: {algo}, Run: {run}, "
            f"Best fitness: {best_fitness:.6f}, Generations: {generations}"
        )

    def log_report(self, output_dir: str, files: int) -> None:
        """Log report emission."""
        self.logger.info(f"Report written - Directory: {output_dir}, Files: {files}")
