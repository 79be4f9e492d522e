"""
Logging configuration for meta-social-learning

Console and optional file logging shared by the CLI, the API and the
long-running simulation loops.
"""

import logging
import os
import sys
import time
from contextlib import contextmanager
from typing import Iterator, Optional, Sequence


DEFAULT_FORMAT = (
    "%(asctime)s - %(name)s - %(levelname)s - "
    "%(filename)s:%(lineno)d - %(message)s"
)

# Third-party loggers that flood DEBUG output while plots are written
NOISY_LOGGERS = ("matplotlib", "PIL")


def _level(level: str) -> int:
    return getattr(logging, level.upper(), logging.INFO)


def setup_logging(
    level: str = "INFO",
    format_string: Optional[str] = None,
    filename: Optional[str] = None,
    quiet_loggers: Sequence[str] = NOISY_LOGGERS
) -> None:
    """
    Configure logging for the application.

    Replaces the handlers of the root logger, so calling it again (as the CLI
    and the tests do) changes level and targets instead of stacking handlers.

    Args:
        level: Log level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        format_string: Custom log format string
        filename: Optional log file path; its directory is created
        quiet_loggers: Loggers held at WARNING regardless of ``level``
    """
    numeric_level = _level(level)
    formatter = logging.Formatter(format_string or DEFAULT_FORMAT)

    console_handler = logging.StreamHandler(sys.stdout)
    handlers = [console_handler]

    if filename:
        try:
            directory = os.path.dirname(filename)
            if directory:
                os.makedirs(directory, exist_ok=True)
            handlers.append(logging.FileHandler(filename))
        except OSError as e:
            # Console only
            numeric_level = max(numeric_level, logging.WARNING)
            logging.getLogger(__name__).warning(f"Failed to setup file logging: {e}")

    root_logger = logging.getLogger()
    root_logger.setLevel(numeric_level)
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)
        handler.close()
    for handler in handlers:
        handler.setLevel(numeric_level)
        handler.setFormatter(formatter)
        root_logger.addHandler(handler)

    for name in quiet_loggers:
        logging.getLogger(name).setLevel(max(numeric_level, logging.WARNING))


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)


@contextmanager
def log_duration(logger: logging.Logger, what: str, level: int = logging.INFO) -> Iterator[None]:
    """
    Log the wall-clock time of a block once it finishes.

    Example:
        >>> with log_duration(logger, "experiment1"):
        ...     run()
    """
    start = time.perf_counter()
    try:
        yield
    finally:
        logger.log(level, f"{what} took {time.perf_counter() - start:.2f}s")


def format_seeds(seeds, limit: int = 6) -> str:
    """
    Render a seed list compactly for log lines.

    Args:
        seeds: Iterable of integer seeds
        limit: Number of seeds shown before eliding the rest

    Returns:
        Comma separated seeds, with a count suffix when elided
    """
    seeds = [int(s) for s in seeds]
    if len(seeds) <= limit:
        return ", ".join(str(s) for s in seeds)
    shown = ", ".join(str(s) for s in seeds[:limit])
    return f"{shown}, ... ({len(seeds)} seeds)"
