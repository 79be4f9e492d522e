"""
Utility modules for meta-social-learning

This module provides logging, configuration validation, error types and the
run audit log.
"""

from .logging_config import setup_logging, get_logger, format_seeds, log_duration
from .config_validator import (
    ValidationResult,
    load_config,
    load_yaml,
    deep_merge,
    config_hash,
    resolve_config_path,
    validate_parameters,
    validate_output_directory,
    require_valid,
)
from .errors import ConfigurationError, NumericError, NotYetObservable
from .run_audit import RunAuditLogger

__all__ = [
    "setup_logging",
    "get_logger",
    "format_seeds",
    "log_duration",
    "ValidationResult",
    "load_config",
    "load_yaml",
    "deep_merge",
    "config_hash",
    "resolve_config_path",
    "validate_parameters",
    "validate_output_directory",
    "require_valid",
    "ConfigurationError",
    "NumericError",
    "NotYetObservable",
    "RunAuditLogger",
]
