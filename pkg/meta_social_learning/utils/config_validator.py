"""
Configuration loading and validation utilities for meta-social-learning
"""

import copy
import hashlib
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import yaml

from .errors import ConfigurationError


CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "config")
DEFAULTS_PATH = os.path.join(CONFIG_DIR, "defaults.yaml")
SUPPORTED_SCHEMA_VERSIONS = (1,)


@dataclass
class ValidationResult:
    """Result of configuration validation."""
    is_valid: bool
    errors: List[str]
    warnings: List[str]


def resolve_config_path(path: str) -> str:
    """
    Resolve a config-relative path.

    Absolute paths and paths that exist relative to the working directory are
    returned unchanged; anything else is looked up in the packaged config
    directory.
    """
    if os.path.isabs(path) or os.path.exists(path):
        return path
    return os.path.join(CONFIG_DIR, path)


def load_yaml(path: str) -> Dict[str, Any]:
    """
    Load a YAML mapping from disk.

    Raises:
        ConfigurationError: If the file is missing, unparsable or not a mapping
    """
    resolved = resolve_config_path(path)
    if not os.path.exists(resolved):
        raise ConfigurationError(f"Configuration file not found: {path}")
    try:
        with open(resolved, "r") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Invalid YAML syntax in {path}: {e}") from e

    if not isinstance(data, dict):
        raise ConfigurationError(f"Configuration must be a dictionary: {path}")

    version = data.get("schema_version", data.get("format_version", 1))
    if version not in SUPPORTED_SCHEMA_VERSIONS:
        raise ConfigurationError(f"Unsupported schema version {version} in {path}")
    return data


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Return a copy of ``base`` with ``override`` merged in recursively."""
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """
    Load the packaged defaults, merge a user file and explicit overrides.

    Args:
        path: Optional user configuration YAML
        overrides: Optional nested dictionary applied last

    Returns:
        Merged configuration dictionary
    """
    config = load_yaml(DEFAULTS_PATH)
    if path:
        config = deep_merge(config, load_yaml(path))
    if overrides:
        config = deep_merge(config, overrides)
    return config


def config_hash(config: Dict[str, Any]) -> str:
    """Short SHA-256 of the canonical YAML dump of ``config``."""
    canonical = yaml.safe_dump(config, sort_keys=True, default_flow_style=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def _check_probability(section: Dict[str, Any], key: str, name: str, errors: List[str]) -> None:
    value = section.get(key)
    if value is None:
        return
    if not isinstance(value, (int, float)) or not (0.0 <= value <= 1.0):
        errors.append(f"{name}.{key} must be a probability in [0, 1], got {value!r}")


def validate_parameters(config: Dict[str, Any]) -> ValidationResult:
    """
    Validate the parameter ranges of a merged configuration.

    Args:
        config: Merged configuration dictionary

    Returns:
        ValidationResult with validation status and messages
    """
    errors: List[str] = []
    warnings: List[str] = []

    learning = config.get("learning", {})
    beta = learning.get("beta", 0.2)
    if not (0.0 < beta <= 1.0):
        errors.append(f"learning.beta must be in (0, 1], got {beta!r}")
    _check_probability(learning, "epsilon", "learning", errors)
    if learning.get("tau", 1) < 0:
        errors.append("learning.tau must be non-negative")

    context = config.get("context", {})
    if context.get("th_ec", 0.15) <= 0:
        errors.append("context.th_ec must be positive")
    th_u = context.get("th_u", 0.1)
    if not (0.0 < th_u < 1.0):
        errors.append(f"context.th_u must be in (0, 1), got {th_u!r}")
    if context.get("delta", 1) < 1:
        errors.append("context.delta must be at least 1 timestep")

    meta = config.get("meta", {})
    for key in ("rl_epsilon", "ql_epsilon", "ql_alpha", "ql_gamma"):
        _check_probability(meta, key, "meta", errors)
    if meta.get("ucb_c", 1.0) < 0:
        errors.append("meta.ucb_c must be non-negative")
    if meta.get("fcn_activation", "tanh") not in ("tanh", "relu", "sigmoid"):
        errors.append(f"meta.fcn_activation unsupported: {meta.get('fcn_activation')!r}")

    evolution = config.get("evolution", {})
    _check_probability(evolution, "mr", "evolution", errors)
    _check_probability(evolution, "initial_sl_ratio", "evolution", errors)
    if evolution.get("s", 1.0) < 0:
        errors.append("evolution.s must be non-negative")
    for key in ("m", "competition_m"):
        if evolution.get(key, 1) < 1:
            errors.append(f"evolution.{key} must be at least 1")
    if evolution.get("mr", 0.005) > 0.1:
        warnings.append("evolution.mr above 0.1 swamps selection")

    ga = config.get("optimizers", {}).get("ga", {})
    if ga:
        _check_probability(ga, "crossover_prob", "optimizers.ga", errors)
        if ga.get("pop", 50) < max(ga.get("rule_elites", 4), ga.get("fcn_elites", 5)):
            errors.append("optimizers.ga.pop must be at least the number of elites")
    de = config.get("optimizers", {}).get("de", {})
    if de:
        _check_probability(de, "CR", "optimizers.de", errors)
        if de.get("F", 0.5) <= 0:
            errors.append("optimizers.de.F must be positive")
        if de.get("pop", 50) < 4:
            errors.append("optimizers.de.pop must be at least 4 for rand/1")

    harness = config.get("harness", {})
    if harness.get("replicates", 112) < 1:
        errors.append("harness.replicates must be at least 1")
    if harness.get("workers", 1) < 1:
        errors.append("harness.workers must be at least 1")

    return ValidationResult(len(errors) == 0, errors, warnings)


def require_valid(result: ValidationResult, what: str = "Configuration") -> None:
    """Raise ConfigurationError carrying every message of an invalid result."""
    if not result.is_valid:
        raise ConfigurationError(f"{what} validation failed: {'; '.join(result.errors)}")


def validate_output_directory(output_dir: str) -> ValidationResult:
    """
    Validate output directory configuration.

    Args:
        output_dir: Output directory path

    Returns:
        ValidationResult with validation status and messages
    """
    errors = []
    warnings = []

    if not os.path.exists(output_dir):
        try:
            os.makedirs(output_dir, exist_ok=True)
            warnings.append(f"Created output directory: {output_dir}")
        except PermissionError:
            errors.append(f"Permission denied creating directory: {output_dir}")
        except OSError as e:
            errors.append(f"Error creating directory: {e}")

    if os.path.exists(output_dir) and not os.access(output_dir, os.W_OK):
        errors.append(f"No write permission for directory: {output_dir}")

    return ValidationResult(len(errors) == 0, errors, warnings)
