"""
Run configuration for the lab commands.

A run config is a flat ``key=value`` file (same syntax as a ``.env`` file,
parsed by python-decouple's ``RepositoryEnv``) whose keys must all belong to
the command's schema. Command-line flags override file values.
"""

import logging
import os
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional

from decouple import Csv, RepositoryEnv, strtobool
from django.conf import settings

logger = logging.getLogger(__name__)


class RunConfigError(Exception):
    """Invalid or unknown run configuration entry"""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


def to_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    return bool(strtobool(str(value)))


def float_list(value):
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    return Csv(cast=float)(value)


def int_list(value):
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    return Csv(cast=int)(value)


def str_list(value):
    if isinstance(value, (list, tuple)):
        return [str(v) for v in value]
    return Csv()(value)


@dataclass(frozen=True)
class Param:
    cast: Callable[[Any], Any]
    default: Any = None
    help: str = ''


def load_run_config(
    schema: Dict[str, Param],
    path: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
    base: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    """
    Merge schema defaults, base values (a named preset), a config file and
    CLI overrides, in that order.

    Raises:
        RunConfigError: unknown key, unreadable file, or a value that fails its cast
    """
    values = {key: param.default for key, param in schema.items()}
    for key, value in (base or {}).items():
        if key not in schema:
            raise RunConfigError(f"Unknown config key: {key}", key=key)
        values[key] = _cast(schema[key], key, value)

    if path:
        if not os.path.isfile(path):
            raise RunConfigError(f"Config file not found: {path}")
        repository = RepositoryEnv(path)
        unknown = sorted(set(repository.data) - set(schema))
        if unknown:
            raise RunConfigError(f"Unknown config keys: {', '.join(unknown)}", key=unknown[0])
        for key in repository.data:
            values[key] = _cast(schema[key], key, repository[key])
        logger.debug(f"Loaded {len(repository.data)} config entries from {path}")

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in schema:
            raise RunConfigError(f"Unknown config key: {key}", key=key)
        values[key] = _cast(schema[key], key, value)

    return values


def _cast(param: Param, key: str, raw):
    try:
        return param.cast(raw)
    except (TypeError, ValueError) as e:
        raise RunConfigError(f"Invalid value for '{key}': {raw!r} ({e})", key=key) from e


def resolve_base_seed(cli_seed=None, config_seed=None) -> int:
    """--seed beats the LRL1_SEED environment variable, which beats the config file."""
    if cli_seed is not None:
        return int(cli_seed)
    if settings.LRL1_SEED is not None:
        return int(settings.LRL1_SEED)
    if config_seed is not None:
        return int(config_seed)
    return 0
