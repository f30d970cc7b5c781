#!/usr/bin/env python3
"""
Experiment configuration parsing.

Reads a JSON experiment file, applies the FLUCTLAB_SEED override and
validates the result into an ExperimentConfig. Relative channel and
protocol paths are resolved against the config file's directory.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, TextIO, Union

from pydantic import ValidationError

from contracts import ConfigError, ExperimentConfig, ReportIOError

logger = logging.getLogger(__name__)

ConfigSource = Union[str, Path, TextIO]


def _location(loc) -> str:
    return ".".join(str(part) for part in loc) or "<root>"


def _clean_message(message: str) -> str:
    prefix = "Value error, "
    return message[len(prefix):] if message.startswith(prefix) else message


def _resolve_paths(doc: Dict[str, Any], base_dir: Path) -> None:
    for section in ("channel", "protocol"):
        entry = doc.get(section)
        if isinstance(entry, dict) and isinstance(entry.get("path"), str):
            path = Path(entry["path"])
            if not path.is_absolute():
                entry["path"] = str(base_dir / path)


def config_from_dict(doc: Any, env_seed: Optional[int] = None) -> ExperimentConfig:
    """
    Validate a decoded config document.

    Args:
        doc: decoded JSON
        env_seed: seed taking precedence over the document's seed

    Raises:
        ConfigError: first offending field, with its location in context
    """
    if not isinstance(doc, dict):
        raise ConfigError(
            "experiment config must be a JSON object",
            error_code="CONFIG_NOT_OBJECT",
            context={"location": "<root>"},
        )
    if env_seed is not None:
        logger.info(f"Seed {env_seed} from FLUCTLAB_SEED overrides config seed {doc.get('seed')}")
        doc = {**doc, "seed": env_seed}

    try:
        return ExperimentConfig.model_validate(doc)
    except ValidationError as exc:
        first = exc.errors()[0]
        location = _location(first["loc"])
        message = _clean_message(first["msg"])
        raise ConfigError(
            f"{location}: {message}",
            error_code="CONFIG_INVALID",
            context={"location": location, "error_count": exc.error_count()},
        ) from exc


def parse_config(source: ConfigSource, env_seed: Optional[int] = None) -> ExperimentConfig:
    """
    Parse an experiment config from a path or an open text stream.

    Raises:
        ConfigError: malformed JSON or failed validation
        ReportIOError: the file cannot be read
    """
    base_dir = None
    if isinstance(source, (str, Path)):
        path = Path(source)
        base_dir = path.resolve().parent
        try:
            text = path.read_text(encoding='utf-8')
        except OSError as exc:
            raise ReportIOError(
                f"cannot read config {path}: {exc}",
                error_code="READ_FAILED",
                context={"path": str(path)},
            ) from exc
        name = str(path)
    else:
        text = source.read()
        name = getattr(source, "name", "<stream>")

    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{name}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}",
            error_code="CONFIG_MALFORMED_JSON",
            context={"location": f"line {exc.lineno}, column {exc.colno}"},
        ) from exc

    if base_dir is not None and isinstance(doc, dict):
        _resolve_paths(doc, base_dir)

    config = config_from_dict(doc, env_seed)
    logger.debug(f"Parsed {config.experiment.value} config from {name}")
    return config
