#!/usr/bin/env python3
"""
Run environment for fluctlab

Process-wide knobs that sit outside any single experiment config: where
reports land, the seed override, the composite-dimension cap and the default
worker count. Values come from FLUCTLAB_* variables (optionally seeded from a
project .env file) and fall back to built-in defaults.

Usage:
    from utils.environment_config import get_or_create_env_config

    env = get_or_create_env_config()
    jobs = args.jobs or env.default_jobs
"""

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

logger = logging.getLogger(__name__)

DEFAULT_MAX_COMPOSITE_DIM = 256
DEFAULT_JOBS = 1

PROJECT_MARKERS = ('.git', 'pyproject.toml')


@dataclass
class EnvironmentConfig:
    """
    Settings read once per process.

    FLUCTLAB_SEED replaces the master seed of every config; FLUCTLAB_MAX_DIM
    caps tensor-product dimensions; FLUCTLAB_OUTPUT_DIR and FLUCTLAB_LOG_DIR
    place reports and run logs; FLUCTLAB_JOBS sets the worker count when
    --jobs is absent.
    """
    project_root: Path
    output_dir: Path
    log_dir: Optional[Path] = None  # None: run log sits beside its report

    max_composite_dim: int = DEFAULT_MAX_COMPOSITE_DIM
    seed_override: Optional[int] = None
    default_jobs: int = DEFAULT_JOBS

    def __post_init__(self):
        self.project_root = Path(self.project_root)
        self.output_dir = Path(self.output_dir)
        if self.log_dir is not None:
            self.log_dir = Path(self.log_dir)

    def validate(self) -> List[str]:
        """Problems with the numeric settings, one message each."""
        problems = []
        if self.max_composite_dim < 1:
            problems.append(f"FLUCTLAB_MAX_DIM must be positive: {self.max_composite_dim}")
        if self.default_jobs < 1:
            problems.append(f"FLUCTLAB_JOBS must be positive: {self.default_jobs}")
        if self.seed_override is not None and not 0 <= self.seed_override < 2**64:
            problems.append(f"FLUCTLAB_SEED must be a 64-bit unsigned integer: {self.seed_override}")
        return problems


def find_project_root(start: Optional[Path] = None) -> Path:
    """Nearest ancestor holding a project marker or the package directories; else `start`."""
    start = Path.cwd() if start is None else Path(start)
    for candidate in (start, *start.parents):
        if any((candidate / marker).exists() for marker in PROJECT_MARKERS):
            return candidate
        if (candidate / 'quantum').is_dir() and (candidate / 'processors').is_dir():
            return candidate
    return start


def _int_from_env(name: str, default: Optional[int]) -> Optional[int]:
    """Integer from the environment; blank counts as unset."""
    raw = os.getenv(name, '').strip()
    if not raw:
        return default
    try:
        return int(raw, 0)
    except ValueError:
        logger.warning(f"Ignoring non-integer {name}={raw!r}")
        return default


def _path_from_env(name: str) -> Optional[Path]:
    raw = os.getenv(name, '').strip()
    return Path(raw) if raw else None


def _read_dotenv(project_root: Path) -> None:
    env_file = project_root / '.env'
    if not env_file.exists():
        return
    try:
        from dotenv import load_dotenv
    except ImportError:
        logger.debug(f"python-dotenv missing; {env_file} not read")
        return
    load_dotenv(env_file)
    logger.info(f"Read environment overrides from {env_file}")


def get_env_config(project_root: Optional[Path] = None, use_dotenv: bool = True) -> EnvironmentConfig:
    """
    Build the environment settings from scratch.

    Args:
        project_root: Root to resolve defaults against (detected when omitted)
        use_dotenv: Read <project_root>/.env before the process environment

    Returns:
        EnvironmentConfig
    """
    root = find_project_root() if project_root is None else Path(project_root)
    if use_dotenv:
        _read_dotenv(root)

    env = EnvironmentConfig(
        project_root=root,
        output_dir=_path_from_env('FLUCTLAB_OUTPUT_DIR') or root / 'runs',
        log_dir=_path_from_env('FLUCTLAB_LOG_DIR'),
        max_composite_dim=_int_from_env('FLUCTLAB_MAX_DIM', DEFAULT_MAX_COMPOSITE_DIM),
        seed_override=_int_from_env('FLUCTLAB_SEED', None),
        default_jobs=_int_from_env('FLUCTLAB_JOBS', DEFAULT_JOBS),
    )
    logger.debug(
        f"fluctlab environment: root={env.project_root} output={env.output_dir} "
        f"logs={env.log_dir or '(beside report)'} max_dim={env.max_composite_dim} "
        f"seed={env.seed_override} jobs={env.default_jobs}"
    )
    return env


_ENV_CONFIG: Optional[EnvironmentConfig] = None


def get_or_create_env_config() -> EnvironmentConfig:
    """Process-wide settings, loaded on first use."""
    global _ENV_CONFIG
    if _ENV_CONFIG is None:
        _ENV_CONFIG = get_env_config()
    return _ENV_CONFIG


def reset_env_config() -> None:
    """Forget the cached settings so the next call re-reads the environment."""
    global _ENV_CONFIG
    _ENV_CONFIG = None
