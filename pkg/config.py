"""
Central configuration utilities for paths and environment-driven settings.

Numerical tolerances, iteration budgets and seeds all default to the values
below and can be overridden through BLOCKRANK_* environment variables (a
.env file is honored once load_dotenv() has run in the entry point).
"""

import os
from dataclasses import dataclass
from pathlib import Path

from errors import InvalidArgument


DEFAULT_RANK_RTOL = 1e-10
DEFAULT_DS_TOL = 1e-8
DEFAULT_COLLINEAR_TOL = 1e-8
DEFAULT_MAX_ITER = 10000
DEFAULT_SEED = 0
DEFAULT_HEURISTIC_SAMPLES = 10000
DEFAULT_LOG_FACTOR_CEILING = 1e6
DEFAULT_ENUMERATION_CAP = 10 ** 7


def get_project_root() -> Path:
    return Path(__file__).resolve().parent


def get_reports_dir() -> str:
    """
    Resolve the reports directory using the BLOCKRANK_REPORTS_DIR environment
    variable, defaulting to <project_root>/reports.
    Ensures the directory exists.
    """
    reports_dir = os.getenv("BLOCKRANK_REPORTS_DIR")
    if not reports_dir:
        reports_dir = str(get_project_root() / "reports")
    os.makedirs(reports_dir, exist_ok=True)
    return reports_dir


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = float(raw)
    except ValueError:
        raise InvalidArgument(f"{name} must be a number, got {raw!r}")
    if not value > 0:
        raise InvalidArgument(f"{name} must be positive, got {raw!r}")
    return value


def _env_int(name: str, default: int, minimum: int = 0) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(float(raw))
    except ValueError:
        raise InvalidArgument(f"{name} must be an integer, got {raw!r}")
    if value < minimum:
        raise InvalidArgument(f"{name} must be at least {minimum}, got {raw!r}")
    return value


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared by the CLI pipelines."""

    rank_rtol: float = DEFAULT_RANK_RTOL
    ds_tol: float = DEFAULT_DS_TOL
    collinear_tol: float = DEFAULT_COLLINEAR_TOL
    max_iter: int = DEFAULT_MAX_ITER
    seed: int = DEFAULT_SEED
    heuristic_samples: int = DEFAULT_HEURISTIC_SAMPLES
    log_factor_ceiling: float = DEFAULT_LOG_FACTOR_CEILING
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP


def get_tolerances() -> Tolerances:
    """Build the tolerance record from BLOCKRANK_* environment variables."""
    return Tolerances(
        rank_rtol=_env_float("BLOCKRANK_RANK_RTOL", DEFAULT_RANK_RTOL),
        ds_tol=_env_float("BLOCKRANK_DS_TOL", DEFAULT_DS_TOL),
        collinear_tol=_env_float("BLOCKRANK_COLLINEAR_TOL", DEFAULT_COLLINEAR_TOL),
        max_iter=_env_int("BLOCKRANK_MAX_ITER", DEFAULT_MAX_ITER, minimum=1),
        seed=_env_int("BLOCKRANK_SEED", DEFAULT_SEED),
        heuristic_samples=_env_int("BLOCKRANK_HEURISTIC_SAMPLES", DEFAULT_HEURISTIC_SAMPLES, minimum=1),
        log_factor_ceiling=_env_float("BLOCKRANK_LOG_FACTOR_CEILING", DEFAULT_LOG_FACTOR_CEILING),
        enumeration_cap=_env_int("BLOCKRANK_ENUMERATION_CAP", DEFAULT_ENUMERATION_CAP, minimum=1),
    )


def is_verbose() -> bool:
    return os.getenv("BLOCKRANK_VERBOSE", "0").strip().lower() in ("1", "true", "yes")
