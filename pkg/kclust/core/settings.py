"""
Configuration settings loaded from environment variables
for the kclust solver and its diagnostics harness.
"""

import os
from pathlib import Path
from typing import Optional

from utils import bool_from_str, get_env, positive_float, positive_int

# -----------------------------------------------------------------------------
# Base project settings
# -----------------------------------------------------------------------------
DEBUG: bool = bool_from_str(get_env("DEBUG", "f"))

BASE_DIR: Path = Path(__file__).resolve().parent.parent

PROJECT_NAME: str = get_env("PROJECT_NAME", "kclust")
PROJECT_VERSION: str = get_env("PROJECT_VERSION", "0.1.0")


# -----------------------------------------------------------------------------
# Logging
# -----------------------------------------------------------------------------
USE_FILE_LOG: bool = bool_from_str(get_env("USE_FILE_LOG", "f"))

LOG_FILE_PATH: str = get_env("LOG_FILE_PATH", f"/tmp/{PROJECT_NAME}.log")

LOG_FORMAT: str = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | "
    "<level>{level: <8}</level> | <cyan>{extra[name]}</cyan>:"
    "<cyan>{function}</cyan>:<cyan>{line}</cyan> - "
    "<level>{message}</level>"
)

# stdout carries the command results, so the default keeps the log quiet.
DEFAULT_LOG_LEVEL: str = get_env("DEFAULT_LOG_LEVEL", "WARNING")


# -----------------------------------------------------------------------------
# Concurrency
# -----------------------------------------------------------------------------
KCLUST_THREADS: int = positive_int(
    get_env("KCLUST_THREADS", os.cpu_count() or 1), strict=True
)


# -----------------------------------------------------------------------------
# Solver defaults
# -----------------------------------------------------------------------------
DEFAULT_EPS: float = positive_float(get_env("DEFAULT_EPS", "0.3"), upper=1.0)
DEFAULT_TRIALS: int = positive_int(get_env("DEFAULT_TRIALS", "7"), strict=True)
DEFAULT_SEED: int = positive_int(get_env("DEFAULT_SEED", "0"))

BRUTE_FORCE_CAP: int = positive_int(
    get_env("BRUTE_FORCE_CAP", str(10**6)), strict=True
)
EXHAUSTIVE_MAX_CLIENTS: int = positive_int(
    get_env("EXHAUSTIVE_MAX_CLIENTS", "10"), strict=True
)


# -----------------------------------------------------------------------------
# Baseline (D^z seeding + single-swap local search)
# -----------------------------------------------------------------------------
BASELINE_SEEDING_ROUNDS: int = positive_int(
    get_env("BASELINE_SEEDING_ROUNDS", "1"), strict=True
)
BASELINE_ITERATIONS_PER_K: int = positive_int(
    get_env("BASELINE_ITERATIONS_PER_K", "200"), strict=True
)
BASELINE_IMPROVEMENT: float = positive_float(
    get_env("BASELINE_IMPROVEMENT", "1e-6")
)


# -----------------------------------------------------------------------------
# Portal dynamic program
# -----------------------------------------------------------------------------
DP_QUANTUM: float = positive_float(get_env("DP_QUANTUM", str(1.0 / 32.0)))
DP_MAX_STATES: int = positive_int(get_env("DP_MAX_STATES", "256"), strict=True)
DP_ROOT_CANDIDATES: int = positive_int(
    get_env("DP_ROOT_CANDIDATES", "16"), strict=True
)
DP_TRACE_PATH: Optional[str] = get_env("DP_TRACE_PATH", None)


# -----------------------------------------------------------------------------
# Diagnostics
# -----------------------------------------------------------------------------
MONTE_CARLO_MIN_SEEDS: int = positive_int(
    get_env("MONTE_CARLO_MIN_SEEDS", "100"), strict=True
)
# Tolerance C of the fitted-constant checks (budget total and S* cost).
DIAGNOSTICS_CONSTANT: float = positive_float(get_env("DIAGNOSTICS_CONSTANT", "10"))
