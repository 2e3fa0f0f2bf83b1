# config.py
from __future__ import annotations

import os
import logging
from dataclasses import dataclass, field
from typing import List

from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger("SpinorMetrology")

# Dense three-mode oracles grow as (N+1)(N+2)/2; keep them small.
ORACLE_MAX_N = int(os.getenv("SPINOR_ORACLE_MAX_N", "20"))

# --- State and propagation tolerances ---
NORM_TOLERANCE = float(os.getenv("SPINOR_NORM_TOLERANCE", "1e-12"))
NORM_DRIFT_BUDGET = float(os.getenv("SPINOR_NORM_DRIFT_BUDGET", "1e-8"))
LOCAL_TOLERANCE = float(os.getenv("SPINOR_LOCAL_TOLERANCE", "1e-10"))
STEP_SAFETY = float(os.getenv("SPINOR_STEP_SAFETY", "0.5"))
PROPAGATOR_METHOD = os.getenv("SPINOR_PROPAGATOR", "chebyshev").lower()

# --- Metrology / estimation ---
DEGENERACY_RTOL = float(os.getenv("SPINOR_DEGENERACY_RTOL", "1e-9"))
PROBABILITY_FLOOR = float(os.getenv("SPINOR_PROBABILITY_FLOOR", "1e-300"))
SINGULAR_DP_THRESHOLD = float(os.getenv("SPINOR_SINGULAR_DP", "1e-8"))
PEAK_GOLDEN_TOL = float(os.getenv("SPINOR_PEAK_GOLDEN_TOL", "1e-6"))
SIGMA_MAX_XTOL = float(os.getenv("SPINOR_SIGMA_MAX_XTOL", "1e-3"))

# Analytic parametric predictions are flagged once <N±> exceeds this fraction of N.
BOGOLIUBOV_VALIDITY_FRACTION = float(os.getenv("SPINOR_BOGOLIUBOV_FRACTION", "0.01"))

# --- Husimi grid (theta rows, phi columns) ---
HUSIMI_THETA_POINTS = int(os.getenv("SPINOR_HUSIMI_THETA", "181"))
HUSIMI_PHI_POINTS = int(os.getenv("SPINOR_HUSIMI_PHI", "361"))

# --- Runtime ---
DEFAULT_JOBS = int(os.getenv("SPINOR_JOBS", "1"))
OUTPUT_DIR = os.getenv("SPINOR_OUTPUT_DIR", "results")
LOG_LEVEL = os.getenv("SPINOR_LOG_LEVEL", "INFO").upper()
CHECKPOINT_NAME = os.getenv("SPINOR_CHECKPOINT_NAME", "checkpoint.sqlite")
WRITE_HTML_REPORT = os.getenv("SPINOR_WRITE_HTML_REPORT", "False").lower() == "true"

MANIFEST_SCHEMA_VERSION = 1
LIBRARY_VERSION = "1.0.0"

UNITS = {
    "energy": "q_c",
    "time": "hbar/q_c",
    "lambda": "-q_c/(2N)",
    "hbar": 1,
}


def _parse_float_list(val: str | None, fallback: List[float]) -> List[float]:
    """Parse a comma-separated float list from the environment; bad entries are dropped."""
    if not val:
        return list(fallback)

    values: List[float] = []
    for raw in val.split(","):
        raw = raw.strip()
        if not raw:
            continue
        try:
            values.append(float(raw))
        except ValueError:
            logger.warning(f"Ignoring malformed grid entry '{raw}'.")
    if not values:
        logger.warning("Grid override contained no usable values; using defaults.")
        return list(fallback)
    return values


@dataclass
class SweepDefaults:
    """Grid defaults for the command-line recipes."""
    q_min: float = -2.0
    q_max: float = 2.0
    q_steps: int = 401
    ramp_samples: int = 201
    ramp_q_values: List[float] = field(default_factory=lambda: _parse_float_list(
        os.getenv("SPINOR_RAMP_Q"), [0.1]))
    sigma_grid: List[float] = field(default_factory=lambda: _parse_float_list(
        os.getenv("SPINOR_SIGMA_GRID"), [0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0]))
    theta_points: int = 241
    theta_min: float = 1e-4
    quench_samples: int = 301
    quench_t_final: float = 30.0
    ramp_q_start: float = 1.5
    system_size: int = 500


SWEEP_DEFAULTS = SweepDefaults()
