"""

Constants for GAAM

Contains the constant values used throughout the package: numerical
tolerances, default run settings, file-format markers and output defaults.

License: BSD 3-Clause

"""

#
# IMPORTS
#
from typing import Dict, List, Tuple


#
# CONSTANTS
#
DEFAULT_CONFIG_NAME: str = "default"
DEFAULT_OUTPUT_ROOT: str = "gaam_runs"
OUTPUT_ROOT_ENVVAR: str = "GAAM_OUTPUT_ROOT"

# Extremization of h(r) = (1 + r^alpha) / (1 + r^2)^(alpha/2)
EXTREMUM_SCAN_POINTS: int = 4096
EXTREMUM_LOG_RANGE: Tuple[float, float] = (-6.0, 6.0)
EXTREMUM_TOL: float = 1e-12

# Certificates
DIVFREE_TOL: float = 1e-10
CHECK_REL_TOL: float = 1e-9
ENERGY_TOL: float = 1e-3
GRAM_DET_MIN: float = 1e-14
ORTHONORMAL_TOL: float = 1e-10

# Solvers
STATIONARY_TOL: float = 1e-10
STATIONARY_MAX_ITER: int = 500
DEFAULT_SMALLNESS_C: float = 1.0
DEFAULT_EPS_SCHEDULE: List[float] = [2.0 ** (-i) for i in range(0, 21)] + [0.0]

# Time stepping
BLOWUP_FACTOR: float = 1e3
PHI_SERIES_CUTOFF: float = 1e-4

# Singleton collapse
COLLAPSE_TOL: float = 1e-6
COLLAPSE_STARTS: int = 5
# collapse runs last COLLAPSE_TIME_SCALE / gamma unless verify.collapse_t_end is set
COLLAPSE_TIME_SCALE: float = 10.0

# Default spectrum of random fields: |u(k)| ~ (1 + |k|^2)^exponent
RANDOM_SPECTRUM_EXPONENT: float = -2.0

# Checkpoint format
CHECKPOINT_MAGIC: bytes = b"GAAM1"
CHECKPOINT_VERSION: int = 1

# Trajectory tables
CSV_FLOAT_FORMAT: str = ".17g"
TRAJECTORY_COLUMNS: List[str] = [
    "step", "t", "norm_sq_beta", "norm_sq_delta", "norm_sq_alpha_beta",
    "energy_residual", "grad_l52"
]
REFERENCE_COLUMNS: List[str] = ["dist_strong", "dist_weak"]

# Exit status contract
EXIT_OK: int = 0
EXIT_CHECK_FAILED: int = 1
EXIT_USAGE: int = 2
EXIT_NUMERICAL: int = 3

VERIFY_SUITES: List[str] = ["energy", "absorbing", "decay", "lyapunov", "dimension"]

# Named special cases of the model: (alpha, beta)
MODEL_PRESETS: Dict[str, Tuple[float, float]] = {
    "bardina": (2.0, 2.0),
    "leray_alpha_critical": (2.0, 0.5),
    "fractional_ns": (1.5, 0.0),
    "damped_ns": (2.0, 0.0),
}

# Thresholds on alpha + beta
UNIQUENESS_THRESHOLD: float = 2.5
STABILITY_THRESHOLD: float = 2.0

# Output file names inside a run directory
TRAJECTORY_FILE: str = "trajectory"
FINAL_CHECKPOINT_FILE: str = "final.gaam"
STATIONARY_CHECKPOINT_FILE: str = "stationary.gaam"
STATIONARY_REPORT_FILE: str = "stationary.yaml"
STATIONARY_FAILURE_FILE: str = "stationary_failure.yaml"
RUN_CONFIG_FILE: str = "config.yaml"
SWEEP_TABLE_FILE: str = "sweep"
SWEEP_REPORT_FILE: str = "sweep.yaml"

# Tangent consistency check: perturbation sizes and accepted log-log slope
TAYLOR_STEPS: Tuple[float, ...] = (1e-2, 1e-3, 1e-4, 1e-5)
TAYLOR_SLOPE_RANGE: Tuple[float, float] = (1.9, 2.1)
