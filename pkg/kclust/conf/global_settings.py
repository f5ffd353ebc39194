"""
Default kclust settings. Override these with settings in the module pointed to
by the KCLUST_SETTINGS_MODULE environment variable.
"""

PROJECT_NAME = "kclust"
PROJECT_VERSION = "0.1.0"

DEBUG = False

DEFAULT_LOG_LEVEL = "WARNING"
USE_FILE_LOG = False

# Solver
DEFAULT_EPS = 0.3
DEFAULT_TRIALS = 7
DEFAULT_SEED = 0

# Enumeration caps
BRUTE_FORCE_CAP = 10**6
EXHAUSTIVE_MAX_CLIENTS = 10

# Baseline local search
BASELINE_SEEDING_ROUNDS = 1
BASELINE_ITERATIONS_PER_K = 200
BASELINE_IMPROVEMENT = 1e-6

# Dynamic program
DP_QUANTUM = 1.0 / 32.0
DP_MAX_STATES = 256
DP_ROOT_CANDIDATES = 16
DP_TRACE_PATH = None

# Diagnostics
MONTE_CARLO_MIN_SEEDS = 100
DIAGNOSTICS_CONSTANT = 10.0
