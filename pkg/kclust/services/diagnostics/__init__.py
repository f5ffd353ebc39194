from .checks import CHECKS, ROW_FIELDS, SUMMARY_FIELDS, run_check
from .monte_carlo import monte_carlo, monte_carlo_columns, seed_range
from .structure import build_mapping, build_optprime, build_sstar, check_small_distortion
