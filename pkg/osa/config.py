"""
Runtime configuration for the opportunistic-access toolkit.
Values come from the environment (optionally a .env file) with sane defaults.
"""

import os
import sys
import logging
from dotenv import load_dotenv

load_dotenv()

# Absolute tolerance for probability comparisons
PROB_TOL = 1e-12

# Exact DP guards: C(N,k)·2^k action-outcome branches per level, horizon length
MAX_ACTION_BRANCHES = 4096
MAX_EXACT_HORIZON = 8

# Truncated infinite-horizon evaluation
MAX_TRUNCATION_STEPS = int(os.getenv('OSA_MAX_TRUNCATION_STEPS', '20000'))
MAX_REACHABLE_STATES = int(os.getenv('OSA_MAX_STATES', '200000'))

# Deviation audit
DEFAULT_LATTICE_DEPTH = 6
DEFAULT_AUDIT_EPSILON = 1e-7

# Monte Carlo: replications per generator stream
SIM_BLOCK_SIZE = int(os.getenv('OSA_SIM_BLOCK', '4096'))

LOG_LEVEL = os.getenv('OSA_LOG_LEVEL', 'INFO')


def worker_count() -> int:
    """Worker cap from OSA_THREADS, defaulting to machine parallelism."""
    raw = os.getenv('OSA_THREADS', '').strip()
    if not raw:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"OSA_THREADS must be an integer, got '{raw}'")
    if value < 1:
        raise ValueError(f"OSA_THREADS must be >= 1, got {value}")
    return value


def setup_logging(level: str = None):
    """Configure root logging for command-line runs."""
    logging.basicConfig(
        level=getattr(logging, (level or LOG_LEVEL).upper(), logging.INFO),
        format='%(asctime)s - %(levelname)s - %(message)s',
        handlers=[
            logging.StreamHandler(sys.stdout)
        ]
    )
