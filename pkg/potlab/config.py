"""
Runtime settings for potlab.
Values come from the environment (or a .env file next to the working directory).
"""

import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Parallelism
POTLAB_THREADS = int(os.getenv("POTLAB_THREADS", str(os.cpu_count() or 1)))

# 1D quadrature
POTLAB_QUAD_TOL = float(os.getenv("POTLAB_QUAD_TOL", "1e-10"))
POTLAB_QUAD_CAP = float(os.getenv("POTLAB_QUAD_CAP", "1e12"))
QUAD_GRADING_DEPTH = 200  # geometric panels toward a singular endpoint
QUAD_PANEL_LIMIT = 500    # adaptive bisections on smooth stretches

# Grid solver
POTLAB_GRAD_TOL = float(os.getenv("POTLAB_GRAD_TOL", "1e-8"))
POTLAB_MAX_ITER = int(os.getenv("POTLAB_MAX_ITER", "100000"))
REGULARIZATION_EPS = 1e-8  # (|grad u|^2 + eps^2) smoothing for p < 2

# Trend and experiment verdicts
POTLAB_TREND_RHO = float(os.getenv("POTLAB_TREND_RHO", "0.8"))
TREND_PLATEAU = 0.05  # relative change counted as "stabilized"

# Randomized probes
POTLAB_SEED = int(os.getenv("POTLAB_SEED", "0"))

# Progress bars on refinement chains
POTLAB_PROGRESS = os.getenv("POTLAB_PROGRESS", "0") not in ("0", "", "false", "False")

RESULTS_DIR = os.getenv("POTLAB_RESULTS_DIR", "results")
