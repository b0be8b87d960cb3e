"""
Simulation Configuration File
Numerical defaults for adiamag. A run's JSON config overrides the
per-run values (tolerances, grid, sweep); the guards below always apply.
"""

# ================================
# Units
# ================================
# Natural units hbar = m = c = 1; configs give (omega_c, omega, a, T).
HBAR = 1.0
DEFAULT_MASS = 1.0

# ================================
# Integration tolerances
# ================================
ODE_TOL = 1e-10            # relative tolerance of the dynamics integrations
QUAD_TOL = 1e-8            # accepted spread of alpha over initial states
FRAME_TOL = 1e-11          # relative tolerance of the parallel-transport integration
MAX_TOL = 1e-2             # largest tolerance a config may request
ODE_METHOD = "DOP853"      # embedded Dormand-Prince 8(5,3) pair
MAX_RHS_EVALS = 20_000_000 # step budget, counted in right-hand-side evaluations

# ================================
# Geometry
# ================================
UNIT_TOL = 1e-12           # |n(s)| = 1 after renormalization
CLOSURE_TOL = 1e-9         # |n(1) - n(0)| below this -> closed path
GRID_POINTS = 4001         # samples of s in [0, 1]; odd for Simpson
SOLID_ANGLE_SAMPLES = 65537
SIGMA_FD_STEP = 1e-4       # centered difference step in s for sigma'
GRAM_SCHMIDT_FALLBACK = 0.9  # use y-hat when |n(0).x-hat| exceeds this

# ================================
# Magnetic translations
# ================================
ORACLE_SEGMENTS = 10_000   # chords of the path-ordered product

# ================================
# Dynamics
# ================================
RESONANCE_GUARD = 1e-3     # reject |omega - omega_c| / omega below this
SYMPLECTIC_TOL = 1e-7      # ||S^T J S - J||_F acceptance
SAMPLES_PER_PERIOD = 16    # time samples per fastest period for phase quadratures
TRAJECTORY_SAMPLES = 2001  # rows of trajectory.csv

# ================================
# Convergence sweeps
# ================================
MIN_SWEEP_POINTS = 3
ORDER_WINDOW = (0.8, 1.2)  # accepted observed order in epsilon
ERROR_FLOOR = 1e-14        # metrics below this are treated as identically zero
SWEEP_WORKERS = 1          # process pool size for sweep entries

# ================================
# Outputs
# ================================
SUMMARY_FILE = "summary.json"
TRAJECTORY_FILE = "trajectory.csv"
FRAMES_FILE = "frames.csv"
SWEEP_FILE = "sweep.json"
LOG_FILE = "adiamag.log"

# Debugging
VERBOSE_MODE = False       # DEBUG logging from the library modules
