"""Constants and configuration values for sqc-smoother.

Centralizes tolerances, defaults, and file-format details.
"""

# Relative singular-value threshold for Moore-Penrose pseudo-inverses
PINV_RTOL = 1e-12

# Absolute slack added to the level in membership tests
MEMBERSHIP_SLACK = 1e-12

# Central finite differences: h_i = max(FD_MIN_STEP, FD_REL_STEP * |x_i|)
FD_MIN_STEP = 1e-6
FD_REL_STEP = 1e-6

# Symmetry tolerance used when validating weight matrices
SYMMETRY_TOL = 1e-10

# Newton inversion of the forward Euler step: |alpha(z) - x| <= NEWTON_TOL * (1 + |x|)
NEWTON_TOL = 1e-12
NEWTON_MAX_ITERATIONS = 50

# Admissible-noise generation
NOISE_MAX_ATTEMPTS = 20
NOISE_MAX_BISECTIONS = 200
NOISE_MAX_EXPANSIONS = 60
NOISE_REL_TOL = 1e-9

# Scenario defaults
DEFAULT_TARGET_FRACTION = 0.8
DEFAULT_RUNS = 1
DEFAULT_DELTA = 0.1
DEFAULT_SEED = 0

# Riccati variants for the forward filter
RICCATI_FORMS = ("derived", "sigma-output")
RICCATI_FORM_ALIASES = {"paper-literal": "sigma-output"}

# Output files
RECORDS_FILENAME = "records.csv"
SUMMARY_FILENAME = "summary.json"
SAMPLES_FILENAME = "set_samples.csv"
MAX_SAMPLE_DIMENSION = 2

# Floats are written with 17 significant digits
FLOAT_FORMAT = ".17g"

# CLI exit codes
EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4
