import os

# e/(e-1) to 17 significant digits
Z_DEFAULT = 1.5819767068693265

# e/(e+1), the limiting revenue ratio of the shrinkage construction
LIMIT_RATIO = 0.7310585786300049

# Number of d-blocks retained when truncating balanced supports
K_DEFAULT = 3

# Caps, overridable through the environment
INSTANCE_SIZE_CAP = 20000
LP_SIZE_CAP = 1200
ORACLE_NODE_BUDGET = 2_000_000

# The brute-force oracle only accepts tiny grids
ORACLE_MAX_PROFILES = 64
ORACLE_MAX_GRID = 3

# Tolerances
AXIOM_TOLERANCE = 1e-9
PROBABILITY_TOLERANCE = 1e-12
LP_TOLERANCE = 1e-7
PIVOT_TOLERANCE = 1e-9
IDENTITY_TOLERANCE = 1e-12

# Simplex switches to Bland's rule after this many degenerate pivots in a row
BLAND_AFTER_DEGENERATE = 50

# Harmonic sums above this many terms are accumulated in chunks
HARMONIC_CHUNK = 1 << 20

# Samples processed per Monte-Carlo batch
MONTE_CARLO_CHUNK = 100_000

# Significant digits written to sweep CSV files
CSV_SIGNIFICANT_DIGITS = 12

# ShrinkLab file structure
DATA_FILE_PATH = os.path.join(os.getcwd(), 'data')
