"""
Project-wide constants: version, tolerances, exit codes and environment names.
"""

VERSION = "0.1.0"

# Tolerances
SYMPLECTIC_TOL = 1e-10
CIRCUIT_TOL = 1e-8
HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-10
IDENTITY_TOL = 1e-9
UNCERTAINTY_TOL = 1e-9

# Fock oracle tiers
DENSE_LIMIT = 2048
ORACLE_LIMIT = 5_000_000

# Cubature
HEADLINE_TOL = 1e-4
EXPANSION_TOL = 1e-5
CUBATURE_BUDGET = 40_000_000

# Reference values quoted for the one-loop constants
REFERENCE_DELTA_M = -1.36
REFERENCE_PI0 = 0.455
REFERENCE_PI1_INTERCEPT = 0.003
REFERENCE_LOG_COEFFICIENT = 1.0 / (48.0 * 3.141592653589793**2)

# Occupation above which a mode counts as occupied in summary tables
OCCUPIED_THRESHOLD = 1e-3

# Default bound on max_k ||C(k) psi(t)||
CONSTRAINT_EPS = 1e-3

# Exit codes
EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_VALIDATION = 2
EXIT_BUDGET = 3
EXIT_CONFIG = 4

ENV_THREADS = "CVQED_THREADS"
ENV_LOG_LEVEL = "CVQED_LOG_LEVEL"
