# Constants used throughout the pruning pipeline
import numpy as np

# Register limits
MAX_QUBITS = 14
MAX_DENSE_QUBITS = 12
MAX_LOCAL_QUBITS = 4
MIN_HEA_QUBITS = 2

# Numerical tolerances
UNITARY_TOL = 1e-10
UNITARY_INPUT_TOL = 1e-8
ANTI_HERMITIAN_TOL = 1e-10
HERMITIAN_TOL = 1e-8
NORM_TOL = 1e-8
COEFF_CUTOFF = 1e-12
IMAG_RESIDUE_TOL = 1e-10
BRANCH_TOL = 1e-6
ZERO_SENSITIVITY = 1e-12
COMMUTING_TOL = 1e-12

# Gradients
PARAM_SHIFT = np.pi / 2
FD_STEP = 1e-4

# Pruning defaults
DEFAULT_EPSILON = 0.05
DEFAULT_ETA_CAP = 0.5
DEFAULT_BATCH_SIZE = 16
DEFAULT_MAX_NEIGHBORS = 5
DEFAULT_REDUCTION = "dominant"

# Frozen calibration constants (safety factor already applied)
SAFETY_FACTOR = 2.0
DEFAULT_C1 = 1.6
DEFAULT_C2 = 1.1
# distance error stays below 0.7 eta on the default lemma sweep, where delta_x >= 0.1
DEFAULT_LEMMA_C = 8.0
LEMMA_MIN_SLOPE = 0.9

# Fine-tuning defaults
DEFAULT_STEPS = 200
DEFAULT_LEARNING_RATE = 0.05
DEFAULT_OPTIMIZER = "adam"

# Environment
THREADS_ENV = "LIEPRUNE_THREADS"

# Exit codes
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_ACCEPTANCE = 3

PAULI_LETTERS = "IXYZ"
OPTIMIZER_NOT_FOUND_MSG = (
    "Check if you have used the decorator @register_optimizer to register your optimizer!"
)
