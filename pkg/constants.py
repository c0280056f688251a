"""
GB2D - Constants and Presets

Centralized constants for numeric defaults, enumerations, exit codes and the
experiment preset table.
"""

from enum import Enum, IntEnum


class Defaults:
    """Default values for generation, solving, localization and recovery"""

    # Solver (ADMM)
    MAX_ITERS = 50000
    EPS_ABS = 1e-7
    EPS_REL = 1e-6
    ADMM_RHO = 1.0
    OVER_RELAXATION = 1.6
    ADAPT_EVERY = 50           # iterations between penalty updates
    ADAPT_RATIO = 10.0         # residual imbalance triggering a penalty update
    STATIONARY_WINDOW = 100    # iterations for the objective stationarity test
    MONOTONE_WINDOW = 500      # iterations per residual-trend diagnostic window
    LOG_EVERY = 1000
    DIVERGENCE_LIMIT = 1e12
    RUIZ_MAX_PASSES = 20
    RUIZ_TOL = 1e-3            # stop once every scaled row max is within this of one

    # Localization
    GRID_FACTOR = 16           # grid size = GRID_FACTOR * N
    PEAK_THRESHOLD = 1.0 - 1e-3
    MERGE_FACTOR = 0.5         # merge radius = MERGE_FACTOR / N
    NEWTON_MAX_ITERS = 20
    NEWTON_TOL = 1e-12
    FEASIBILITY_TOL = 1e-4

    # Certificate
    CERT_TOL = 1e-2
    CERT_GRID_FACTOR = 32
    CERT_EXCLUSION = 0.5       # exclusion radius = CERT_EXCLUSION / N

    # Recovery
    SUCCESS_DELAY_TOL = 1e-3   # wrap distance for a delay to count as recovered

    # Generation
    MAX_REJECTION_ROUNDS = 10 ** 6
    UNIT_NORM_TOL = 1e-12

    # Files
    OUTPUT_DIRECTORY = 'gb2d_out'
    LOG_FILE = 'gb2d.log'
    RESULT_FILE = 'result.json'
    SOLUTION_FILE = 'solution.json'
    SCENARIO_FILE = 'scenario.json'
    CURVE_FILE = 'dual_poly.csv'
    SUPPORT_FILE = 'support.csv'
    POLAR_FILE = 'polar.csv'
    SWEEP_FILE = 'sweep.csv'
    SWEEP_RUNS_FILE = 'sweep_runs.csv'
    RECOVERY_FILE = 'recovery.json'


class SensingMode(Enum):
    """How the sensing matrix D is built"""
    IDENTITY = "identity"
    UNIFORM_SUBSAMPLE = "uniform_subsample"


class AmplitudeDist(Enum):
    """Channel amplitude distributions"""
    COMPLEX_GAUSSIAN = "complex_gaussian"
    UNIT_MODULUS_RANDOM_PHASE = "unit_modulus_random_phase"


class MessageMode(Enum):
    """Message distributions"""
    UNIT_SPHERE_COMPLEX = "unit_sphere_complex"
    UNIT_SPHERE_POSITIVE = "unit_sphere_positive"


class SolverStatus(Enum):
    """Normalized solver outcome shared by every backend"""
    OPTIMAL = "optimal"
    MAX_ITERS = "max_iters"
    INFEASIBLE_SUSPECT = "infeasible_suspect"


class AlignConvention(Enum):
    """Phase conventions for resolving the message/amplitude ambiguity"""
    POSITIVITY = "positivity"
    ORACLE = "oracle"


class ExitCode(IntEnum):
    """Process exit codes of the command line tool"""
    OK = 0
    IO_OR_USAGE = 1
    VALIDATION = 2
    SOLVER_NON_OPTIMAL = 3
    NOT_CERTIFIED = 4


# Experiment presets. Top-level entries are the desk-size defaults; "full" entries
# override them when --paper-scale is given.
PRESETS = {
    'fig2': {
        'description': 'Dual polynomial peaks, K=2, P=(2,1), M_k=5',
        'n_samples': 64,
        'path_counts': [2, 1],
        'message_sizes': [5, 5],
        'sensing_mode': SensingMode.IDENTITY.value,
        'message_mode': MessageMode.UNIT_SPHERE_COMPLEX.value,
        'n_values': [32, 64],
        'full': {'n_samples': 64},
    },
    'fig3a': {
        'description': 'Four users, three paths each, M_k=5',
        'n_samples': 100,
        'path_counts': [3, 3, 3, 3],
        'message_sizes': [5, 5, 5, 5],
        'sensing_mode': SensingMode.IDENTITY.value,
        'message_mode': MessageMode.UNIT_SPHERE_COMPLEX.value,
        'n_values': [64, 100],
        'full': {'n_samples': 200, 'n_values': [128, 200]},
    },
    'fig3b-text': {
        'description': 'Three users, message sizes (3,2,1), three paths each',
        'n_samples': 64,
        'path_counts': [3, 3, 3],
        'message_sizes': [3, 2, 1],
        'sensing_mode': SensingMode.IDENTITY.value,
        'message_mode': MessageMode.UNIT_SPHERE_COMPLEX.value,
        'n_values': [32, 64],
        'full': {'n_samples': 128, 'n_values': [64, 128]},
    },
    'fig3b-caption': {
        'description': 'Three users, path counts (3,2,1), M_k=5',
        'n_samples': 64,
        'path_counts': [3, 2, 1],
        'message_sizes': [5, 5, 5],
        'sensing_mode': SensingMode.IDENTITY.value,
        'message_mode': MessageMode.UNIT_SPHERE_COMPLEX.value,
        'n_values': [32, 64],
        'full': {'n_samples': 128, 'n_values': [64, 128]},
    },
    'fig3c': {
        'description': 'Large messages M_k=16 behind a half-rate subsampler',
        'n_samples': 64,
        'path_counts': [2, 1],
        'message_sizes': [16, 16],
        'sensing_mode': SensingMode.UNIFORM_SUBSAMPLE.value,
        'sensing_rows': 32,
        'message_mode': MessageMode.UNIT_SPHERE_COMPLEX.value,
        'n_values': [64],
        'full': {'n_samples': 128, 'sensing_rows': 64, 'n_values': [128]},
    },
    'fig4': {
        'description': 'Message MSE versus N, two positive messages of size 4, P_k=5',
        'n_samples': 64,
        'path_counts': [5, 5],
        'message_sizes': [4, 4],
        'sensing_mode': SensingMode.IDENTITY.value,
        'message_mode': MessageMode.UNIT_SPHERE_POSITIVE.value,
        'n_values': [16, 32, 64],
        'full': {'n_values': [16, 32, 64, 128]},
    },
    'fig4-alt': {
        'description': 'Message MSE versus N, messages of size 16, P=(2,3)',
        'n_samples': 128,
        'path_counts': [2, 3],
        'message_sizes': [16, 16],
        'sensing_mode': SensingMode.IDENTITY.value,
        'message_mode': MessageMode.UNIT_SPHERE_COMPLEX.value,
        'n_values': [64, 128],
        'full': {'n_values': [64, 128, 256]},
    },
    'minimal': {
        'description': 'Smallest end-to-end instance, N=8, one path',
        'n_samples': 8,
        'path_counts': [1],
        'message_sizes': [1],
        'sensing_mode': SensingMode.IDENTITY.value,
        'message_mode': MessageMode.UNIT_SPHERE_COMPLEX.value,
        'n_values': [8, 16],
        'full': {},
    },
}
