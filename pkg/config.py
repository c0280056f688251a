"""
GB2D - Configuration and Validation

Configuration dataclasses, validation helpers and the layered loaders
(defaults < .env < config file < command line flags).
"""

import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml
from dotenv import load_dotenv

from constants import (
    AmplitudeDist,
    Defaults,
    MessageMode,
    PRESETS,
    SensingMode,
)


def validate_positive(value: float, name: str) -> float:
    """
    Validate a strictly positive number

    @param value - Number to validate
    @param name - Field name for error messages
    @returns The value as float
    @throws ValueError - If value is not a positive finite number

    @example
    validate_positive(1e-7, "eps_abs")
    """
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a number, got {value!r}")
    if not number > 0 or number == float('inf'):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return number


def validate_count_list(values: List[int], name: str, minimum: int = 1) -> List[int]:
    """
    Validate a list of integer counts (path counts, message sizes)

    @param values - Counts to validate
    @param name - Field name for error messages
    @param minimum - Smallest allowed count
    @returns List of ints
    @throws ValueError - If the list is empty or any count is below minimum
    """
    if not values:
        raise ValueError(f"{name} must be a non-empty list")
    counts = [int(v) for v in values]
    for count in counts:
        if count < minimum:
            raise ValueError(f"{name} entries must be >= {minimum}, got {count}")
    return counts


def _enum_value(enum_cls, value):
    if isinstance(value, enum_cls):
        return value
    try:
        return enum_cls(value)
    except ValueError:
        choices = ', '.join(member.value for member in enum_cls)
        raise ValueError(f"invalid {enum_cls.__name__} {value!r}; expected one of: {choices}")


@dataclass
class GenConfig:
    """
    Random scenario generation settings

    @param n_samples - Number of frequency samples N
    @param path_counts - P_k per user (its length is the user count K)
    @param message_sizes - M_k per user
    @param sensing_mode - identity or uniform_subsample
    @param sensing_rows - M for uniform_subsample (ignored for identity)
    @param amplitude_dist - complex_gaussian or unit_modulus_random_phase
    @param message_mode - unit_sphere_complex or unit_sphere_positive
    @param min_separation - Minimum wrap-around delay separation (default 1/N)
    @param seed - 64-bit generation seed
    @param cross_user_separation - Enforce separation across users too

    @example
    cfg = GenConfig(n_samples=64, path_counts=[2, 1], message_sizes=[5, 5], seed=3)
    """
    n_samples: int
    path_counts: List[int]
    message_sizes: List[int]
    sensing_mode: SensingMode = SensingMode.IDENTITY
    sensing_rows: Optional[int] = None
    amplitude_dist: AmplitudeDist = AmplitudeDist.COMPLEX_GAUSSIAN
    message_mode: MessageMode = MessageMode.UNIT_SPHERE_COMPLEX
    min_separation: Optional[float] = None
    seed: int = 0
    cross_user_separation: bool = True

    def __post_init__(self) -> None:
        """
        Validate and normalize generation settings

        @throws ValueError - If any value is invalid or the separation is infeasible
        """
        self.n_samples = int(self.n_samples)
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")

        self.path_counts = validate_count_list(self.path_counts, "path_counts")
        self.message_sizes = validate_count_list(self.message_sizes, "message_sizes")
        if len(self.path_counts) != len(self.message_sizes):
            raise ValueError(
                f"path_counts ({len(self.path_counts)}) and message_sizes "
                f"({len(self.message_sizes)}) must have one entry per user"
            )
        if max(self.message_sizes) > self.n_samples:
            raise ValueError(f"message sizes must not exceed N={self.n_samples}")

        self.sensing_mode = _enum_value(SensingMode, self.sensing_mode)
        self.amplitude_dist = _enum_value(AmplitudeDist, self.amplitude_dist)
        self.message_mode = _enum_value(MessageMode, self.message_mode)

        if self.sensing_mode is SensingMode.UNIFORM_SUBSAMPLE:
            if self.sensing_rows is None:
                raise ValueError("sensing_rows is required for uniform_subsample sensing")
            self.sensing_rows = int(self.sensing_rows)
            if not (1 <= self.sensing_rows <= self.n_samples):
                raise ValueError(f"sensing_rows must lie in [1, N={self.n_samples}], got {self.sensing_rows}")
        else:
            self.sensing_rows = None

        if self.min_separation is None:
            self.min_separation = 1.0 / self.n_samples
        self.min_separation = validate_positive(self.min_separation, "min_separation")
        if self.min_separation > 1.0 / max(max(self.path_counts), 2):
            raise ValueError(
                f"min_separation {self.min_separation:.6g} exceeds the feasibility guard "
                f"1/max(P_k, 2) = {1.0 / max(max(self.path_counts), 2):.6g}"
            )
        crowded = sum(self.path_counts) if self.cross_user_separation else max(self.path_counts)
        if crowded * self.min_separation >= 1.0:
            raise ValueError(
                f"{crowded} delays cannot be separated by {self.min_separation:.6g} on the unit circle"
            )

        self.seed = int(self.seed) & 0xFFFFFFFFFFFFFFFF

    @property
    def user_count(self) -> int:
        return len(self.path_counts)

    def with_overrides(self, **changes) -> 'GenConfig':
        """Copy with some fields replaced (min_separation is reset with N unless given)"""
        values = self.to_dict()
        if 'n_samples' in changes and 'min_separation' not in changes:
            values['min_separation'] = None
        values.update(changes)
        return GenConfig(**values)

    def to_dict(self) -> Dict[str, Any]:
        values = asdict(self)
        for key in ('sensing_mode', 'amplitude_dist', 'message_mode'):
            values[key] = getattr(self, key).value
        return values


@dataclass
class SolverOptions:
    """
    ADMM settings for the dual SDP

    @param max_iters - Iteration cap
    @param eps_abs - Absolute tolerance
    @param eps_rel - Relative tolerance
    @param admm_rho - Initial penalty
    @param adaptive_rho - Residual balancing of the penalty
    @param over_relaxation - Relaxation factor alpha in [1, 2)
    @param verbose - Log progress every log_every iterations at DEBUG level
    @param workers - Threads used for per-block eigendecompositions
    @param warm_start - Accept a previous DualSolution as initial point
    @param collapse_common_codebook - Use one PSD block when all codebooks agree
    @param backend - Registered backend name
    """
    max_iters: int = Defaults.MAX_ITERS
    eps_abs: float = Defaults.EPS_ABS
    eps_rel: float = Defaults.EPS_REL
    admm_rho: float = Defaults.ADMM_RHO
    adaptive_rho: bool = True
    over_relaxation: float = Defaults.OVER_RELAXATION
    verbose: bool = False
    log_every: int = Defaults.LOG_EVERY
    workers: int = 1
    warm_start: bool = True
    collapse_common_codebook: bool = True
    backend: str = 'admm'

    def __post_init__(self) -> None:
        self.max_iters = int(self.max_iters)
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        self.eps_abs = validate_positive(self.eps_abs, "eps_abs")
        self.eps_rel = validate_positive(self.eps_rel, "eps_rel")
        self.admm_rho = validate_positive(self.admm_rho, "admm_rho")
        self.over_relaxation = float(self.over_relaxation)
        if not (1.0 <= self.over_relaxation < 2.0):
            raise ValueError(f"over_relaxation must lie in [1, 2), got {self.over_relaxation}")
        self.workers = max(1, int(self.workers))
        self.log_every = max(1, int(self.log_every))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class LocalizeOptions:
    """Peak detection settings for the dual polynomials"""
    grid_factor: int = Defaults.GRID_FACTOR
    threshold: float = Defaults.PEAK_THRESHOLD
    merge_factor: float = Defaults.MERGE_FACTOR
    expected_paths: Optional[List[int]] = None
    feasibility_tol: float = Defaults.FEASIBILITY_TOL

    def __post_init__(self) -> None:
        self.grid_factor = int(self.grid_factor)
        if self.grid_factor < 4:
            raise ValueError(f"grid_factor must be >= 4 (grid of at least 4N points), got {self.grid_factor}")
        self.threshold = validate_positive(self.threshold, "threshold")
        self.merge_factor = validate_positive(self.merge_factor, "merge_factor")
        if self.expected_paths is not None:
            self.expected_paths = validate_count_list(self.expected_paths, "expected_paths")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class ExperimentConfig:
    """
    Fully resolved experiment description used by the pipeline engine

    @param gen - Generation settings of the base scenario
    @param solver - Solver options
    @param localize - Localization options
    @param out_dir - Output directory
    @param repetitions - Repetitions per configuration point
    @param seeds - Explicit per-repetition seeds (default: gen.seed + index)
    @param n_values - N values for sweeps
    @param preset - Preset name the config was resolved from, if any
    @param paper_scale - Whether the preset was resolved at published sizes
    @param cert_tol - Tolerance for the on-support certificate condition
    """
    gen: GenConfig
    solver: SolverOptions = field(default_factory=SolverOptions)
    localize: LocalizeOptions = field(default_factory=LocalizeOptions)
    out_dir: str = Defaults.OUTPUT_DIRECTORY
    repetitions: int = 1
    seeds: Optional[List[int]] = None
    n_values: Optional[List[int]] = None
    preset: Optional[str] = None
    paper_scale: bool = False
    cert_tol: float = Defaults.CERT_TOL

    def __post_init__(self) -> None:
        self.repetitions = int(self.repetitions)
        if self.repetitions < 1:
            raise ValueError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.seeds is not None:
            self.seeds = [int(seed) for seed in self.seeds]
            if len(self.seeds) < self.repetitions:
                raise ValueError(f"{len(self.seeds)} seeds given for {self.repetitions} repetitions")
        if self.n_values is not None:
            self.n_values = validate_count_list(self.n_values, "n_values")
        self.cert_tol = validate_positive(self.cert_tol, "cert_tol")

    def repetition_seeds(self) -> List[int]:
        """Seeds of every repetition; shared across N values in sweeps (paired design)"""
        if self.seeds is not None:
            return self.seeds[:self.repetitions]
        return [self.gen.seed + index for index in range(self.repetitions)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'preset': self.preset,
            'paper_scale': self.paper_scale,
            'gen': self.gen.to_dict(),
            'solver': self.solver.to_dict(),
            'localize': self.localize.to_dict(),
            'out_dir': self.out_dir,
            'repetitions': self.repetitions,
            'seeds': self.repetition_seeds(),
            'n_values': self.n_values,
            'cert_tol': self.cert_tol,
        }


# ========================================
# Loaders
# ========================================

def resolve_preset(name: str, paper_scale: bool = False, seed: int = 0) -> Dict[str, Any]:
    """
    Resolve a preset name into GenConfig keyword arguments plus sweep N values

    @param name - Preset name (see constants.PRESETS)
    @param paper_scale - Restore the published problem sizes
    @param seed - Generation seed
    @returns Dict with 'gen' (GenConfig kwargs) and 'n_values'
    @throws ValueError - If the preset does not exist

    @example
    resolve_preset('fig3a', paper_scale=True)['gen']['n_samples']  # 200
    """
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    preset = dict(PRESETS[name])
    if paper_scale:
        preset.update(preset.get('full', {}))

    gen = {
        'n_samples': preset['n_samples'],
        'path_counts': list(preset['path_counts']),
        'message_sizes': list(preset['message_sizes']),
        'sensing_mode': preset['sensing_mode'],
        'sensing_rows': preset.get('sensing_rows'),
        'message_mode': preset['message_mode'],
        'seed': seed,
    }
    return {'gen': gen, 'n_values': list(preset['n_values'])}


def load_env_overrides() -> Dict[str, Any]:
    """
    Load GB2D_* settings from the environment (and a .env file if present)

    @returns Dict with optional keys out_dir, log_file, log_level, max_iters,
             eps_abs, eps_rel, workers
    """
    load_dotenv()

    mapping = {
        'GB2D_OUT_DIR': ('out_dir', str),
        'GB2D_LOG_FILE': ('log_file', str),
        'GB2D_LOG_LEVEL': ('log_level', str),
        'GB2D_MAX_ITERS': ('max_iters', int),
        'GB2D_EPS_ABS': ('eps_abs', float),
        'GB2D_EPS_REL': ('eps_rel', float),
        'GB2D_WORKERS': ('workers', int),
    }
    overrides = {}
    for variable, (key, cast) in mapping.items():
        raw = os.getenv(variable)
        if raw is None or raw.strip() == '':
            continue
        try:
            overrides[key] = cast(raw.strip())
        except ValueError:
            raise ValueError(f"environment variable {variable} has invalid value {raw!r}")
    return overrides


def load_config_file(path: str) -> Dict[str, Any]:
    """
    Read a JSON or YAML experiment config file

    @param path - File path (.json, .yml or .yaml)
    @returns Parsed mapping
    @throws FileNotFoundError - If the file does not exist
    @throws ValueError - If the file cannot be parsed or is not a mapping
    """
    config_file = Path(path)
    if not config_file.exists():
        raise FileNotFoundError(f"config file {path} not found")

    with open(config_file, 'r', encoding='utf-8') as file:
        try:
            if config_file.suffix.lower() in ('.yml', '.yaml'):
                data = yaml.safe_load(file)
            else:
                data = json.load(file)
        except yaml.YAMLError as error:
            raise ValueError(f"config file {path} is not valid YAML: {error}") from error

    if not isinstance(data, dict):
        raise ValueError(f"config file {path} must contain a mapping at top level")
    return data


def _known_fields(cls, values: Dict[str, Any]) -> Dict[str, Any]:
    names = {f.name for f in fields(cls)}
    unknown = set(values) - names
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {', '.join(sorted(unknown))}")
    return dict(values)


def build_run_options(
    file_values: Optional[Dict[str, Any]] = None,
    solver_overrides: Optional[Dict[str, Any]] = None,
    localize_overrides: Optional[Dict[str, Any]] = None,
    env: Optional[Dict[str, Any]] = None,
) -> Tuple[SolverOptions, LocalizeOptions]:
    """
    Resolve solver and localization options without a scenario description

    Used on its own by the commands that read a saved scenario.

    @param file_values - Parsed config file (its 'solver' and 'localize' sections)
    @param solver_overrides - Command line values (None entries are ignored)
    @param localize_overrides - Command line values (None entries are ignored)
    @param env - Environment overrides (default: load_env_overrides())
    @returns (SolverOptions, LocalizeOptions)
    """
    file_values = file_values or {}
    env = load_env_overrides() if env is None else env

    solver_values = {k: env[k] for k in ('max_iters', 'eps_abs', 'eps_rel', 'workers') if k in env}
    solver_values.update(file_values.get('solver', {}))
    solver_values.update({k: v for k, v in (solver_overrides or {}).items() if v is not None})

    localize_values = dict(file_values.get('localize', {}))
    localize_values.update({k: v for k, v in (localize_overrides or {}).items() if v is not None})

    return (
        SolverOptions(**_known_fields(SolverOptions, solver_values)),
        LocalizeOptions(**_known_fields(LocalizeOptions, localize_values)),
    )


def build_experiment_config(
    file_values: Optional[Dict[str, Any]] = None,
    preset: Optional[str] = None,
    paper_scale: bool = False,
    seed: Optional[int] = None,
    gen_overrides: Optional[Dict[str, Any]] = None,
    solver_overrides: Optional[Dict[str, Any]] = None,
    localize_overrides: Optional[Dict[str, Any]] = None,
    experiment_overrides: Optional[Dict[str, Any]] = None,
) -> ExperimentConfig:
    """
    Merge every configuration layer into one ExperimentConfig

    Precedence (lowest first): defaults, environment, config file, preset
    named on the command line, explicit overrides.

    @returns Resolved ExperimentConfig
    @throws ValueError - If no generation settings can be resolved
    """
    file_values = dict(file_values or {})
    env = load_env_overrides()

    preset = preset or file_values.get('preset')
    paper_scale = paper_scale or bool(file_values.get('paper_scale', False))
    if seed is None:
        seed = int(file_values.get('seed', file_values.get('gen', {}).get('seed', 0)))

    experiment_overrides = dict(experiment_overrides or {})
    gen_values: Dict[str, Any] = {}
    n_values = experiment_overrides.pop('n_values', None) or file_values.get('n_values')
    if preset:
        resolved = resolve_preset(preset, paper_scale=paper_scale, seed=seed)
        gen_values.update(resolved['gen'])
        n_values = n_values or resolved['n_values']
    gen_values.update(file_values.get('gen', {}))
    gen_values.update({k: v for k, v in (gen_overrides or {}).items() if v is not None})
    gen_values['seed'] = seed
    if 'n_samples' not in gen_values:
        raise ValueError("no scenario size given: pass --preset, --config or --n/--paths/--msg")

    solver, localize = build_run_options(file_values, solver_overrides, localize_overrides, env)

    experiment = {
        'out_dir': env.get('out_dir', Defaults.OUTPUT_DIRECTORY),
    }
    for key in ('out_dir', 'repetitions', 'seeds', 'cert_tol'):
        if key in file_values:
            experiment[key] = file_values[key]
    experiment.update({k: v for k, v in experiment_overrides.items() if v is not None})

    return ExperimentConfig(
        gen=GenConfig(**_known_fields(GenConfig, gen_values)),
        solver=solver,
        localize=localize,
        n_values=n_values,
        preset=preset,
        paper_scale=paper_scale,
        **experiment
    )
