"""
GB2D - Core Model

Domain types shared by every module, the Fourier steering atom, the Hermitian
Toeplitz lift and scenario validation.

Conventions: complex data are complex128, delays are fractions of the
observation window in [0, 1), and the matrix inner product is
<A, B> = Tr(B^H A) = np.vdot(B, A).
"""

from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np
from scipy.linalg import toeplitz

from constants import Defaults
from logger_utils import get_logger


logger = get_logger(__name__)


class DomainError(ValueError):
    """Raised when an operation receives arguments outside its domain"""


class ScenarioParseError(ValueError):
    """
    Raised when a serialized scenario cannot be decoded

    @param key - JSON key (dotted path) where decoding failed
    @param message - Human readable reason
    """

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class GenerationError(RuntimeError):
    """Raised when random scenario generation cannot satisfy its constraints"""


class SolverError(RuntimeError):
    """Raised when a numerical kernel fails; carries solver diagnostics"""

    def __init__(self, message: str, diagnostics: dict = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


def _frozen(values, dtype=np.complex128) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.flags.writeable = False
    return array


# ========================================
# Domain types
# ========================================

@dataclass(frozen=True)
class Codebook:
    """
    Codebook C_k of one user, shape N x M_k

    Rows are indexed by frequency sample n, columns by message coordinate.
    """
    user_index: int
    entries: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, 'entries', _frozen(np.atleast_2d(self.entries)))

    @property
    def n_samples(self) -> int:
        return self.entries.shape[0]

    @property
    def message_size(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class SensingMatrix:
    """
    Sensing matrix D of shape M x N

    The identity flag marks D = I_N so that operators can skip the product.
    """
    entries: np.ndarray
    identity: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, 'entries', _frozen(np.atleast_2d(self.entries)))

    @classmethod
    def eye(cls, n_samples: int) -> 'SensingMatrix':
        return cls(np.eye(n_samples), identity=True)

    @property
    def m_measurements(self) -> int:
        return self.entries.shape[0]

    @property
    def n_samples(self) -> int:
        return self.entries.shape[1]

    def apply(self, vector: np.ndarray) -> np.ndarray:
        """Compute D @ v (fast path for identity)"""
        if self.identity:
            return np.array(vector, dtype=np.complex128, copy=True)
        return self.entries @ vector

    def apply_adjoint(self, vector: np.ndarray) -> np.ndarray:
        """Compute D^H @ v (fast path for identity)"""
        if self.identity:
            return np.array(vector, dtype=np.complex128, copy=True)
        return self.entries.conj().T @ vector


@dataclass(frozen=True)
class ChannelSpec:
    """Multipath channel of one user: delays tau in [0, 1) and complex amplitudes g"""
    delays: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, 'delays', _frozen(np.atleast_1d(self.delays), np.float64))
        object.__setattr__(self, 'amplitudes', _frozen(np.atleast_1d(self.amplitudes)))

    @classmethod
    def from_paths(cls, paths: Iterable[Tuple[float, complex]]) -> 'ChannelSpec':
        paths = list(paths)
        return cls(
            delays=[tau for tau, _ in paths],
            amplitudes=[gain for _, gain in paths]
        )

    @property
    def path_count(self) -> int:
        return len(self.delays)

    @property
    def paths(self) -> List[Tuple[float, complex]]:
        return list(zip(self.delays.tolist(), self.amplitudes.tolist()))


@dataclass(frozen=True)
class Message:
    """Message vector x_k; positivity marks the real, entrywise non-negative convention"""
    coords: np.ndarray
    positivity_convention: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, 'coords', _frozen(np.atleast_1d(self.coords)))

    @property
    def size(self) -> int:
        return len(self.coords)


@dataclass(frozen=True)
class Scenario:
    """
    Ground-truth description of one multi-user multipath instance

    @param n_samples - Number of frequency samples N
    @param codebooks - One Codebook per user
    @param channels - One ChannelSpec per user
    @param messages - One Message per user
    @param sensing - Sensing matrix D (M x N)
    @param seed - Generation seed (0 for hand-built scenarios)
    """
    n_samples: int
    codebooks: Tuple[Codebook, ...]
    channels: Tuple[ChannelSpec, ...]
    messages: Tuple[Message, ...]
    sensing: SensingMatrix
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, 'codebooks', tuple(self.codebooks))
        object.__setattr__(self, 'channels', tuple(self.channels))
        object.__setattr__(self, 'messages', tuple(self.messages))

    @property
    def user_count(self) -> int:
        return len(self.codebooks)

    @property
    def message_sizes(self) -> List[int]:
        return [codebook.message_size for codebook in self.codebooks]

    @property
    def path_counts(self) -> List[int]:
        return [channel.path_count for channel in self.channels]

    @property
    def total_amplitude(self) -> float:
        """Sum over users and paths of |g|, the atomic-norm value of the ground truth"""
        return float(sum(np.abs(channel.amplitudes).sum() for channel in self.channels))


@dataclass(frozen=True)
class MatrixTuple:
    """Lifted unknown (X_k)_k with block k of shape M_k x N"""
    blocks: Tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, 'blocks', tuple(_frozen(block) for block in self.blocks))

    @classmethod
    def zeros(cls, shapes: Sequence[Tuple[int, int]]) -> 'MatrixTuple':
        return cls(tuple(np.zeros(shape, dtype=np.complex128) for shape in shapes))

    @property
    def shapes(self) -> List[Tuple[int, int]]:
        return [block.shape for block in self.blocks]

    def inner(self, other: 'MatrixTuple') -> complex:
        """<self, other> = sum_k Tr(other_k^H self_k)"""
        return complex(sum(np.vdot(b, a) for a, b in zip(self.blocks, other.blocks)))

    def norm(self) -> float:
        return float(np.sqrt(sum(np.vdot(a, a).real for a in self.blocks)))

    def __add__(self, other: 'MatrixTuple') -> 'MatrixTuple':
        return MatrixTuple(tuple(a + b for a, b in zip(self.blocks, other.blocks)))

    def __mul__(self, scalar: complex) -> 'MatrixTuple':
        return MatrixTuple(tuple(scalar * a for a in self.blocks))

    __rmul__ = __mul__


@dataclass
class ValidationReport:
    """Violations (invariant failures) and warnings collected by validate_scenario"""
    violations: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    min_separation: float = float('inf')

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            'violations': list(self.violations),
            'warnings': list(self.warnings),
            'min_separation': None if np.isinf(self.min_separation) else self.min_separation,
        }


# ========================================
# Atoms and Toeplitz structure
# ========================================

def steering_vector(tau: float, n: int) -> np.ndarray:
    """
    Fourier steering atom a(tau) = [1, e^{-j2pi tau}, ..., e^{-j2pi(n-1)tau}]

    @param tau - Delay as a fraction of the observation window, 0 <= tau < 1
    @param n - Number of samples (n >= 1)
    @returns complex vector of length n
    @throws DomainError - If tau is outside [0, 1) or n < 1

    @example
    steering_vector(0.25, 4)  # [1, -1j, -1, 1j]
    """
    if n < 1:
        raise DomainError(f"steering vector needs n >= 1, got {n}")
    if not (0.0 <= tau < 1.0):
        raise DomainError(f"delay must lie in [0, 1), got {tau}")
    return np.exp(-2j * np.pi * tau * np.arange(n))


def steering_matrix(taus: np.ndarray, n: int) -> np.ndarray:
    """Columns a(tau) for each tau in taus, shape n x len(taus); no range check"""
    taus = np.asarray(taus, dtype=np.float64)
    return np.exp(-2j * np.pi * np.outer(np.arange(n), taus))


def toeplitz_lift(x: np.ndarray) -> np.ndarray:
    """
    Hermitian Toeplitz matrix with first row x

    Entry (i, j) for i > j is the conjugate of entry (j, i), so the output is
    exactly Hermitian.

    @param x - First row [x_1, ..., x_N]
    @returns N x N Hermitian Toeplitz matrix
    @throws DomainError - On empty input

    @example
    toeplitz_lift([1, 2 + 1j, 3])
    # [[1, 2+1j, 3], [2-1j, 1, 2+1j], [3, 2-1j, 1]]
    """
    x = np.asarray(x, dtype=np.complex128).ravel()
    if x.size == 0:
        raise DomainError("Toeplitz lift of an empty vector")
    first_row = x.copy()
    first_row[0] = first_row[0].real
    return toeplitz(first_row.conj(), first_row)


def diag_sum(q_matrix: np.ndarray, offset: int) -> complex:
    """
    Sum of the entries Q[i + q, i] along diagonal offset q

    q = 0 gives the trace; negative offsets sum the entries Q[i, i - q].

    @param q_matrix - Square N x N matrix
    @param offset - Diagonal offset q with |q| <= N - 1
    @returns complex scalar
    @throws DomainError - If |q| >= N
    """
    n = q_matrix.shape[0]
    if abs(offset) >= n:
        raise DomainError(f"diagonal offset {offset} outside [-{n - 1}, {n - 1}]")
    return complex(np.trace(q_matrix, offset=-offset))


def wrap_distance(a, b):
    """
    Wrap-around distance min(|a - b|, 1 - |a - b|) on the unit circle

    Broadcasts over numpy arrays.
    """
    difference = np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)) % 1.0
    result = np.minimum(difference, 1.0 - difference)
    if np.ndim(result) == 0:
        return float(result)
    return result


def minimum_separation(channels: Sequence[ChannelSpec], cross_user: bool = False) -> float:
    """
    Minimum wrap-around separation between delays

    @param channels - Channels of all users
    @param cross_user - Compare delays across users as well as within each user
    @returns Smallest pairwise distance (inf when fewer than two delays are compared)
    """
    groups = [np.concatenate([c.delays for c in channels])] if cross_user else [c.delays for c in channels]
    separation = float('inf')
    for delays in groups:
        if len(delays) < 2:
            continue
        distances = wrap_distance(delays[:, None], delays[None, :])
        np.fill_diagonal(distances, np.inf)
        separation = min(separation, float(distances.min()))
    return separation


# ========================================
# Validation
# ========================================

def validate_scenario(scenario: Scenario) -> ValidationReport:
    """
    Check every type invariant of a scenario

    Never raises; a separation below 1/N is a warning because stress tests
    place delays closer on purpose.

    @param scenario - Scenario to check
    @returns ValidationReport (empty violations iff all invariants hold)
    """
    report = ValidationReport()
    n = scenario.n_samples
    k = len(scenario.codebooks)

    if n < 1:
        report.violations.append(f"n_samples must be >= 1, got {n}")
    if k < 1:
        report.violations.append("scenario has no users")
    if not (len(scenario.channels) == len(scenario.messages) == k):
        report.violations.append(
            f"list lengths differ: {k} codebooks, {len(scenario.channels)} channels, "
            f"{len(scenario.messages)} messages"
        )
        return report

    for index, (codebook, channel, message) in enumerate(
            zip(scenario.codebooks, scenario.channels, scenario.messages)):
        prefix = f"user {index}"
        rows, m_k = codebook.entries.shape
        if rows != n:
            report.violations.append(f"{prefix}: codebook has {rows} rows, expected N={n}")
        if not (1 <= m_k <= max(n, 1)):
            report.violations.append(f"{prefix}: codebook message size {m_k} outside [1, N]")
        if not np.all(np.isfinite(codebook.entries)):
            report.violations.append(f"{prefix}: codebook has non-finite entries")

        if channel.path_count < 1:
            report.violations.append(f"{prefix}: channel has no paths")
        if len(channel.amplitudes) != channel.path_count:
            report.violations.append(f"{prefix}: {channel.path_count} delays but {len(channel.amplitudes)} amplitudes")
        if np.any((channel.delays < 0.0) | (channel.delays >= 1.0)):
            report.violations.append(f"{prefix}: delay outside [0, 1)")
        if len(np.unique(channel.delays)) != channel.path_count:
            report.violations.append(f"{prefix}: delays are not pairwise distinct")
        if np.any(channel.amplitudes == 0):
            report.violations.append(f"{prefix}: zero amplitude")
        if not np.all(np.isfinite(channel.amplitudes)):
            report.violations.append(f"{prefix}: non-finite amplitude")

        if message.size != m_k:
            report.violations.append(f"{prefix}: message length {message.size} does not match M_k={m_k}")
        if abs(np.linalg.norm(message.coords) - 1.0) > Defaults.UNIT_NORM_TOL:
            report.violations.append(f"{prefix}: message not unit norm (norm {np.linalg.norm(message.coords):.6g})")
        if message.positivity_convention:
            if np.any(message.coords.imag != 0) or np.any(message.coords.real < 0):
                report.violations.append(f"{prefix}: positive message has negative or complex entries")

    sensing = scenario.sensing.entries
    m_rows, n_cols = sensing.shape
    if n_cols != n:
        report.violations.append(f"sensing matrix has {n_cols} columns, expected N={n}")
    if not (1 <= m_rows <= n):
        report.violations.append(f"sensing matrix row count {m_rows} outside [1, N]")
    if not np.all(np.isfinite(sensing)):
        report.violations.append("sensing matrix has non-finite entries")
    if scenario.sensing.identity and (sensing.shape != (n, n) or not np.array_equal(sensing, np.eye(n))):
        report.violations.append("sensing identity flag disagrees with entries")

    report.min_separation = minimum_separation(scenario.channels)
    if n >= 1 and report.min_separation < 1.0 / n:
        report.warnings.append(
            f"minimum separation {report.min_separation:.6g} is below 1/N = {1.0 / n:.6g}"
        )

    for warning in report.warnings:
        logger.warning(warning)
    return report
