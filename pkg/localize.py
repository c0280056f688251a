"""
GB2D - Delay Localization

Evaluates the vector-valued dual polynomials q_k(tau) = G_k a*(tau), with
G_k = (B* lam)_k, and extracts the delays as the points where ||q_k|| reaches
one: an FFT grid scan finds candidate maxima, Newton iterations on
f(tau) = ||q_k(tau)||^2 refine them below grid resolution, and candidates
closer than the merge radius collapse to the stronger one.
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from config import LocalizeOptions
from constants import Defaults
from core_model import ChannelSpec, DomainError, wrap_distance
from logger_utils import get_logger
from operators import MeasurementModel, adjoint


logger = get_logger(__name__)

# Grid maxima below this fraction of the threshold are not refined
_PREFILTER = 0.9


@dataclass(frozen=True)
class DualPolynomialSet:
    """Coefficient matrices G_k = (B* lam)_k, one M_k x N block per user"""
    blocks: Tuple[np.ndarray, ...]

    @classmethod
    def from_solution(cls, lam: np.ndarray, model: MeasurementModel) -> 'DualPolynomialSet':
        return cls(tuple(np.array(block) for block in adjoint(lam, model).blocks))

    @property
    def user_count(self) -> int:
        return len(self.blocks)

    @property
    def n_samples(self) -> int:
        return self.blocks[0].shape[1]


def eval_dual_poly(g_block: np.ndarray, tau: float) -> np.ndarray:
    """
    q(tau) = G a*(tau), entry i of a*(tau) being e^{+j2pi i tau}

    @param g_block - Coefficients G_k (M_k x N)
    @param tau - Delay in [0, 1)
    @returns complex vector of length M_k
    @throws DomainError - If tau is outside [0, 1)

    @example
    eval_dual_poly(np.zeros((2, 8)), 0.3)  # [0, 0]
    """
    if not (0.0 <= tau < 1.0):
        raise DomainError(f"delay must lie in [0, 1), got {tau}")
    return _poly_and_derivatives(g_block, tau)[0]


def _poly_and_derivatives(g_block: np.ndarray, tau: float):
    """q, q' and q'' at tau (tau need not be wrapped)"""
    n = g_block.shape[1]
    frequencies = 2.0 * np.pi * np.arange(n)
    phases = np.exp(1j * frequencies * tau)
    q = g_block @ phases
    q_first = g_block @ (1j * frequencies * phases)
    q_second = g_block @ (-(frequencies ** 2) * phases)
    return q, q_first, q_second


def _squared_norm_and_derivatives(g_block: np.ndarray, tau: float) -> Tuple[float, float, float]:
    q, q_first, q_second = _poly_and_derivatives(g_block, tau)
    value = float(np.vdot(q, q).real)
    first = 2.0 * float(np.vdot(q, q_first).real)
    second = 2.0 * float((np.vdot(q_first, q_first) + np.vdot(q, q_second)).real)
    return value, first, second


def grid_norms(g_block: np.ndarray, grid_size: int) -> np.ndarray:
    """||q(t_j)|| at t_j = j / grid_size, computed with one inverse FFT per row"""
    values = grid_size * np.fft.ifft(g_block, n=grid_size, axis=1)
    return np.sqrt(np.sum(np.abs(values) ** 2, axis=0))


def squared_norm_coefficients(g_block: np.ndarray) -> np.ndarray:
    """
    Coefficients r_d, d = -(N-1)..N-1, with ||q(tau)||^2 = sum_d r_d e^{j2pi d tau}

    r_d is the sum of the Gram entries (G^H G)[n', n] with n - n' = d.
    """
    gram = g_block.conj().T @ g_block
    n = gram.shape[0]
    return np.array([np.trace(gram, offset=d) for d in range(-(n - 1), n)])


def eval_squared_norm(coefficients: np.ndarray, tau) -> np.ndarray:
    """Evaluate sum_d r_d e^{j2pi d tau} (real up to rounding)"""
    n = (len(coefficients) + 1) // 2
    degrees = np.arange(-(n - 1), n)
    tau = np.atleast_1d(np.asarray(tau, dtype=np.float64))
    return (np.exp(2j * np.pi * np.outer(tau, degrees)) @ coefficients).real


def refine_peak(g_block: np.ndarray, tau0: float, grid_size: Optional[int] = None) -> float:
    """
    Refine a grid maximum of ||q(tau)|| below grid resolution

    Newton iterations on f = ||q||^2 using analytic derivatives; stops when
    |f'| < 1e-12 or after 20 iterations. When a step leaves the bracketing
    cell [tau0 - h, tau0 + h] (h one grid step) or f'' >= 0, a bounded scalar
    search over the cell takes over. The result never has a lower f than tau0.

    @param g_block - Coefficients G_k
    @param tau0 - Starting point (a grid local maximum)
    @param grid_size - Grid the maximum came from (default 16N)
    @returns Refined delay in [0, 1)
    """
    n = g_block.shape[1]
    step_width = 1.0 / (grid_size or Defaults.GRID_FACTOR * n)
    low, high = tau0 - step_width, tau0 + step_width

    start_value = _squared_norm_and_derivatives(g_block, tau0)[0]
    tau = tau0
    fallback = False
    for _ in range(Defaults.NEWTON_MAX_ITERS):
        _, first, second = _squared_norm_and_derivatives(g_block, tau)
        if abs(first) < Defaults.NEWTON_TOL:
            break
        if second >= 0.0:
            fallback = True
            break
        candidate = tau - first / second
        if not (low <= candidate <= high):
            fallback = True
            break
        if abs(candidate - tau) < 1e-16:
            tau = candidate
            break
        tau = candidate

    if fallback:
        result = minimize_scalar(
            lambda t: -_squared_norm_and_derivatives(g_block, t)[0],
            bounds=(low, high),
            method='bounded',
            options={'xatol': 1e-14},
        )
        tau = float(result.x)

    if _squared_norm_and_derivatives(g_block, tau)[0] < start_value:
        tau = tau0
    tau = float(tau % 1.0)
    return 0.0 if tau >= 1.0 else tau


def _grid_maxima(values: np.ndarray) -> np.ndarray:
    """Indices of circular local maxima (strict on the left to avoid plateaus doubling)"""
    left = np.roll(values, 1)
    right = np.roll(values, -1)
    return np.flatnonzero((values > left) & (values >= right))


def _merge(candidates: List[Tuple[float, float]], radius: float) -> List[Tuple[float, float]]:
    """Greedy merge: strongest first, drop anything within radius of an accepted peak"""
    accepted: List[Tuple[float, float]] = []
    for tau, value in sorted(candidates, key=lambda item: (-item[1], item[0])):
        if all(wrap_distance(tau, other) > radius for other, _ in accepted):
            accepted.append((tau, value))
    return accepted


def scan_peaks(
    g_block: np.ndarray,
    grid_size: Optional[int] = None,
    threshold: float = Defaults.PEAK_THRESHOLD,
    merge_factor: float = Defaults.MERGE_FACTOR,
) -> List[Tuple[float, float]]:
    """
    Locate the peaks of ||q(tau)|| that reach the threshold

    @param g_block - Coefficients G_k (M_k x N)
    @param grid_size - Scan grid size (default 16N, at least 4N)
    @param threshold - Minimum refined peak value
    @param merge_factor - Merge radius in units of 1/N
    @returns List of (tau, peak value) sorted by tau
    @throws DomainError - If the grid is coarser than 4N
    """
    n = g_block.shape[1]
    grid_size = grid_size or Defaults.GRID_FACTOR * n
    if grid_size < 4 * n:
        raise DomainError(f"grid of {grid_size} points is coarser than 4N = {4 * n}")

    values = grid_norms(g_block, grid_size)
    candidates = []
    for index in _grid_maxima(values):
        if values[index] < _PREFILTER * threshold:
            continue
        tau = refine_peak(g_block, index / grid_size, grid_size)
        peak = float(np.linalg.norm(_poly_and_derivatives(g_block, tau)[0]))
        if peak >= threshold:
            candidates.append((tau, peak))

    merged = _merge(candidates, merge_factor / n)
    return sorted(merged)


def dual_atomic_norm(g_block: np.ndarray, grid_size: Optional[int] = None) -> float:
    """
    sup over tau of ||G a*(tau)||, from a grid scan refined at every grid maximum

    @param g_block - Coefficients G_k
    @param grid_size - Scan grid size (default 16N)
    @returns Dual atomic norm of G_k
    """
    n = g_block.shape[1]
    grid_size = grid_size or Defaults.GRID_FACTOR * n
    values = grid_norms(g_block, grid_size)
    best = float(values.max()) if values.size else 0.0
    if best == 0.0:
        return 0.0
    for index in _grid_maxima(values):
        if values[index] < _PREFILTER * best:
            continue
        tau = refine_peak(g_block, index / grid_size, grid_size)
        best = max(best, float(np.linalg.norm(_poly_and_derivatives(g_block, tau)[0])))
    return best


@dataclass
class DelayEstimates:
    """Per user, the (tau, peak value) pairs sorted by tau"""
    per_user: List[List[Tuple[float, float]]] = field(default_factory=list)

    @property
    def user_count(self) -> int:
        return len(self.per_user)

    def delays(self, user: int) -> np.ndarray:
        return np.array([tau for tau, _ in self.per_user[user]], dtype=np.float64)

    def peak_values(self, user: int) -> np.ndarray:
        return np.array([value for _, value in self.per_user[user]], dtype=np.float64)

    @property
    def counts(self) -> List[int]:
        return [len(peaks) for peaks in self.per_user]

    def to_dict(self) -> List[List[Dict[str, float]]]:
        return [[{'tau': tau, 'peak': value} for tau, value in peaks] for peaks in self.per_user]

    @classmethod
    def from_delays(cls, delays: Sequence[Sequence[float]]) -> 'DelayEstimates':
        """Estimates with unit peak values (used to feed known delays into recovery)"""
        return cls([[(float(tau), 1.0) for tau in sorted(user)] for user in delays])


def localize_all(
    polys: DualPolynomialSet,
    opts: Optional[LocalizeOptions] = None
) -> DelayEstimates:
    """
    Estimate the delays of every user

    @param polys - Dual polynomials of a solved problem
    @param opts - Localization options; expected_paths trims each user to the
                  strongest P_k peaks
    @returns DelayEstimates
    """
    opts = opts or LocalizeOptions()
    n = polys.n_samples
    grid_size = opts.grid_factor * n
    if opts.expected_paths is not None and len(opts.expected_paths) != polys.user_count:
        raise DomainError(
            f"expected_paths has {len(opts.expected_paths)} entries for {polys.user_count} users"
        )

    estimates = []
    for user, g_block in enumerate(polys.blocks):
        peaks = scan_peaks(g_block, grid_size, opts.threshold, opts.merge_factor)
        if opts.expected_paths is not None and len(peaks) > opts.expected_paths[user]:
            strongest = sorted(peaks, key=lambda item: -item[1])[:opts.expected_paths[user]]
            peaks = sorted(strongest)
        over = [value for _, value in peaks if value > 1.0 + opts.feasibility_tol]
        if over:
            logger.warning(f"User {user}: peak value {max(over):.6f} exceeds 1 + {opts.feasibility_tol:g}")
        logger.info(f"User {user}: {len(peaks)} delay(s) at {[round(tau, 6) for tau, _ in peaks]}")
        estimates.append(peaks)
    return DelayEstimates(estimates)


# ========================================
# CSV output
# ========================================

def write_config_line(file, header: Optional[Dict[str, Any]]) -> None:
    """Reproducibility header as a single comment line ahead of the CSV column row"""
    if header is not None:
        file.write('# config: ' + json.dumps(header, sort_keys=True) + '\n')


def read_config_csv(path: str) -> Tuple[Optional[Dict[str, Any]], List[Dict[str, str]]]:
    """
    Read a result CSV, splitting off the optional '# config:' line

    Other readers need to skip that line too, e.g. pandas.read_csv(path, comment='#').

    @param path - CSV file written by this package
    @returns (config mapping or None, rows keyed by the column names)
    """
    with open(path, 'r', encoding='utf-8', newline='') as file:
        lines = file.read().splitlines()
    config = None
    if lines and lines[0].startswith('# config: '):
        config = json.loads(lines[0][len('# config: '):])
        lines = lines[1:]
    return config, list(csv.DictReader(lines))


def write_curve_csv(
    polys: DualPolynomialSet,
    path: str,
    grid_size: Optional[int] = None,
    extra_points: Sequence[float] = (),
    header: Optional[Dict[str, Any]] = None,
) -> Path:
    """
    Write ||q_k(t)|| for every user on a uniform grid (columns t, D1..DK)

    extra_points (typically the estimated delays) are merged into the grid so
    the curve passes exactly through them.
    """
    n = polys.n_samples
    grid_size = grid_size or Defaults.GRID_FACTOR * n
    points = np.union1d(np.arange(grid_size) / grid_size, np.asarray(list(extra_points), dtype=np.float64))

    columns = []
    for g_block in polys.blocks:
        columns.append([float(np.linalg.norm(_poly_and_derivatives(g_block, t)[0])) for t in points])

    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, 'w', encoding='utf-8', newline='') as file:
        writer = csv.writer(file, lineterminator='\n')
        write_config_line(file, header)
        writer.writerow(['t'] + [f"D{user + 1}" for user in range(polys.user_count)])
        for row, t in enumerate(points):
            writer.writerow([float(t)] + [column[row] for column in columns])
    logger.info(f"Dual polynomial curves written to {target}")
    return target


def write_support_csv(
    polys: DualPolynomialSet,
    estimates: DelayEstimates,
    path: str,
    channels: Optional[Sequence[ChannelSpec]] = None,
    header: Optional[Dict[str, Any]] = None,
) -> Path:
    """Write true and estimated delays with ||q_k|| there (columns user, kind, tau, value)"""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, 'w', encoding='utf-8', newline='') as file:
        writer = csv.writer(file, lineterminator='\n')
        write_config_line(file, header)
        writer.writerow(['user', 'kind', 'tau', 'value'])
        for user, g_block in enumerate(polys.blocks):
            if channels is not None:
                for tau in channels[user].delays:
                    value = float(np.linalg.norm(_poly_and_derivatives(g_block, float(tau))[0]))
                    writer.writerow([user + 1, 'true', float(tau), value])
            for tau, value in estimates.per_user[user]:
                writer.writerow([user + 1, 'estimated', tau, value])
    logger.info(f"Support file written to {target}")
    return target
