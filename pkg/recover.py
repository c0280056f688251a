"""
GB2D - Message and Amplitude Recovery, Certificates and Metrics

Given estimated delays the measurements are linear in the per-path vectors
b_{k,l} = g_l^k x_k. Least squares yields them; stacking b_{k,1..P_k} as the
columns of B_k = x_k (g^k)^T and taking the leading singular pair separates
message and amplitudes up to the unavoidable phase factor.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.optimize import linear_sum_assignment

from constants import AlignConvention, Defaults
from core_model import DomainError, Scenario, minimum_separation, steering_matrix, wrap_distance
from localize import DelayEstimates, DualPolynomialSet, eval_dual_poly, grid_norms
from logger_utils import get_logger
from operators import MeasurementModel
from sdp import DualSolution


logger = get_logger(__name__)


# ========================================
# Least squares and factorization
# ========================================

@dataclass
class LeastSquaresFit:
    """Per-user coefficient matrices B_k (M_k x P_k) and fit diagnostics"""
    coefficients: List[np.ndarray]
    residual: float
    rank: int
    unknowns: int
    underdetermined: bool


def path_dictionary(model: MeasurementModel, estimates: DelayEstimates) -> np.ndarray:
    """
    Columns D diag(a(tau)) conj(C_k), user-major, path-minor

    @returns M x sum_k P_k M_k complex matrix
    """
    columns = []
    for user, codebook in enumerate(model.codebooks):
        steering = steering_matrix(estimates.delays(user), model.n_samples)
        for path in range(steering.shape[1]):
            columns.append(model.sensing.apply(steering[:, path, None] * codebook.conj()))
    if not columns:
        return np.zeros((model.m_measurements, 0), dtype=np.complex128)
    return np.hstack(columns)


def least_squares_paths(y: np.ndarray, model: MeasurementModel, estimates: DelayEstimates) -> LeastSquaresFit:
    """
    Solve y ~ sum_{k,l} D diag(a(tau_l^k)) conj(C_k) b_{k,l} for the stacked b

    QR-based (LAPACK gelsy); rank-deficient or underdetermined systems return
    the minimum-norm solution with a warning.

    @param y - Measurements (length M)
    @param model - Measurement model
    @param estimates - Delays per user
    @returns LeastSquaresFit with B_k = [b_{k,1}, ..., b_{k,P_k}]
    """
    y = np.asarray(y, dtype=np.complex128).ravel()
    if estimates.user_count != model.user_count:
        raise DomainError(f"{estimates.user_count} users of delays for a {model.user_count}-user model")

    phi = path_dictionary(model, estimates)
    unknowns = phi.shape[1]
    underdetermined = unknowns > model.m_measurements
    if underdetermined:
        logger.warning(
            f"Least squares has {unknowns} complex unknowns for {model.m_measurements} measurements; "
            "returning the minimum-norm solution"
        )

    if unknowns == 0:
        solution, rank = np.zeros(0, dtype=np.complex128), 0
    else:
        solution, _, rank, _ = linalg.lstsq(phi, y, lapack_driver='gelsy')
        if rank < unknowns:
            logger.warning(f"Path dictionary is rank deficient ({rank} < {unknowns}); minimum-norm solution")

    y_norm = np.linalg.norm(y)
    residual = float(np.linalg.norm(y - phi @ solution) / y_norm) if y_norm > 0 else 0.0

    coefficients, offset = [], 0
    for user, codebook in enumerate(model.codebooks):
        m_k = codebook.shape[1]
        count = len(estimates.per_user[user])
        block = solution[offset:offset + m_k * count].reshape(count, m_k).T
        coefficients.append(block)
        offset += m_k * count

    return LeastSquaresFit(
        coefficients=coefficients,
        residual=residual,
        rank=int(rank),
        unknowns=unknowns,
        underdetermined=underdetermined,
    )


def factor_rank_one(b_matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    Best rank-one factorization B ~ x g^T with ||x|| = 1

    @param b_matrix - M_k x P_k coefficient matrix
    @returns (x, g, sigma_2 / sigma_1)
    @throws DomainError - "no energy on user" for an empty or zero matrix

    @example
    x, g, ratio = factor_rank_one(np.outer(x_true, g_true))  # ratio ~ 0
    """
    b_matrix = np.asarray(b_matrix, dtype=np.complex128)
    if b_matrix.size == 0 or not np.any(b_matrix):
        raise DomainError("no energy on user")
    left, singular, right_h = np.linalg.svd(b_matrix, full_matrices=False)
    message = left[:, 0]
    amplitudes = singular[0] * right_h[0, :]
    ratio = float(singular[1] / singular[0]) if singular.size > 1 else 0.0
    return message, amplitudes, ratio


def align_ambiguity(
    message: np.ndarray,
    amplitudes: np.ndarray,
    convention: AlignConvention = AlignConvention.POSITIVITY,
    reference: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Resolve the phase shared by x and g

    positivity rotates x by phi = -arg(sum x_i), which maximizes
    sum Re(e^{j phi} x_i); oracle rotates x onto the reference with
    phi = -arg(reference^H x). g is counter-rotated so x g^T is unchanged.

    @param message - Unit-norm x
    @param amplitudes - g
    @param convention - positivity or oracle
    @param reference - True message (oracle convention only)
    @returns (x', g')
    @throws DomainError - If the oracle convention has no reference
    """
    message = np.asarray(message, dtype=np.complex128)
    amplitudes = np.asarray(amplitudes, dtype=np.complex128)
    convention = AlignConvention(convention)
    if convention is AlignConvention.ORACLE:
        if reference is None:
            raise DomainError("oracle alignment needs the true message")
        phi = -np.angle(np.vdot(reference, message))
    else:
        phi = -np.angle(np.sum(message))
    rotation = np.exp(1j * phi)
    return rotation * message, amplitudes / rotation


def positivity_report(message: np.ndarray) -> np.ndarray:
    """Reporting form of a positivity-aligned message: real parts, negatives set to zero"""
    return np.maximum(np.asarray(message).real, 0.0)


def message_mse(estimate: np.ndarray, truth: np.ndarray) -> float:
    """
    ||x' - x||^2 / M_k for an aligned estimate

    @throws DomainError - On length mismatch
    """
    estimate, truth = np.asarray(estimate), np.asarray(truth)
    if estimate.shape != truth.shape:
        raise DomainError(f"message lengths differ: {estimate.shape} vs {truth.shape}")
    difference = estimate - truth
    return float(np.vdot(difference, difference).real / truth.size)


# ========================================
# Delay matching
# ========================================

@dataclass
class DelayMatch:
    """
    Optimal assignment between estimated and true delays

    @param pairs - (estimate index, truth index, wrap-around error)
    @param misses - Truth indices left unassigned
    @param false_alarms - Estimate indices left unassigned
    """
    pairs: List[Tuple[int, int, float]] = field(default_factory=list)
    misses: List[int] = field(default_factory=list)
    false_alarms: List[int] = field(default_factory=list)

    @property
    def total_cost(self) -> float:
        return float(sum(error for _, _, error in self.pairs))

    @property
    def max_error(self) -> float:
        return max((error for _, _, error in self.pairs), default=float('inf'))

    @property
    def exact_count(self) -> bool:
        return not self.misses and not self.false_alarms

    def to_dict(self) -> Dict[str, Any]:
        return {
            'pairs': [{'estimate': i, 'truth': j, 'error': error} for i, j, error in self.pairs],
            'misses': list(self.misses),
            'false_alarms': list(self.false_alarms),
            'total_cost': self.total_cost,
        }


def match_delays(estimated: Sequence[float], truth: Sequence[float]) -> DelayMatch:
    """
    Minimum total wrap-around distance assignment (Hungarian algorithm)

    @param estimated - Estimated delays
    @param truth - True delays
    @returns DelayMatch, pairs sorted by truth index
    """
    estimated = np.asarray(estimated, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if estimated.size == 0 or truth.size == 0:
        return DelayMatch(misses=list(range(truth.size)), false_alarms=list(range(estimated.size)))

    cost = wrap_distance(estimated[:, None], truth[None, :])
    rows, cols = linear_sum_assignment(cost)
    pairs = sorted(((int(i), int(j), float(cost[i, j])) for i, j in zip(rows, cols)), key=lambda p: p[1])
    return DelayMatch(
        pairs=pairs,
        misses=sorted(set(range(truth.size)) - set(int(j) for j in cols)),
        false_alarms=sorted(set(range(estimated.size)) - set(int(i) for i in rows)),
    )


# ========================================
# Certificate
# ========================================

@dataclass
class UserCertificate:
    on_support_deviation: float
    off_support_max: float
    separation: float
    separation_ok: bool
    certified: bool


@dataclass
class CertificateReport:
    """
    Numerical check of the interpolation and strict-bound conditions per user

    A user is certified iff on_support_deviation <= cert_tol, off_support_max < 1
    and its delays are separated by at least 1/N.
    """
    users: List[UserCertificate]
    cert_tol: float
    dual_objective: float
    atomic_norm: float

    @property
    def certified(self) -> bool:
        return all(user.certified for user in self.users)

    @property
    def relative_value_gap(self) -> float:
        """|Re<lam, y> - sum |g|| / sum |g|"""
        if self.atomic_norm == 0:
            return abs(self.dual_objective)
        return abs(self.dual_objective - self.atomic_norm) / self.atomic_norm

    def to_dict(self) -> Dict[str, Any]:
        return {
            'certified': self.certified,
            'cert_tol': self.cert_tol,
            'dual_objective': self.dual_objective,
            'atomic_norm': self.atomic_norm,
            'relative_value_gap': self.relative_value_gap,
            'users': [
                {key: (value if not isinstance(value, float) or np.isfinite(value) else None)
                 for key, value in vars(user).items()}
                for user in self.users
            ],
        }


def certify(
    scenario: Scenario,
    solution: DualSolution,
    cert_tol: float = Defaults.CERT_TOL,
) -> CertificateReport:
    """
    Evaluate the certificate conditions of a dual vector against the ground truth

    On support: max_l ||q_k(tau_l) - sgn(g_l) x_k|| with sgn(g) = g / |g|.
    Off support: max of ||q_k|| over a 32N grid with +-0.5/N around every
    true delay excluded.

    @param scenario - Ground truth that produced the measurements
    @param solution - Dual solution (lambda of length M, objective Re<lam, y>)
    @param cert_tol - Tolerance of the on-support condition
    @returns CertificateReport
    @throws DomainError - If lambda does not match the scenario's measurement count
    """
    model = MeasurementModel.from_scenario(scenario)
    if solution.Q.shape != (scenario.n_samples, scenario.n_samples):
        raise DomainError(f"solution has Q of shape {solution.Q.shape}, scenario has N={scenario.n_samples}")
    polys = DualPolynomialSet.from_solution(solution.lam, model)
    n = scenario.n_samples
    grid_size = Defaults.CERT_GRID_FACTOR * n
    grid = np.arange(grid_size) / grid_size

    users = []
    for user, (g_block, channel, message) in enumerate(zip(polys.blocks, scenario.channels, scenario.messages)):
        deviation = 0.0
        for tau, gain in zip(channel.delays, channel.amplitudes):
            target = (gain / abs(gain)) * message.coords
            deviation = max(deviation, float(np.linalg.norm(eval_dual_poly(g_block, float(tau)) - target)))

        values = grid_norms(g_block, grid_size)
        distance = np.min(wrap_distance(grid[:, None], channel.delays[None, :]), axis=1)
        outside = distance >= Defaults.CERT_EXCLUSION / n
        off_support = float(values[outside].max()) if np.any(outside) else 0.0

        separation = minimum_separation([channel])
        separation_ok = separation >= 1.0 / n
        certified = deviation <= cert_tol and off_support < 1.0 and separation_ok
        users.append(UserCertificate(deviation, off_support, separation, bool(separation_ok), bool(certified)))
        logger.info(
            f"User {user} certificate: on-support {deviation:.3e}, off-support max {off_support:.6f}, "
            f"separation {'ok' if separation_ok else 'too small'} -> {'certified' if certified else 'NOT certified'}"
        )

    return CertificateReport(
        users=users,
        cert_tol=cert_tol,
        dual_objective=float(solution.objective),
        atomic_norm=scenario.total_amplitude,
    )


# ========================================
# Full recovery
# ========================================

@dataclass
class UserRecovery:
    """Recovered quantities of one user; message is None when no delay was found"""
    delays: np.ndarray
    amplitudes: Optional[np.ndarray]
    message: Optional[np.ndarray]
    rank_one_ratio: Optional[float]
    match: Optional[DelayMatch] = None
    mse: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        def pairs(values):
            return None if values is None else [[float(v.real), float(v.imag)] for v in values]
        return {
            'delays': [float(tau) for tau in self.delays],
            'amplitudes': pairs(self.amplitudes),
            'message': pairs(self.message),
            'rank_one_ratio': self.rank_one_ratio,
            'match': None if self.match is None else self.match.to_dict(),
            'mse': self.mse,
        }


@dataclass
class RecoveryResult:
    """
    Output of recover_all

    @param users - Per-user recovery
    @param residual - ||y - y_hat|| / ||y||
    @param primal_value - sum_k sum_l |g_hat|, the atomic norm of the recovered decomposition
    @param dual_value - Re<lam, y> when known
    """
    users: List[UserRecovery]
    residual: float
    rank: int
    underdetermined: bool
    primal_value: float
    dual_value: Optional[float] = None

    @property
    def duality_gap(self) -> Optional[float]:
        if self.dual_value is None:
            return None
        return self.primal_value - self.dual_value

    @property
    def mse_mean(self) -> Optional[float]:
        values = [user.mse for user in self.users if user.mse is not None]
        if len(values) != len(self.users):
            return None
        return float(np.mean(values))

    @property
    def max_delay_error(self) -> float:
        errors = [user.match.max_error for user in self.users if user.match is not None]
        return max(errors, default=float('inf'))

    @property
    def mean_delay_error(self) -> Optional[float]:
        errors = [error for user in self.users if user.match is not None for _, _, error in user.match.pairs]
        return float(np.mean(errors)) if errors else None

    @property
    def success(self) -> bool:
        """Every delay found (no misses or false alarms) within the success tolerance"""
        return all(
            user.match is not None and user.match.exact_count and user.message is not None
            for user in self.users
        ) and self.max_delay_error <= Defaults.SUCCESS_DELAY_TOL

    def to_dict(self) -> Dict[str, Any]:
        return {
            'residual': self.residual,
            'rank': self.rank,
            'underdetermined': self.underdetermined,
            'primal_value': self.primal_value,
            'dual_value': self.dual_value,
            'duality_gap': self.duality_gap,
            'mse_mean': self.mse_mean,
            'max_delay_error': None if np.isinf(self.max_delay_error) else self.max_delay_error,
            'success': self.success,
            'users': [user.to_dict() for user in self.users],
        }


def recover_all(
    y: np.ndarray,
    model: MeasurementModel,
    estimates: DelayEstimates,
    truth: Optional[Scenario] = None,
    dual_value: Optional[float] = None,
) -> RecoveryResult:
    """
    Recover messages and amplitudes of every user from estimated delays

    Messages are reported under the positivity convention. With the ground
    truth given, delays are matched and the message MSE is computed after
    oracle alignment.

    @param y - Measurements
    @param model - Measurement model
    @param estimates - Delays per user
    @param truth - Ground truth for metrics (optional)
    @param dual_value - Re<lam, y> for the duality gap (optional)
    @returns RecoveryResult
    """
    fit = least_squares_paths(y, model, estimates)
    users = []
    for user, b_matrix in enumerate(fit.coefficients):
        delays = estimates.delays(user)
        try:
            message, amplitudes, ratio = factor_rank_one(b_matrix)
        except DomainError as error:
            logger.warning(f"User {user}: {error}")
            recovery = UserRecovery(delays=delays, amplitudes=None, message=None, rank_one_ratio=None)
        else:
            message, amplitudes = align_ambiguity(message, amplitudes, AlignConvention.POSITIVITY)
            recovery = UserRecovery(delays=delays, amplitudes=amplitudes, message=message, rank_one_ratio=ratio)

        if truth is not None:
            recovery.match = match_delays(delays, truth.channels[user].delays)
            if recovery.message is not None:
                aligned, _ = align_ambiguity(
                    recovery.message, recovery.amplitudes, AlignConvention.ORACLE, truth.messages[user].coords
                )
                recovery.mse = message_mse(aligned, truth.messages[user].coords)
        users.append(recovery)

    primal_value = float(sum(np.abs(u.amplitudes).sum() for u in users if u.amplitudes is not None))
    result = RecoveryResult(
        users=users,
        residual=fit.residual,
        rank=fit.rank,
        underdetermined=fit.underdetermined,
        primal_value=primal_value,
        dual_value=dual_value,
    )
    logger.info(
        f"Recovery: residual {result.residual:.3e}, primal value {primal_value:.9g}"
        + (f", duality gap {result.duality_gap:.3e}" if dual_value is not None else "")
    )
    return result
