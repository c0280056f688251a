"""
GB2D - Dual SDP Assembly and Solvers

The dual problem maximizes Re<lam, y> over lam in C^M and Hermitian Q in
C^{N x N} subject to, for every user k,

    [[Q,   Z_k^H],
     [Z_k, I    ]]  >= 0,      Z_k = (B* lam)_k  (M_k x N)

and the diagonal-sum constraints diag_sum(Q, 0) = 1, diag_sum(Q, q) = 0 for
q = 1..N-1. The block is PSD iff Q >= Z_k^H Z_k, which together with the
diagonal sums bounds the dual polynomial ||Z_k a*(tau)|| by one everywhere.

The default backend is an ADMM on the real embedding of the PSD blocks. The
splitting keeps the (lam, Q) update in closed form: Q is the projection of the
averaged block estimates onto the diagonal-sum constraints, lam solves a fixed
M x M Hermitian system factored once per solve.
"""

import json
import logging
import math
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Type

import numpy as np
from scipy import linalg, sparse

from config import SolverOptions
from constants import Defaults, SolverStatus
from core_model import DomainError, SolverError, diag_sum
from logger_utils import get_logger
from operators import MeasurementModel, adjoint, apply_c_blocks
from scenario import complex_from_json, complex_to_json


logger = get_logger(__name__)

HERMITIAN_TOL = 1e-10


# ========================================
# Real embedding and cone projection
# ========================================

def realify(h_matrix: np.ndarray, check: bool = True) -> np.ndarray:
    """
    Real symmetric embedding [[Re H, -Im H], [Im H, Re H]] of a Hermitian matrix

    H >= 0 iff the embedding is PSD; its eigenvalues are those of H, each
    with doubled multiplicity.

    @param h_matrix - Complex Hermitian n x n matrix
    @param check - Verify Hermitian symmetry to 1e-10
    @returns Real symmetric 2n x 2n matrix
    @throws DomainError - If the input is not square or not Hermitian

    @example
    realify(np.diag([2, 3]))  # diag(2, 3, 2, 3)
    """
    h_matrix = np.asarray(h_matrix, dtype=np.complex128)
    if check:
        if h_matrix.ndim != 2 or h_matrix.shape[0] != h_matrix.shape[1]:
            raise DomainError(f"realify needs a square matrix, got shape {h_matrix.shape}")
        asymmetry = np.max(np.abs(h_matrix - h_matrix.conj().T)) if h_matrix.size else 0.0
        if asymmetry > HERMITIAN_TOL:
            raise DomainError(f"matrix is not Hermitian (max |H - H^H| = {asymmetry:.3g})")
    real, imag = h_matrix.real, h_matrix.imag
    return np.block([[real, -imag], [imag, real]])


def derealify(s_matrix: np.ndarray) -> np.ndarray:
    """Hermitian matrix closest to the complex reading of a 2n x 2n real embedding"""
    n = s_matrix.shape[0] // 2
    real = (s_matrix[:n, :n] + s_matrix[n:, n:]) / 2.0
    imag = (s_matrix[n:, :n] - s_matrix[:n, n:]) / 2.0
    return real + 1j * imag


def psd_project(s_matrix: np.ndarray) -> np.ndarray:
    """
    Frobenius projection onto the PSD cone

    The input is symmetrized first; negative eigenvalues are clamped to zero.

    @param s_matrix - Real symmetric matrix
    @returns PSD matrix nearest to s_matrix
    @throws SolverError - If the eigendecomposition fails
    """
    s_matrix = np.asarray(s_matrix, dtype=np.float64)
    symmetric = (s_matrix + s_matrix.T) / 2.0
    try:
        eigenvalues, eigenvectors = linalg.eigh(symmetric)
    except (linalg.LinAlgError, ValueError) as error:
        raise SolverError(
            f"eigendecomposition failed: {error}",
            {'size': symmetric.shape[0], 'finite': bool(np.all(np.isfinite(symmetric)))}
        )
    if eigenvalues[0] >= 0:
        return symmetric
    clamped = np.maximum(eigenvalues, 0.0)
    projected = (eigenvectors * clamped) @ eigenvectors.T
    return (projected + projected.T) / 2.0


def project_diag_constraints(matrix: np.ndarray) -> np.ndarray:
    """
    Project a matrix onto the Hermitian matrices with diag_sum(Q, 0) = 1 and
    diag_sum(Q, q) = 0 for q >= 1

    Each diagonal is shifted uniformly; the upper triangle mirrors the lower.
    """
    q_matrix = (matrix + matrix.conj().T) / 2.0
    n = q_matrix.shape[0]
    for offset in range(n):
        rows = np.arange(offset, n)
        cols = rows - offset
        target = 1.0 if offset == 0 else 0.0
        shift = (q_matrix[rows, cols].sum() - target) / (n - offset)
        if offset == 0:
            shift = shift.real
        q_matrix[rows, cols] -= shift
        if offset > 0:
            q_matrix[cols, rows] = q_matrix[rows, cols].conj()
    return q_matrix


def ruiz_scaling(matrix: np.ndarray) -> np.ndarray:
    """
    Symmetric Ruiz equilibration of a Hermitian matrix

    Returns d > 0 such that diag(d) A diag(d) has every row max-norm close to
    one. A system A x = b is then solved as x = d * solve(dAd, d * b).

    @param matrix - Hermitian matrix with a nonzero diagonal
    @returns Positive scaling vector
    """
    matrix = np.asarray(matrix)
    scaling = np.ones(matrix.shape[0])
    for _ in range(Defaults.RUIZ_MAX_PASSES):
        scaled = np.abs(matrix) * scaling[:, None] * scaling[None, :]
        row_max = scaled.max(axis=1)
        if np.any(row_max == 0):
            break
        if np.max(np.abs(row_max - 1.0)) <= Defaults.RUIZ_TOL:
            break
        scaling = scaling / np.sqrt(row_max)
    return scaling


# ========================================
# Problem assembly
# ========================================

def hermitian_params(q_matrix: np.ndarray) -> np.ndarray:
    """
    Independent real parameters of a Hermitian matrix (N^2 of them)

    Order: the N diagonal entries, then real parts and imaginary parts of the
    strictly lower triangle in np.tril_indices order.
    """
    n = q_matrix.shape[0]
    rows, cols = np.tril_indices(n, -1)
    lower = q_matrix[rows, cols]
    return np.concatenate([q_matrix.diagonal().real, lower.real, lower.imag])


def _equality_constraints(n: int):
    """Sparse (2N-1) x N^2 matrix and right-hand side of the diagonal-sum constraints"""
    rows, cols = np.tril_indices(n, -1)
    lower_count = len(rows)
    offsets = rows - cols

    entries_row, entries_col = [], []
    entries_row.extend([0] * n)
    entries_col.extend(range(n))
    for offset in range(1, n):
        members = np.flatnonzero(offsets == offset)
        real_row = 2 * offset - 1
        imag_row = 2 * offset
        entries_row.extend([real_row] * len(members))
        entries_col.extend((n + members).tolist())
        entries_row.extend([imag_row] * len(members))
        entries_col.extend((n + lower_count + members).tolist())

    matrix = sparse.csr_matrix(
        (np.ones(len(entries_row)), (entries_row, entries_col)),
        shape=(2 * n - 1, n * n)
    )
    rhs = np.zeros(2 * n - 1)
    rhs[0] = 1.0
    return matrix, rhs


@dataclass
class ConicProblem:
    """
    Assembled dual SDP

    The decision vector is z = [Re lam, Im lam, hermitian_params(Q)]; the
    objective is c^T z with c = [Re y, Im y, 0]. PSD block k is the Hermitian
    matrix returned by hermitian_block(k, lam, Q), of real embedding size
    2 (N + M_k).

    @param model - Full measurement model (all users)
    @param block_model - Model whose codebooks define the PSD blocks (one
                         codebook when a shared codebook was collapsed)
    @param y - Measurements (length M)
    @param collapsed - Whether identical codebooks were merged into one block
    """
    model: MeasurementModel
    block_model: MeasurementModel
    y: np.ndarray
    collapsed: bool
    objective: np.ndarray
    equality_matrix: sparse.csr_matrix
    equality_rhs: np.ndarray
    equality_rank: int

    @property
    def n_samples(self) -> int:
        return self.model.n_samples

    @property
    def m_measurements(self) -> int:
        return self.model.m_measurements

    @property
    def block_count(self) -> int:
        return self.block_model.user_count

    @property
    def psd_block_sizes(self) -> List[int]:
        return [2 * (self.n_samples + c.shape[1]) for c in self.block_model.codebooks]

    @property
    def decision_size(self) -> int:
        return 2 * self.m_measurements + self.n_samples ** 2

    def dual_blocks(self, lam: np.ndarray) -> List[np.ndarray]:
        """Z_k = (B* lam)_k for the PSD blocks"""
        return list(adjoint(lam, self.block_model).blocks)

    def hermitian_block(self, index: int, lam: np.ndarray, q_matrix: np.ndarray) -> np.ndarray:
        return _stack_block(q_matrix, self.dual_blocks(lam)[index])

    def equality_residual(self, q_matrix: np.ndarray) -> np.ndarray:
        return self.equality_matrix @ hermitian_params(q_matrix) - self.equality_rhs

    def objective_value(self, lam: np.ndarray) -> float:
        """Re<lam, y> in the convention <a, b> = b^H a"""
        return float(np.vdot(self.y, lam).real)

    def min_block_eigenvalue(self, lam: np.ndarray, q_matrix: np.ndarray) -> float:
        """Smallest eigenvalue over every PSD block (same for a block and its real embedding)"""
        return min(
            float(linalg.eigvalsh(_stack_block(q_matrix, z))[0])
            for z in self.dual_blocks(lam)
        )


def _stack_block(q_matrix: np.ndarray, z_block: np.ndarray) -> np.ndarray:
    m_k = z_block.shape[0]
    return np.block([[q_matrix, z_block.conj().T], [z_block, np.eye(m_k)]])


def assemble_dual_sdp(model: MeasurementModel, y: np.ndarray, collapse: bool = True) -> ConicProblem:
    """
    Assemble the dual SDP for measurements y

    @param model - Measurement model
    @param y - Measurement vector of length M
    @param collapse - Merge the K blocks into one when every codebook is identical
    @returns ConicProblem
    @throws DomainError - If y does not have length M

    @example
    problem = assemble_dual_sdp(model, y)
    problem.psd_block_sizes  # [2 (N + M_1), ..., 2 (N + M_K)]
    """
    y = np.asarray(y, dtype=np.complex128).ravel()
    if y.size != model.m_measurements:
        raise DomainError(f"measurements have length {y.size}, model expects M={model.m_measurements}")

    collapsed = bool(collapse and model.user_count > 1 and model.shares_codebook())
    if collapsed:
        block_model = MeasurementModel(model.n_samples, (model.codebooks[0],), model.sensing)
        logger.info(f"All {model.user_count} users share one codebook: assembling a single PSD block")
    else:
        block_model = model

    n = model.n_samples
    equality_matrix, equality_rhs = _equality_constraints(n)
    gram = (equality_matrix @ equality_matrix.T).toarray()
    rank = int(np.linalg.matrix_rank(gram))
    if rank < equality_matrix.shape[0]:
        logger.warning(f"Equality constraint matrix is rank deficient ({rank} < {equality_matrix.shape[0]})")

    objective = np.concatenate([y.real, y.imag, np.zeros(n * n)])
    problem = ConicProblem(
        model=model,
        block_model=block_model,
        y=y,
        collapsed=collapsed,
        objective=objective,
        equality_matrix=equality_matrix,
        equality_rhs=equality_rhs,
        equality_rank=rank,
    )
    logger.debug(
        f"Assembled dual SDP: {problem.block_count} PSD block(s) of sizes {problem.psd_block_sizes}, "
        f"{equality_matrix.shape[0]} equalities, {problem.decision_size} real unknowns"
    )
    return problem


# ========================================
# Solutions
# ========================================

@dataclass
class DualSolution:
    """
    Solver output

    @param lam - Dual vector lambda (length M)
    @param Q - Hermitian N x N matrix
    @param objective - Re<lam, y>
    @param status - optimal, max_iters or infeasible_suspect
    @param iterations - Iterations performed
    @param primal_residual - Final primal residual
    @param dual_residual - Final dual residual
    @param diagnostics - Backend-specific extras (penalty, rescale factor, timings)
    """
    lam: np.ndarray
    Q: np.ndarray
    objective: float
    status: SolverStatus
    iterations: int
    primal_residual: float
    dual_residual: float
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.lam = np.asarray(self.lam, dtype=np.complex128).ravel()
        q_matrix = np.asarray(self.Q, dtype=np.complex128)
        self.Q = (q_matrix + q_matrix.conj().T) / 2.0
        self.status = SolverStatus(self.status)

    @property
    def is_optimal(self) -> bool:
        return self.status is SolverStatus.OPTIMAL

    def to_dict(self) -> Dict[str, Any]:
        return {
            'lambda': complex_to_json(self.lam),
            'Q': complex_to_json(self.Q),
            'objective': float(self.objective),
            'status': self.status.value,
            'iterations': int(self.iterations),
            'residuals': {
                'primal': float(self.primal_residual),
                'dual': float(self.dual_residual),
            },
            'diagnostics': self.diagnostics,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DualSolution':
        """
        Decode a solution document

        @throws DomainError - On missing keys or malformed arrays
        """
        try:
            lam = complex_from_json(data['lambda'], 'lambda', 1)
            q_matrix = complex_from_json(data['Q'], 'Q', 2)
            residuals = data.get('residuals', {})
            solution = cls(
                lam=lam,
                Q=q_matrix,
                objective=float(data['objective']),
                status=data['status'],
                iterations=int(data.get('iterations', 0)),
                primal_residual=float(residuals.get('primal', float('nan'))),
                dual_residual=float(residuals.get('dual', float('nan'))),
                diagnostics=dict(data.get('diagnostics', {})),
            )
        except KeyError as error:
            raise DomainError(f"solution document is missing key {error}")
        except (TypeError, ValueError) as error:
            raise DomainError(f"malformed solution document: {error}")
        if q_matrix.ndim != 2 or q_matrix.shape[0] != q_matrix.shape[1]:
            raise DomainError(f"solution Q has shape {q_matrix.shape}, expected square")
        if np.max(np.abs(q_matrix - q_matrix.conj().T)) > HERMITIAN_TOL:
            raise DomainError("solution Q is not Hermitian")
        return solution


def save_solution(solution: DualSolution, path: str, header: Optional[Dict[str, Any]] = None) -> Path:
    document = solution.to_dict()
    if header is not None:
        document['config'] = header
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, 'w', encoding='utf-8', newline='\n') as file:
        json.dump(document, file, indent=2, allow_nan=True)
        file.write('\n')
    logger.info(f"Dual solution saved to {target}")
    return target


def load_solution(path: str) -> DualSolution:
    try:
        with open(path, 'r', encoding='utf-8') as file:
            data = json.load(file)
    except json.JSONDecodeError as error:
        raise DomainError(f"solution file {path}: malformed JSON ({error.msg} at line {error.lineno})")
    return DualSolution.from_dict(data)


# ========================================
# Backends
# ========================================

class SolverBackend:
    """
    Interface of a dual SDP backend

    Implementations return a DualSolution whose status is one of the three
    SolverStatus values; an optimal status promises equality residuals and
    negative block eigenvalues below eps_abs.
    """

    name = ''

    def solve(
        self,
        problem: ConicProblem,
        opts: SolverOptions,
        warm_start: Optional[DualSolution] = None
    ) -> DualSolution:
        raise NotImplementedError


_BACKENDS: Dict[str, Type[SolverBackend]] = {}


def register_backend(cls: Type[SolverBackend]) -> Type[SolverBackend]:
    _BACKENDS[cls.name] = cls
    return cls


def available_backends() -> List[str]:
    return sorted(_BACKENDS)


def get_backend(name: str) -> SolverBackend:
    """
    Instantiate a registered backend

    @throws ValueError - If no backend is registered under name
    """
    if name not in _BACKENDS:
        raise ValueError(f"unknown solver backend {name!r}; available: {', '.join(available_backends())}")
    return _BACKENDS[name]()


def restore_feasibility(problem: ConicProblem, lam: np.ndarray, q_matrix: np.ndarray):
    """
    Map an approximately feasible (lam, Q) onto the feasible set

    With mu = max(0, -min_k lambda_min(Q - Z_k^H Z_k)), returns
    ((lam / s), (Q + mu I) / s^2, 1 / s) where s = sqrt(1 + N mu). Diagonal
    sums are preserved and every block becomes PSD.
    """
    n = q_matrix.shape[0]
    deficit = 0.0
    for z_block in problem.dual_blocks(lam):
        schur = q_matrix - z_block.conj().T @ z_block
        smallest = float(linalg.eigvalsh((schur + schur.conj().T) / 2.0)[0])
        deficit = max(deficit, -smallest)
    if deficit <= 0.0:
        return lam, q_matrix, 1.0
    scale = math.sqrt(1.0 + n * deficit)
    return lam / scale, (q_matrix + deficit * np.eye(n)) / scale ** 2, 1.0 / scale


@register_backend
class AdmmBackend(SolverBackend):
    """
    Over-relaxed ADMM with residual-balancing penalty

    Splits every PSD block H_k(lam, Q) = S_k with S_k in the PSD cone; the
    cone projection runs on the real embedding of each block. Measurements
    are normalized to unit norm internally, which leaves the optimal lam
    unchanged. The M x M system of the lam update is Ruiz-equilibrated before
    factoring and unscaled on every solve, so residuals and tolerances refer
    to the original problem.
    """

    name = 'admm'

    def solve(
        self,
        problem: ConicProblem,
        opts: SolverOptions,
        warm_start: Optional[DualSolution] = None
    ) -> DualSolution:
        n, m = problem.n_samples, problem.m_measurements

        y_norm = float(np.linalg.norm(problem.y))
        if y_norm == 0.0:
            logger.info("Measurements are zero: lam = 0 is optimal")
            return DualSolution(
                lam=np.zeros(m), Q=np.eye(n) / n, objective=0.0, status=SolverStatus.OPTIMAL,
                iterations=0, primal_residual=0.0, dual_residual=0.0,
                diagnostics={'backend': self.name, 'rho': opts.admm_rho, 'rescale': 1.0}
            )
        y = problem.y / y_norm

        block_model = problem.block_model
        sensing = block_model.sensing.entries.astype(np.complex128)
        weights = block_model.row_energy()
        normal_matrix = (sensing * weights[None, :]) @ sensing.conj().T
        equilibration = ruiz_scaling(normal_matrix)
        logger.debug(
            f"lambda system equilibrated: scaling range "
            f"[{equilibration.min():.3g}, {equilibration.max():.3g}]"
        )
        try:
            factor = linalg.cho_factor(equilibration[:, None] * normal_matrix * equilibration[None, :])
        except linalg.LinAlgError:
            raise SolverError(
                "normal matrix of the lambda update is singular",
                {'min_row_energy': float(weights.min()), 'sensing_rows': m}
            )

        lam, q_matrix = np.zeros(m, dtype=np.complex128), np.eye(n, dtype=np.complex128) / n
        if warm_start is not None and opts.warm_start:
            if warm_start.lam.size == m and warm_start.Q.shape == (n, n):
                lam, q_matrix = warm_start.lam.copy(), warm_start.Q.copy()
                logger.debug("ADMM warm start from previous solution")
            else:
                logger.debug(f"Warm start ignored: shapes {warm_start.lam.size}/{warm_start.Q.shape} do not match")

        pool = ThreadPoolExecutor(max_workers=opts.workers) if opts.workers > 1 and problem.block_count > 1 else None
        try:
            return self._iterate(problem, opts, y, y_norm, (factor, equilibration), lam, q_matrix, pool)
        finally:
            if pool is not None:
                pool.shutdown(wait=True)

    def _project(self, blocks: Sequence[np.ndarray], pool: Optional[ThreadPoolExecutor]) -> List[np.ndarray]:
        def project_one(block):
            return derealify(psd_project(realify(block, check=False)))
        if pool is None:
            return [project_one(block) for block in blocks]
        return list(pool.map(project_one, blocks))

    def _iterate(self, problem, opts, y, y_norm, lambda_system, lam, q_matrix, pool) -> DualSolution:
        n = problem.n_samples
        factor, equilibration = lambda_system
        block_model = problem.block_model
        sensing = block_model.sensing
        alpha = opts.over_relaxation
        rho = opts.admm_rho
        dimension = sum(size * size for size in problem.psd_block_sizes) // 4

        blocks = [_stack_block(q_matrix, z) for z in problem.dual_blocks(lam)]
        slack = self._project(blocks, pool)
        scaled_dual = [np.zeros_like(block) for block in blocks]

        history = deque(maxlen=Defaults.STATIONARY_WINDOW + 1)
        window, window_means = [], []
        best = None
        status = SolverStatus.MAX_ITERS
        primal_residual = dual_residual = float('inf')
        iteration = 0

        for iteration in range(1, opts.max_iters + 1):
            targets = [s - u for s, u in zip(slack, scaled_dual)]
            q_matrix = project_diag_constraints(sum(v[:n, :n] for v in targets) / len(targets))
            lower_left = [v[n:, :n] for v in targets]
            rhs = sensing.apply(apply_c_blocks(lower_left, block_model)) + y / (2.0 * rho)
            lam = equilibration * linalg.cho_solve(factor, equilibration * rhs)

            if not np.all(np.isfinite(lam)) or np.linalg.norm(lam) > Defaults.DIVERGENCE_LIMIT:
                status = SolverStatus.INFEASIBLE_SUSPECT
                logger.warning(f"ADMM diverged at iteration {iteration}")
                break

            blocks = [_stack_block(q_matrix, z) for z in problem.dual_blocks(lam)]
            relaxed = [alpha * h + (1.0 - alpha) * s for h, s in zip(blocks, slack)]
            previous = slack
            slack = self._project([r + u for r, u in zip(relaxed, scaled_dual)], pool)
            scaled_dual = [u + r - s for u, r, s in zip(scaled_dual, relaxed, slack)]

            primal_residual = math.sqrt(sum(np.vdot(h - s, h - s).real for h, s in zip(blocks, slack)))
            dual_residual = rho * math.sqrt(sum(np.vdot(s - p, s - p).real for s, p in zip(slack, previous)))
            block_norm = math.sqrt(sum(np.vdot(h, h).real for h in blocks))
            slack_norm = math.sqrt(sum(np.vdot(s, s).real for s in slack))
            dual_norm = rho * math.sqrt(sum(np.vdot(u, u).real for u in scaled_dual))
            eps_primal = math.sqrt(dimension) * opts.eps_abs + opts.eps_rel * max(block_norm, slack_norm)
            eps_dual = math.sqrt(dimension) * opts.eps_abs + opts.eps_rel * dual_norm

            objective = float(np.vdot(y, lam).real)
            history.append(objective)
            stationary = (
                len(history) == history.maxlen
                and abs(objective - history[0]) <= opts.eps_rel * max(1.0, abs(objective))
            )

            score = max(primal_residual / eps_primal, dual_residual / eps_dual)
            if best is None or score < best[0]:
                best = (score, lam.copy(), q_matrix.copy(), iteration, primal_residual, dual_residual)

            window.append(primal_residual)
            if len(window) == Defaults.MONOTONE_WINDOW:
                window_means.append(float(np.mean(window)))
                window = []

            if opts.verbose and iteration % opts.log_every == 0 and logger.is_enabled_for(logging.DEBUG):
                logger.debug(
                    f"ADMM iter {iteration}: obj={objective * y_norm:.9g} r={primal_residual:.3e} "
                    f"s={dual_residual:.3e} rho={rho:.3g}"
                )

            if primal_residual <= eps_primal and dual_residual <= eps_dual and stationary:
                status = SolverStatus.OPTIMAL
                break

            if opts.adaptive_rho and iteration % Defaults.ADAPT_EVERY == 0:
                if primal_residual > Defaults.ADAPT_RATIO * dual_residual:
                    rho *= 2.0
                    scaled_dual = [u / 2.0 for u in scaled_dual]
                elif dual_residual > Defaults.ADAPT_RATIO * primal_residual:
                    rho /= 2.0
                    scaled_dual = [u * 2.0 for u in scaled_dual]

        if status is not SolverStatus.OPTIMAL:
            if best is None:
                lam, q_matrix = np.zeros_like(lam), np.eye(n, dtype=np.complex128) / n
            else:
                _, lam, q_matrix, _, primal_residual, dual_residual = best

        increases = sum(1 for a, b in zip(window_means, window_means[1:]) if b > a)
        if increases:
            logger.warning(
                f"Primal residual rose in {increases} of {len(window_means) - 1} windows of "
                f"{Defaults.MONOTONE_WINDOW} iterations"
            )

        lam, q_matrix, rescale = restore_feasibility(problem, lam, q_matrix)
        min_eigenvalue = problem.min_block_eigenvalue(lam, q_matrix)
        equality_error = float(np.max(np.abs(problem.equality_residual(q_matrix))))
        if status is SolverStatus.OPTIMAL and (min_eigenvalue < -opts.eps_abs or equality_error > opts.eps_abs):
            logger.warning(
                f"Converged iterate fails the final check (min eigenvalue {min_eigenvalue:.3e}, "
                f"equality error {equality_error:.3e})"
            )
            status = SolverStatus.MAX_ITERS

        return DualSolution(
            lam=lam,
            Q=q_matrix,
            objective=problem.objective_value(lam),
            status=status,
            iterations=iteration,
            primal_residual=primal_residual,
            dual_residual=dual_residual,
            diagnostics={
                'backend': self.name,
                'rho': rho,
                'rescale': rescale,
                'min_block_eigenvalue': min_eigenvalue,
                'equality_error': equality_error,
                'residual_window_increases': increases,
                'collapsed': problem.collapsed,
            }
        )


@register_backend
class CvxpyBackend(SolverBackend):
    """
    Alternate backend handing the real-embedded SDP to cvxpy (optional dependency)
    """

    name = 'cvxpy'

    def solve(
        self,
        problem: ConicProblem,
        opts: SolverOptions,
        warm_start: Optional[DualSolution] = None
    ) -> DualSolution:
        try:
            import cvxpy as cp
        except ImportError:
            raise SolverError("the cvxpy backend needs the optional cvxpy package", {'backend': self.name})

        n, m = problem.n_samples, problem.m_measurements
        sensing = problem.block_model.sensing.entries.astype(np.complex128)

        lam_re, lam_im = cp.Variable(m), cp.Variable(m)
        q_re = cp.Variable((n, n), symmetric=True)
        q_im = cp.Variable((n, n))

        # lam_tilde = D^H lam
        tilde_re = sensing.real.T @ lam_re + sensing.imag.T @ lam_im
        tilde_im = sensing.real.T @ lam_im - sensing.imag.T @ lam_re

        constraints = [q_im == -q_im.T, cp.trace(q_re) == 1]
        for offset in range(1, n):
            constraints.append(sum(q_re[i + offset, i] for i in range(n - offset)) == 0)
            constraints.append(sum(q_im[i + offset, i] for i in range(n - offset)) == 0)

        for codebook in problem.block_model.codebooks:
            m_k = codebook.shape[1]
            c_re, c_im = codebook.real.T, codebook.imag.T
            z_re = c_re @ cp.diag(tilde_re) - c_im @ cp.diag(tilde_im)
            z_im = c_re @ cp.diag(tilde_im) + c_im @ cp.diag(tilde_re)
            block_re = cp.bmat([[q_re, z_re.T], [z_re, np.eye(m_k)]])
            block_im = cp.bmat([[q_im, -z_im.T], [z_im, np.zeros((m_k, m_k))]])
            embedded = cp.bmat([[block_re, -block_im], [block_im, block_re]])
            constraints.append((embedded + embedded.T) / 2 >> 0)

        objective = cp.Maximize(problem.y.real @ lam_re + problem.y.imag @ lam_im)
        cvx_problem = cp.Problem(objective, constraints)
        try:
            cvx_problem.solve()
        except cp.error.SolverError as error:
            raise SolverError(f"cvxpy failed: {error}", {'backend': self.name})

        if cvx_problem.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
            status = SolverStatus.OPTIMAL
        elif cvx_problem.status in (cp.INFEASIBLE, cp.UNBOUNDED, cp.INFEASIBLE_INACCURATE, cp.UNBOUNDED_INACCURATE):
            status = SolverStatus.INFEASIBLE_SUSPECT
        else:
            status = SolverStatus.MAX_ITERS

        if lam_re.value is None:
            lam, q_matrix = np.zeros(m, dtype=np.complex128), np.eye(n, dtype=np.complex128) / n
        else:
            lam = lam_re.value + 1j * lam_im.value
            q_matrix = q_re.value + 1j * q_im.value
        q_matrix = project_diag_constraints(q_matrix)
        lam, q_matrix, rescale = restore_feasibility(problem, lam, q_matrix)

        return DualSolution(
            lam=lam,
            Q=q_matrix,
            objective=problem.objective_value(lam),
            status=status,
            iterations=int(getattr(cvx_problem.solver_stats, 'num_iters', 0) or 0),
            primal_residual=0.0,
            dual_residual=0.0,
            diagnostics={
                'backend': self.name,
                'cvxpy_status': cvx_problem.status,
                'rescale': rescale,
            }
        )


def solve(
    problem: ConicProblem,
    opts: Optional[SolverOptions] = None,
    warm_start: Optional[DualSolution] = None
) -> DualSolution:
    """
    Solve an assembled dual SDP with the backend named in opts

    @param problem - Assembled problem
    @param opts - Solver options (defaults when omitted)
    @param warm_start - Previous solution used as initial point when shapes match
    @returns DualSolution

    @example
    solution = solve(assemble_dual_sdp(model, y), SolverOptions(eps_abs=1e-8))
    """
    opts = opts or SolverOptions()
    backend = get_backend(opts.backend)
    logger.info(
        f"Solving dual SDP with {backend.name}: N={problem.n_samples}, M={problem.m_measurements}, "
        f"blocks={problem.block_count}"
    )
    started = time.perf_counter()
    solution = backend.solve(problem, opts, warm_start)
    logger.info(
        f"Dual SDP {solution.status.value} after {solution.iterations} iterations "
        f"({time.perf_counter() - started:.2f} s): "
        f"objective={solution.objective:.9g}, primal residual={solution.primal_residual:.3e}, "
        f"dual residual={solution.dual_residual:.3e}"
    )
    return solution


def check_witness(problem: ConicProblem, lam: np.ndarray, q_matrix: np.ndarray, tol: float = 1e-12) -> bool:
    """True if (lam, Q) satisfies every constraint of the problem within tol"""
    if np.max(np.abs(problem.equality_residual(q_matrix))) > tol:
        return False
    if any(abs(diag_sum(q_matrix, offset)) > tol for offset in range(1, problem.n_samples)):
        return False
    return problem.min_block_eigenvalue(lam, q_matrix) >= -tol
