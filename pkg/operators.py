"""
GB2D - Measurement Operators

The lifted measurement map C, the composed operator B = D C and its adjoint
B*. Together with the lifting of a ground-truth scenario these bridge the
scenario generator and the dual SDP.

Codebooks are stored "already conjugated": the signal sent by user k is
conj(C_k) @ x_k, which makes C(X) = sum_k <X_k, c_n^k e_n^T> agree with the
unlifted model for complex codebooks as well as real ones.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from core_model import (
    DomainError,
    MatrixTuple,
    Scenario,
    SensingMatrix,
    steering_matrix,
)


@dataclass(frozen=True)
class MeasurementModel:
    """
    Known part of the measurement chain: codebooks and sensing matrix

    @param n_samples - Number of frequency samples N
    @param codebooks - Codebook matrices C_k (N x M_k)
    @param sensing - Sensing matrix D (M x N)
    """
    n_samples: int
    codebooks: Tuple[np.ndarray, ...]
    sensing: SensingMatrix

    def __post_init__(self) -> None:
        codebooks = tuple(np.asarray(c, dtype=np.complex128) for c in self.codebooks)
        object.__setattr__(self, 'codebooks', codebooks)
        for index, codebook in enumerate(codebooks):
            if codebook.ndim != 2 or codebook.shape[0] != self.n_samples:
                raise DomainError(
                    f"codebook {index} has shape {codebook.shape}, expected ({self.n_samples}, M_k)"
                )
        if self.sensing.n_samples != self.n_samples:
            raise DomainError(
                f"sensing matrix has {self.sensing.n_samples} columns, expected N={self.n_samples}"
            )

    @classmethod
    def from_scenario(cls, scenario: Scenario) -> 'MeasurementModel':
        return cls(
            n_samples=scenario.n_samples,
            codebooks=tuple(c.entries for c in scenario.codebooks),
            sensing=scenario.sensing,
        )

    @property
    def m_measurements(self) -> int:
        return self.sensing.m_measurements

    @property
    def user_count(self) -> int:
        return len(self.codebooks)

    @property
    def block_shapes(self) -> list:
        return [(codebook.shape[1], self.n_samples) for codebook in self.codebooks]

    def shares_codebook(self) -> bool:
        """True when every user employs the same codebook matrix"""
        first = self.codebooks[0]
        return all(c.shape == first.shape and np.array_equal(c, first) for c in self.codebooks[1:])

    def row_energy(self) -> np.ndarray:
        """w_n = sum_k ||c_n^k||^2, the diagonal of C C* on C^N"""
        return sum(np.sum(np.abs(c) ** 2, axis=1) for c in self.codebooks)


def encode_message(codebook: np.ndarray, message: np.ndarray) -> np.ndarray:
    """Transmitted spectrum of one user, conj(C_k) @ x_k"""
    return np.asarray(codebook).conj() @ np.asarray(message)


def _check_tuple(x_tuple: MatrixTuple, model: MeasurementModel) -> None:
    if len(x_tuple.blocks) != model.user_count:
        raise DomainError(f"matrix tuple has {len(x_tuple.blocks)} blocks, model has {model.user_count} users")
    for index, (shape, expected) in enumerate(zip(x_tuple.shapes, model.block_shapes)):
        if tuple(shape) != tuple(expected):
            raise DomainError(f"block {index} has shape {shape}, expected {expected}")


def lift_ground_truth(scenario: Scenario) -> MatrixTuple:
    """
    Lift a scenario into the matrix tuple X_k = sum_l g_l x_k a(tau_l)^T

    The steering vector enters with a plain transpose, no conjugation.

    @param scenario - Ground truth
    @returns MatrixTuple with blocks of shape M_k x N

    @example
    X = lift_ground_truth(scenario)
    np.linalg.matrix_rank(X.blocks[0])  # 1: every path shares the message
    """
    n = scenario.n_samples
    blocks = []
    for channel, message in zip(scenario.channels, scenario.messages):
        channel_row = steering_matrix(channel.delays, n) @ channel.amplitudes
        blocks.append(np.outer(message.coords, channel_row))
    return MatrixTuple(tuple(blocks))


def apply_c(x_tuple: MatrixTuple, model: MeasurementModel) -> np.ndarray:
    """
    Lifted measurement map: v_n = sum_k (c_n^k)^H X_k[:, n]

    @param x_tuple - Matrix tuple with blocks M_k x N
    @param model - Measurement model
    @returns complex vector of length N
    @throws DomainError - On shape mismatch
    """
    _check_tuple(x_tuple, model)
    return apply_c_blocks(x_tuple.blocks, model)


def forward(x_tuple: MatrixTuple, model: MeasurementModel) -> np.ndarray:
    """B(X) = D C(X), a vector of length M"""
    return model.sensing.apply(apply_c(x_tuple, model))


def adjoint(lam: np.ndarray, model: MeasurementModel) -> MatrixTuple:
    """
    Adjoint B* of the measurement operator

    Block k has column n equal to lam_tilde_n * c_n^k with lam_tilde = D^H lam,
    so that <B(X), lam> = <X, B*(lam)>.

    @param lam - Dual vector of length M
    @param model - Measurement model
    @returns MatrixTuple with blocks M_k x N
    @throws DomainError - If lam does not have length M
    """
    lam = np.asarray(lam, dtype=np.complex128).ravel()
    if lam.size != model.m_measurements:
        raise DomainError(f"dual vector has length {lam.size}, expected M={model.m_measurements}")
    lam_tilde = model.sensing.apply_adjoint(lam)
    return MatrixTuple(tuple(codebook.T * lam_tilde[None, :] for codebook in model.codebooks))


def apply_c_blocks(blocks: Sequence[np.ndarray], model: MeasurementModel) -> np.ndarray:
    """
    C applied to raw arrays: v_n = sum_k (c_n^k)^H blocks[k][:, n]

    Used inside the solver where blocks are scratch buffers rather than
    MatrixTuple values; no shape checks.
    """
    v = np.zeros(model.n_samples, dtype=np.complex128)
    for codebook, block in zip(model.codebooks, blocks):
        v += np.sum(codebook.conj() * block.T, axis=1)
    return v
