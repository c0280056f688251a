from dataclasses import replace

import numpy as np
import pytest

from config import GenConfig
from conftest import make_scenario
from constants import SensingMode
from core_model import Codebook, DomainError, MatrixTuple, SensingMatrix
from operators import (
    MeasurementModel,
    adjoint,
    apply_c,
    apply_c_blocks,
    encode_message,
    forward,
    lift_ground_truth,
)
from scenario import generate_scenario, synthesize_measurements, uniform_subsample_matrix


def _random_tuple(rng, model):
    return MatrixTuple(tuple(
        rng.standard_normal(shape) + 1j * rng.standard_normal(shape) for shape in model.block_shapes
    ))


@pytest.fixture
def complex_model(rng):
    n = 12
    codebooks = tuple(rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m)) for m in (3, 2))
    return MeasurementModel(n, codebooks, uniform_subsample_matrix(n, 8))


def _random_model(rng):
    """Random N, K, M_k with complex codebooks and full, subsampled or dense sensing"""
    n = int(rng.integers(2, 33))
    sizes = rng.integers(1, min(n, 6) + 1, size=int(rng.integers(1, 4)))
    codebooks = tuple(rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m)) for m in sizes)
    kind = rng.integers(3)
    if kind == 0:
        sensing = SensingMatrix.eye(n)
    elif kind == 1:
        sensing = uniform_subsample_matrix(n, int(rng.integers(1, n + 1)))
    else:
        rows = int(rng.integers(1, n + 1))
        sensing = SensingMatrix(rng.standard_normal((rows, n)) + 1j * rng.standard_normal((rows, n)))
    return MeasurementModel(n, codebooks, sensing)


def test_adjoint_identity_over_random_instances():
    for seed in range(200):
        rng = np.random.default_rng(seed)
        model = _random_model(rng)
        x_tuple = _random_tuple(rng, model)
        lam = rng.standard_normal(model.m_measurements) + 1j * rng.standard_normal(model.m_measurements)
        left = np.vdot(lam, forward(x_tuple, model))
        right = x_tuple.inner(adjoint(lam, model))
        assert abs(left - right) <= 1e-10 * x_tuple.norm() * np.linalg.norm(lam), f"seed {seed}"


def test_forward_is_linear(rng):
    for _ in range(20):
        model = _random_model(rng)
        x_tuple, other = _random_tuple(rng, model), _random_tuple(rng, model)
        a, b = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        np.testing.assert_allclose(
            forward(a * x_tuple + b * other, model),
            a * forward(x_tuple, model) + b * forward(other, model),
            rtol=1e-12, atol=1e-12 * (x_tuple.norm() + other.norm()),
        )


@pytest.mark.parametrize("seed", range(100))
def test_lifting_matches_synthesis_on_generated_scenarios(seed):
    rng = np.random.default_rng(1000 + seed)
    n = int(rng.integers(12, 41))
    users = int(rng.integers(1, 4))
    cfg = GenConfig(
        n_samples=n,
        path_counts=[int(p) for p in rng.integers(1, 4, size=users)],
        message_sizes=[int(m) for m in rng.integers(1, 6, size=users)],
        sensing_mode=SensingMode.UNIFORM_SUBSAMPLE if seed % 2 else SensingMode.IDENTITY,
        sensing_rows=int(rng.integers(n // 2, n + 1)) if seed % 2 else None,
        seed=seed,
    )
    scenario = generate_scenario(cfg)
    if seed % 3 == 0:
        complex_books = tuple(
            Codebook(user_index=c.user_index, entries=c.entries + 1j * rng.standard_normal(c.entries.shape))
            for c in scenario.codebooks
        )
        scenario = replace(scenario, codebooks=complex_books)

    direct = synthesize_measurements(scenario)
    lifted = forward(lift_ground_truth(scenario), MeasurementModel.from_scenario(scenario))
    assert np.linalg.norm(lifted - direct) <= 1e-10 * np.linalg.norm(direct)


def test_lifted_forward_equals_direct_synthesis(small_scenario):
    model = MeasurementModel.from_scenario(small_scenario)
    np.testing.assert_allclose(
        forward(lift_ground_truth(small_scenario), model),
        synthesize_measurements(small_scenario),
        atol=1e-12,
    )


def test_lift_is_rank_one_per_user(small_scenario):
    for block in lift_ground_truth(small_scenario).blocks:
        assert np.linalg.matrix_rank(block, tol=1e-9) == 1


def test_apply_c_single_user_single_path(rng):
    n = 6
    codebook = rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))
    scenario = make_scenario(n, [[0.4]], [[2.0]], [codebook], [[0.6, 0.8j]])
    model = MeasurementModel.from_scenario(scenario)
    expected = 2.0 * np.exp(-2j * np.pi * 0.4 * np.arange(n)) * encode_message(codebook, scenario.messages[0].coords)
    np.testing.assert_allclose(apply_c(lift_ground_truth(scenario), model), expected, atol=1e-12)


def test_apply_c_blocks_matches_apply_c(rng, complex_model):
    x_tuple = _random_tuple(rng, complex_model)
    np.testing.assert_allclose(apply_c_blocks(x_tuple.blocks, complex_model), apply_c(x_tuple, complex_model))


def test_row_energy_is_diagonal_of_c_c_star(rng, complex_model):
    # C(C*(v)) = diag(w) v for v in C^N
    v = rng.standard_normal(12) + 1j * rng.standard_normal(12)
    blocks = [c.T * v[None, :] for c in complex_model.codebooks]
    np.testing.assert_allclose(apply_c_blocks(blocks, complex_model), complex_model.row_energy() * v)


def test_shape_mismatch_raises(rng, complex_model):
    with pytest.raises(DomainError):
        apply_c(MatrixTuple.zeros([(3, 12)]), complex_model)
    with pytest.raises(DomainError):
        apply_c(MatrixTuple.zeros([(3, 12), (3, 12)]), complex_model)
    with pytest.raises(DomainError):
        adjoint(np.zeros(5), complex_model)


def test_shares_codebook(rng):
    c = rng.standard_normal((5, 2))
    assert MeasurementModel(5, (c, c.copy()), uniform_subsample_matrix(5, 5)).shares_codebook()
    assert not MeasurementModel(5, (c, c + 1), uniform_subsample_matrix(5, 5)).shares_codebook()
