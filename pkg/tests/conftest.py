"""Shared fixtures: small hand-built and generated scenarios"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Modules live at the repository root
sys.path.insert(0, str(Path(__file__).parent.parent))

from config import GenConfig, SolverOptions
from core_model import ChannelSpec, Codebook, Message, Scenario, SensingMatrix
from operators import MeasurementModel
from scenario import generate_scenario, synthesize_measurements
from sdp import assemble_dual_sdp, solve


def make_scenario(n, delays, gains, codebooks, messages, sensing=None, seed=0):
    """Scenario from plain arrays, one entry per user"""
    return Scenario(
        n_samples=n,
        codebooks=tuple(Codebook(user_index=k, entries=c) for k, c in enumerate(codebooks)),
        channels=tuple(ChannelSpec(delays=d, amplitudes=g) for d, g in zip(delays, gains)),
        messages=tuple(Message(np.asarray(x) / np.linalg.norm(x)) for x in messages),
        sensing=sensing or SensingMatrix.eye(n),
        seed=seed,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_gen():
    return GenConfig(n_samples=32, path_counts=[2, 1], message_sizes=[3, 3], seed=11)


@pytest.fixture
def small_scenario(small_gen):
    return generate_scenario(small_gen)


@pytest.fixture
def single_path_scenario(rng):
    """K=1, P=1, M_1=1 with |g| = 1 at tau = 0.3"""
    n = 8
    return make_scenario(
        n,
        delays=[[0.3]],
        gains=[[0.8 - 0.6j]],
        codebooks=[rng.standard_normal((n, 1))],
        messages=[[1.0]],
    )


@pytest.fixture
def fast_solver():
    return SolverOptions(eps_abs=1e-7, eps_rel=1e-6, max_iters=30000)


@pytest.fixture
def in_tmp(tmp_path, monkeypatch):
    """Run inside an empty directory so log and output files stay there"""
    monkeypatch.chdir(tmp_path)
    for variable in ('GB2D_OUT_DIR', 'GB2D_LOG_FILE', 'GB2D_LOG_LEVEL', 'GB2D_MAX_ITERS',
                     'GB2D_EPS_ABS', 'GB2D_EPS_REL', 'GB2D_WORKERS'):
        monkeypatch.delenv(variable, raising=False)
    return tmp_path


@pytest.fixture(scope='session')
def separated_solutions():
    """
    Twenty noise-free well-separated instances (K in {1, 2}, N in {32, 64},
    P_k <= 3, M_k <= 5, D = I), each with its dual solution
    """
    instances = []
    for index in range(20):
        n = 32 if index < 10 else 64
        users = 1 + index % 2
        cfg = GenConfig(
            n_samples=n,
            path_counts=[1 + (index // 2) % 3] * users,
            message_sizes=[1 + index % 5] * users,
            min_separation=2.5 / n,
            seed=500 + index,
        )
        scenario = generate_scenario(cfg)
        model = MeasurementModel.from_scenario(scenario)
        problem = assemble_dual_sdp(model, synthesize_measurements(scenario))
        instances.append((scenario, solve(problem, SolverOptions())))
    return instances
