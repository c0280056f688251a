import csv
from dataclasses import replace

import numpy as np
import pytest

from config import LocalizeOptions
from conftest import make_scenario
from core_model import DomainError, Message, wrap_distance
from localize import (
    DelayEstimates,
    DualPolynomialSet,
    _merge,
    _squared_norm_and_derivatives,
    dual_atomic_norm,
    eval_dual_poly,
    eval_squared_norm,
    grid_norms,
    localize_all,
    read_config_csv,
    refine_peak,
    scan_peaks,
    squared_norm_coefficients,
    write_curve_csv,
    write_support_csv,
)
from operators import MeasurementModel
from scenario import synthesize_measurements
from sdp import assemble_dual_sdp, solve

N = 16


def dirichlet_row(tau, n=N, scale=1.0):
    """Coefficients whose polynomial is the normalized Dirichlet kernel centered at tau"""
    return scale * np.exp(-2j * np.pi * tau * np.arange(n)) / n


@pytest.fixture
def two_peak_block():
    return np.vstack([dirichlet_row(0.2), dirichlet_row(0.7, scale=0.9)])


def test_eval_matches_explicit_sum(rng):
    g = rng.standard_normal((3, N)) + 1j * rng.standard_normal((3, N))
    tau = 0.37
    expected = g @ np.exp(2j * np.pi * tau * np.arange(N))
    np.testing.assert_allclose(eval_dual_poly(g, tau), expected)


def test_eval_rejects_out_of_range():
    with pytest.raises(DomainError):
        eval_dual_poly(np.zeros((1, N)), 1.0)


def test_grid_norms_match_direct_evaluation(rng):
    g = rng.standard_normal((2, N)) + 1j * rng.standard_normal((2, N))
    grid = 4 * N
    direct = [np.linalg.norm(eval_dual_poly(g, j / grid)) for j in range(grid)]
    np.testing.assert_allclose(grid_norms(g, grid), direct, atol=1e-12)


def test_squared_norm_coefficients(rng):
    g = rng.standard_normal((2, N)) + 1j * rng.standard_normal((2, N))
    coefficients = squared_norm_coefficients(g)
    assert coefficients.shape == (2 * N - 1,)
    taus = rng.random(20)
    direct = [np.linalg.norm(eval_dual_poly(g, t)) ** 2 for t in taus]
    np.testing.assert_allclose(eval_squared_norm(coefficients, taus), direct, rtol=1e-10)


def test_dirichlet_peak_is_found_exactly():
    peaks = scan_peaks(dirichlet_row(0.313)[None, :])
    assert len(peaks) == 1
    tau, value = peaks[0]
    assert tau == pytest.approx(0.313, abs=1e-9)
    assert value == pytest.approx(1.0, abs=1e-12)


def test_refine_from_off_grid_start():
    g = dirichlet_row(0.313)[None, :]
    start = 0.313 + 0.4 / (16 * N)
    assert refine_peak(g, start) == pytest.approx(0.313, abs=1e-9)


def test_refine_wraps_around_zero():
    g = dirichlet_row(0.0005)[None, :]
    tau = refine_peak(g, 0.0)
    assert 0.0 <= tau < 1.0
    assert tau == pytest.approx(0.0005, abs=1e-9)


def test_two_peaks_and_threshold(two_peak_block):
    low = scan_peaks(two_peak_block, threshold=0.5)
    assert [round(tau, 6) for tau, _ in low] == [0.2, 0.7]
    high = scan_peaks(two_peak_block)
    assert [round(tau, 6) for tau, _ in high] == [0.2]
    assert set(high) <= set(low)


def test_threshold_monotonicity(rng):
    g = rng.standard_normal((2, N)) + 1j * rng.standard_normal((2, N))
    g /= dual_atomic_norm(g)
    counts = [len(scan_peaks(g, threshold=t)) for t in (0.3, 0.6, 0.9, 0.999)]
    assert counts == sorted(counts, reverse=True)
    assert counts[-1] >= 1


def test_grid_must_be_fine_enough():
    with pytest.raises(DomainError):
        scan_peaks(dirichlet_row(0.3)[None, :], grid_size=3 * N)


def test_merge_keeps_strongest_within_radius():
    merged = _merge([(0.1, 1.0), (0.101, 1.01), (0.5, 1.0)], radius=0.01)
    assert sorted(merged) == [(0.101, 1.01), (0.5, 1.0)]
    assert _merge([(0.999, 1.0), (0.001, 0.99)], radius=0.01) == [(0.999, 1.0)]


def test_dual_atomic_norm_of_dirichlet():
    assert dual_atomic_norm(dirichlet_row(0.41)[None, :]) == pytest.approx(1.0, abs=1e-12)
    assert dual_atomic_norm(np.zeros((2, N))) == 0.0


def test_expected_paths_keeps_strongest(two_peak_block):
    polys = DualPolynomialSet((two_peak_block,))
    estimates = localize_all(polys, LocalizeOptions(threshold=0.5, expected_paths=[1]))
    assert estimates.counts == [1]
    assert estimates.delays(0)[0] == pytest.approx(0.2, abs=1e-9)


def test_expected_paths_length_must_match(two_peak_block):
    polys = DualPolynomialSet((two_peak_block,))
    with pytest.raises(DomainError):
        localize_all(polys, LocalizeOptions(expected_paths=[1, 1]))


def test_estimates_from_delays():
    estimates = DelayEstimates.from_delays([[0.5, 0.1], [0.3]])
    np.testing.assert_array_equal(estimates.delays(0), [0.1, 0.5])
    assert estimates.counts == [2, 1]
    assert estimates.to_dict()[1] == [{'tau': 0.3, 'peak': 1.0}]


def test_curve_and_support_files(tmp_path, two_peak_block):
    polys = DualPolynomialSet((two_peak_block, dirichlet_row(0.45)[None, :]))
    estimates = localize_all(polys, LocalizeOptions(threshold=0.5))
    header = {'seed': 4}

    curve = write_curve_csv(polys, tmp_path / 'curve.csv', grid_size=4 * N, extra_points=[0.2001], header=header)
    lines = curve.read_text().splitlines()
    assert lines[0] == '# config: {"seed": 4}'
    assert lines[1] == 't,D1,D2'
    assert len(lines) == 2 + 4 * N + 1

    support = write_support_csv(polys, estimates, tmp_path / 'support.csv', header=header)
    rows = list(csv.reader(support.read_text().splitlines()[1:]))
    assert rows[0] == ['user', 'kind', 'tau', 'value']
    assert [row[0] for row in rows[1:]] == ['1', '1', '2']
    assert all(row[1] == 'estimated' for row in rows[1:])


def test_squared_norm_derivative_matches_finite_differences(rng):
    g = rng.standard_normal((2, N)) + 1j * rng.standard_normal((2, N))
    g /= dual_atomic_norm(g)
    step = 1e-6
    taus = rng.uniform(step, 1.0 - step, size=100)
    analytic = np.array([_squared_norm_and_derivatives(g, t)[1] for t in taus])
    numeric = np.array([
        (_squared_norm_and_derivatives(g, t + step)[0] - _squared_norm_and_derivatives(g, t - step)[0]) / (2 * step)
        for t in taus
    ])
    np.testing.assert_allclose(analytic, numeric, rtol=1e-6, atol=1e-6 * np.max(np.abs(analytic)))


def test_refined_peak_is_a_stationary_point(rng):
    g = rng.standard_normal((3, N)) + 1j * rng.standard_normal((3, N))
    grid = 16 * N
    values = grid_norms(g, grid)
    start = int(np.argmax(values)) / grid
    tau = refine_peak(g, start)
    step = 1e-6
    slope = (_squared_norm_and_derivatives(g, tau + step)[0] - _squared_norm_and_derivatives(g, tau - step)[0]) / (2 * step)
    scale = max(abs(_squared_norm_and_derivatives(g, t)[1]) for t in np.arange(grid) / grid)
    assert abs(slope) <= 1e-6 * scale
    assert np.linalg.norm(eval_dual_poly(g, tau)) >= values.max() - 1e-12


def test_strongest_peak_matches_dense_grid_search(rng):
    dense = 2 ** 16
    for _ in range(20):
        g = rng.standard_normal((2, N)) + 1j * rng.standard_normal((2, N))
        values = grid_norms(g, dense)
        best_tau, best_value = int(np.argmax(values)) / dense, float(values.max())
        peaks = scan_peaks(g, threshold=0.99 * best_value)
        tau, value = max(peaks, key=lambda peak: peak[1])
        assert value >= best_value - 1e-12
        assert value <= best_value * (1 + 1e-5)
        assert wrap_distance(tau, best_tau) <= 2.0 / dense


def test_global_message_phase_does_not_move_delays(rng, fast_solver):
    n = 16
    scenario = make_scenario(
        n, delays=[[0.1, 0.55], [0.3]], gains=[[1.0, 0.7 - 0.2j], [0.9j]],
        codebooks=[rng.standard_normal((n, 2)) for _ in range(2)],
        messages=[[0.6, 0.8], [1.0, -0.5j]],
    )
    rotated_messages = (Message(np.exp(0.9j) * scenario.messages[0].coords), scenario.messages[1])
    rotated = replace(scenario, messages=rotated_messages)

    results = []
    for case in (scenario, rotated):
        model = MeasurementModel.from_scenario(case)
        solution = solve(assemble_dual_sdp(model, synthesize_measurements(case)), fast_solver)
        results.append(localize_all(DualPolynomialSet.from_solution(solution.lam, model)))

    original, moved = results
    assert original.counts == moved.counts == [2, 1]
    for user in range(2):
        np.testing.assert_allclose(moved.delays(user), original.delays(user), atol=1e-6)


def test_read_config_csv_splits_off_the_config_line(tmp_path, two_peak_block):
    polys = DualPolynomialSet((two_peak_block,))
    estimates = localize_all(polys, LocalizeOptions(threshold=0.5))
    path = write_support_csv(polys, estimates, tmp_path / 'support.csv', header={'seed': 4, 'preset': 'fig2'})
    config, rows = read_config_csv(path)
    assert config == {'preset': 'fig2', 'seed': 4}
    assert [row['kind'] for row in rows] == ['estimated', 'estimated']
    assert float(rows[0]['tau']) == pytest.approx(0.2, abs=1e-9)

    bare = write_support_csv(polys, estimates, tmp_path / 'bare.csv')
    config, rows = read_config_csv(bare)
    assert config is None and len(rows) == 2
