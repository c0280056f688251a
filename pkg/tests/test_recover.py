from dataclasses import replace
from itertools import permutations

import numpy as np
import pytest

from config import GenConfig
from conftest import make_scenario
from constants import AlignConvention, SolverStatus
from core_model import DomainError, steering_matrix, steering_vector, wrap_distance
from localize import DelayEstimates, DualPolynomialSet, localize_all
from operators import MeasurementModel
from recover import (
    align_ambiguity,
    certify,
    factor_rank_one,
    least_squares_paths,
    match_delays,
    message_mse,
    path_dictionary,
    positivity_report,
    recover_all,
)
from scenario import generate_scenario, synthesize_measurements
from sdp import DualSolution, assemble_dual_sdp, solve


def _zero_solution(n, m):
    return DualSolution(
        lam=np.zeros(m), Q=np.eye(n) / n, objective=0.0, status=SolverStatus.OPTIMAL,
        iterations=0, primal_residual=0.0, dual_residual=0.0,
    )


def test_factor_rank_one_recovers_outer_product(rng):
    x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    x /= np.linalg.norm(x)
    g = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    message, amplitudes, ratio = factor_rank_one(np.outer(x, g))
    assert ratio < 1e-12
    assert np.linalg.norm(message) == pytest.approx(1.0)
    assert abs(np.vdot(message, x)) == pytest.approx(1.0)
    np.testing.assert_allclose(np.outer(message, amplitudes), np.outer(x, g), atol=1e-12)


def test_factor_rank_one_single_path():
    message, amplitudes, ratio = factor_rank_one(np.array([[3.0], [4.0]]))
    assert ratio == 0.0
    np.testing.assert_allclose(np.abs(message), [0.6, 0.8])
    assert abs(amplitudes[0]) == pytest.approx(5.0)


def test_factor_rank_one_rejects_zero():
    with pytest.raises(DomainError, match="no energy on user"):
        factor_rank_one(np.zeros((3, 2)))


def test_oracle_alignment_returns_truth(rng):
    x = np.abs(rng.standard_normal(5))
    x /= np.linalg.norm(x)
    g = np.array([1.0 + 2j])
    phase = np.exp(1j * 2.1)
    aligned, amplitudes = align_ambiguity(phase * x, g / phase, AlignConvention.ORACLE, reference=x)
    np.testing.assert_allclose(aligned, x, atol=1e-14)
    np.testing.assert_allclose(amplitudes, g)


def test_positivity_alignment_makes_positive_message_real():
    x = np.array([0.6, 0.8]) * np.exp(-1j * 0.7)
    aligned, amplitudes = align_ambiguity(x, np.array([2.0]))
    np.testing.assert_allclose(aligned, [0.6, 0.8], atol=1e-14)
    np.testing.assert_allclose(np.outer(aligned, amplitudes), np.outer(x, [2.0]))
    np.testing.assert_allclose(positivity_report(aligned), [0.6, 0.8])


def test_oracle_alignment_needs_reference():
    with pytest.raises(DomainError):
        align_ambiguity(np.ones(2), np.ones(1), AlignConvention.ORACLE)


def test_message_mse():
    assert message_mse(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        message_mse(np.ones(2), np.ones(3))


def test_match_delays_wraps_around():
    match = match_delays([0.99], [0.01])
    assert match.pairs[0][2] == pytest.approx(0.02)
    assert match.exact_count


def test_match_delays_reports_misses_and_false_alarms():
    match = match_delays([0.1, 0.5, 0.8], [0.52])
    assert match.pairs == [(1, 0, pytest.approx(0.02))]
    assert match.false_alarms == [0, 2]
    assert match_delays([], [0.3]).misses == [0]


@pytest.mark.parametrize("count", [1, 2, 3, 4, 5])
def test_match_delays_equals_brute_force(rng, count):
    for _ in range(20):
        estimated, truth = rng.random(count), rng.random(count)
        match = match_delays(estimated, truth)
        brute = min(
            sum(min(abs(e - t), 1 - abs(e - t)) for e, t in zip(estimated[list(order)], truth))
            for order in permutations(range(count))
        )
        assert match.total_cost == pytest.approx(brute, abs=1e-12)


def test_path_dictionary_shape(small_scenario):
    model = MeasurementModel.from_scenario(small_scenario)
    estimates = DelayEstimates.from_delays([c.delays for c in small_scenario.channels])
    assert path_dictionary(model, estimates).shape == (32, 2 * 3 + 1 * 3)


def test_recovery_with_true_delays_is_exact(small_scenario):
    model = MeasurementModel.from_scenario(small_scenario)
    y = synthesize_measurements(small_scenario)
    estimates = DelayEstimates.from_delays([c.delays for c in small_scenario.channels])

    fit = least_squares_paths(y, model, estimates)
    assert fit.residual < 1e-10
    assert not fit.underdetermined

    result = recover_all(y, model, estimates, truth=small_scenario)
    assert result.success
    assert result.mse_mean < 1e-18
    assert result.max_delay_error == 0.0
    assert result.primal_value == pytest.approx(small_scenario.total_amplitude, rel=1e-9)
    assert result.duality_gap is None
    for user, channel, message in zip(result.users, small_scenario.channels, small_scenario.messages):
        assert user.rank_one_ratio < 1e-9
        np.testing.assert_allclose(
            np.outer(user.message, user.amplitudes), np.outer(message.coords, channel.amplitudes), atol=1e-9
        )


def test_recovery_with_missing_user_delays(small_scenario):
    model = MeasurementModel.from_scenario(small_scenario)
    y = synthesize_measurements(small_scenario)
    estimates = DelayEstimates.from_delays([small_scenario.channels[0].delays, []])
    result = recover_all(y, model, estimates, truth=small_scenario)
    assert result.users[1].message is None
    assert result.users[1].match.misses == [0]
    assert not result.success
    assert result.mse_mean is None


def test_recover_result_dict_is_finite(small_scenario):
    model = MeasurementModel.from_scenario(small_scenario)
    y = synthesize_measurements(small_scenario)
    estimates = DelayEstimates.from_delays([[], []])
    document = recover_all(y, model, estimates, truth=small_scenario, dual_value=1.0).to_dict()
    assert document['max_delay_error'] is None
    assert document['duality_gap'] == pytest.approx(-1.0)


def test_certify_rejects_zero_dual(small_scenario):
    n = small_scenario.n_samples
    report = certify(small_scenario, _zero_solution(n, n))
    assert not report.certified
    assert all(user.on_support_deviation == pytest.approx(1.0) for user in report.users)
    assert all(user.off_support_max == 0.0 for user in report.users)


def test_certify_flags_close_delays(rng):
    n = 16
    scenario = make_scenario(
        n, delays=[[0.3, 0.3 + 0.4 / n]], gains=[[1.0, -1.0]],
        codebooks=[rng.standard_normal((n, 1))], messages=[[1.0]],
    )
    report = certify(scenario, _zero_solution(n, n))
    assert not report.users[0].separation_ok
    assert not report.certified


def test_certify_dimension_mismatch(small_scenario):
    with pytest.raises(DomainError):
        certify(small_scenario, _zero_solution(16, 16))
    with pytest.raises(DomainError):
        certify(small_scenario, _zero_solution(32, 20))


def test_certificate_dict_has_no_infinities(single_path_scenario):
    document = certify(single_path_scenario, _zero_solution(8, 8)).to_dict()
    assert document['users'][0]['separation'] is None
    assert document['certified'] is False


@pytest.mark.slow
def test_certificates_on_separated_instances(separated_solutions):
    certified = 0
    for scenario, solution in separated_solutions:
        report = certify(scenario, solution)
        if report.certified:
            certified += 1
            for user in report.users:
                assert user.off_support_max <= 1 - 1e-3
                assert user.on_support_deviation <= 1e-2
    assert certified >= 18


@pytest.mark.slow
def test_negated_dual_is_not_certified(separated_solutions):
    scenario, solution = separated_solutions[0]
    flipped = replace(solution, lam=-solution.lam, objective=-solution.objective)
    report = certify(scenario, flipped)
    assert not report.certified
    assert all(user.on_support_deviation > 1.0 for user in report.users)


def _brute_force_delay(y, codebook, grid_size=10 ** 4):
    """Grid delay minimizing min_b ||y - b a(tau) . conj(c)||, with b in closed form"""
    taus = np.arange(grid_size) / grid_size
    columns = steering_matrix(taus, len(y)) * codebook.conj()[:, None]
    # ||column|| does not depend on tau, so the best fit maximizes |column^H y|
    return float(taus[np.argmax(np.abs(columns.conj().T @ y))])


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(25))
def test_single_path_matches_brute_force_fit(seed, fast_solver):
    scenario = generate_scenario(GenConfig(n_samples=8, path_counts=[1], message_sizes=[1], seed=seed))
    model = MeasurementModel.from_scenario(scenario)
    y = synthesize_measurements(scenario)
    solution = solve(assemble_dual_sdp(model, y), fast_solver)
    estimates = localize_all(DualPolynomialSet.from_solution(solution.lam, model))
    assert estimates.counts == [1]

    tau = estimates.delays(0)[0]
    codebook = scenario.codebooks[0].entries[:, 0]
    assert wrap_distance(tau, _brute_force_delay(y, codebook)) <= 1e-3

    column = steering_vector(tau, 8) * codebook.conj()
    closed_form = np.vdot(column, y) / np.vdot(column, column)
    fit = least_squares_paths(y, model, estimates)
    assert fit.coefficients[0][0, 0] == pytest.approx(closed_form, rel=1e-8)
