import pytest

from config import build_experiment_config
from constants import Defaults, SolverStatus
from gb2d_pipeline import Gb2dPipeline, json_safe
from localize import read_config_csv


def _pipeline(out_dir, preset='minimal', **experiment):
    return Gb2dPipeline(build_experiment_config(
        preset=preset,
        solver_overrides={'eps_abs': 1e-7, 'eps_rel': 1e-6},
        experiment_overrides={'out_dir': str(out_dir), **experiment},
    ))


def test_json_safe_replaces_non_finite():
    assert json_safe({'a': float('inf'), 'b': [float('nan'), 1.5]}) == {'a': None, 'b': [None, 1.5]}


def test_minimal_pipeline_end_to_end(in_tmp):
    pipeline = _pipeline(in_tmp / 'out')
    record = pipeline.run_pipeline()
    assert record.solution.status is SolverStatus.OPTIMAL
    assert record.estimates.counts == [1]
    assert record.recovery.max_delay_error <= 1e-3
    assert record.recovery.success
    for name in (Defaults.SCENARIO_FILE, Defaults.SOLUTION_FILE, Defaults.RESULT_FILE,
                 Defaults.CURVE_FILE, Defaults.SUPPORT_FILE, Defaults.POLAR_FILE):
        assert (in_tmp / 'out' / name).exists()


def test_pipeline_files_are_reproducible(in_tmp):
    pipeline = _pipeline(in_tmp / 'out')
    pipeline.run_pipeline()
    first = {name: (in_tmp / 'out' / name).read_bytes() for name in (Defaults.RESULT_FILE, Defaults.CURVE_FILE)}
    pipeline.run_pipeline()
    assert all((in_tmp / 'out' / name).read_bytes() == data for name, data in first.items())


def test_polar_file_has_unit_circle_points(in_tmp):
    _pipeline(in_tmp / 'out').run_pipeline()
    config, rows = read_config_csv(in_tmp / 'out' / Defaults.POLAR_FILE)
    assert config['preset'] == 'minimal'
    assert {row['kind'] for row in rows} == {'true', 'estimated'}
    for row in rows:
        assert float(row['x']) ** 2 + float(row['y']) ** 2 == pytest.approx(1.0)


def test_sweep_needs_two_n_values(in_tmp):
    with pytest.raises(ValueError):
        _pipeline(in_tmp / 'out', n_values=[8]).sweep()


@pytest.mark.slow
def test_sweep_rows_and_reproducibility(in_tmp):
    pipeline = _pipeline(in_tmp / 'out', n_values=[8, 16], repetitions=2)
    summaries = pipeline.sweep()
    assert [s.n_samples for s in summaries] == [8, 16]
    assert [len(s.rows) for s in summaries] == [2, 2]
    assert [row.seed for row in summaries[0].rows] == [row.seed for row in summaries[1].rows]

    sweep_file = in_tmp / 'out' / Defaults.SWEEP_FILE
    lines = sweep_file.read_text().splitlines()
    assert lines[1] == 'N,mse_mean,mse_median,success_rate,delay_err_mean'
    assert len(lines) == 4
    runs = (in_tmp / 'out' / Defaults.SWEEP_RUNS_FILE).read_text().splitlines()
    assert len(runs) == 2 + 4

    first = sweep_file.read_bytes()
    pipeline.sweep()
    assert sweep_file.read_bytes() == first


@pytest.mark.slow
def test_fig2_recovers_all_three_paths(in_tmp):
    record = _pipeline(in_tmp / 'out', preset='fig2').run_pipeline()
    assert record.estimates.counts == [2, 1]
    assert record.recovery.max_delay_error <= 1e-3
    assert record.certificate.certified


@pytest.mark.slow
def test_fig4_mse_decreases_with_n(in_tmp):
    summaries = _pipeline(in_tmp / 'out', preset='fig4', repetitions=10).sweep(write=False)
    assert [s.n_samples for s in summaries] == [16, 32, 64]
    means = [s.mse_mean for s in summaries]
    assert all(later < earlier for earlier, later in zip(means, means[1:]))
    assert means[-1] <= 1e-3
