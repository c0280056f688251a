import json
import logging

import numpy as np
import pytest

from config import GenConfig
from conftest import make_scenario
from constants import AmplitudeDist, MessageMode
from core_model import GenerationError, ScenarioParseError, minimum_separation
from scenario import (
    SeededStream,
    generate_scenario,
    load_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    synthesize_measurements,
    uniform_subsample_matrix,
    user_contribution,
)


def test_stream_is_reproducible():
    first, second = SeededStream(42), SeededStream(42)
    np.testing.assert_array_equal(first.uniform(10), second.uniform(10))
    np.testing.assert_array_equal(first.normal(7), second.normal(7))


def test_stream_uniforms_in_unit_interval():
    values = SeededStream(3).uniform(10000)
    assert values.min() >= 0.0 and values.max() < 1.0
    assert abs(values.mean() - 0.5) < 0.02


def test_stream_normals_have_unit_variance():
    values = SeededStream(5).normal(20001)
    assert values.shape == (20001,)
    assert abs(values.std() - 1.0) < 0.03


def test_generation_is_deterministic(small_gen):
    assert scenario_to_dict(generate_scenario(small_gen)) == scenario_to_dict(generate_scenario(small_gen))


def test_different_seeds_differ(small_gen):
    other = small_gen.with_overrides(seed=small_gen.seed + 1)
    assert scenario_to_dict(generate_scenario(small_gen)) != scenario_to_dict(generate_scenario(other))


def test_generated_shapes_and_separation(small_gen, small_scenario):
    assert small_scenario.path_counts == [2, 1]
    assert small_scenario.message_sizes == [3, 3]
    assert minimum_separation(small_scenario.channels, cross_user=True) >= 1.0 / small_gen.n_samples
    for message in small_scenario.messages:
        assert np.linalg.norm(message.coords) == pytest.approx(1.0)


def test_positive_messages_and_unit_modulus_amplitudes():
    cfg = GenConfig(
        n_samples=16, path_counts=[3], message_sizes=[4], seed=2,
        message_mode=MessageMode.UNIT_SPHERE_POSITIVE,
        amplitude_dist=AmplitudeDist.UNIT_MODULUS_RANDOM_PHASE,
    )
    scenario = generate_scenario(cfg)
    coords = scenario.messages[0].coords
    assert scenario.messages[0].positivity_convention
    assert np.all(coords.real >= 0) and np.all(coords.imag == 0)
    np.testing.assert_allclose(np.abs(scenario.channels[0].amplitudes), 1.0)


def test_per_user_separation_allows_close_cross_user_delays():
    cfg = GenConfig(n_samples=8, path_counts=[4, 4], message_sizes=[1, 1], seed=9, cross_user_separation=False)
    scenario = generate_scenario(cfg)
    assert minimum_separation(scenario.channels) >= 1.0 / 8


def test_crowded_separation_fails(monkeypatch):
    monkeypatch.setattr('constants.Defaults.MAX_REJECTION_ROUNDS', 2000)
    cfg = GenConfig(n_samples=8, path_counts=[3, 3], message_sizes=[1, 1], seed=1, min_separation=0.166)
    with pytest.raises(GenerationError):
        generate_scenario(cfg)


def test_uniform_subsample_rows():
    sensing = uniform_subsample_matrix(8, 3)
    np.testing.assert_array_equal(np.flatnonzero(sensing.entries.any(axis=0)), [0, 2, 5])
    assert not sensing.identity
    assert uniform_subsample_matrix(8, 8).identity


def test_synthesis_sums_user_contributions(small_scenario):
    total = user_contribution(small_scenario, 0) + user_contribution(small_scenario, 1)
    np.testing.assert_allclose(synthesize_measurements(small_scenario), total)


def test_save_and_load_preserve_scenario(tmp_path, small_scenario):
    path = save_scenario(small_scenario, tmp_path / 'scenario.json', header={'seed': 11})
    loaded, report = load_scenario(path)
    assert report.ok
    assert scenario_to_dict(loaded) == scenario_to_dict(small_scenario)
    assert json.loads(path.read_text())['config'] == {'seed': 11}


def test_save_is_byte_identical_on_rerun(tmp_path, small_gen):
    first = save_scenario(generate_scenario(small_gen), tmp_path / 'a.json').read_bytes()
    second = save_scenario(generate_scenario(small_gen), tmp_path / 'b.json').read_bytes()
    assert first == second


def test_missing_key_is_named(small_scenario):
    document = scenario_to_dict(small_scenario)
    del document['users'][1]['message']
    with pytest.raises(ScenarioParseError) as error:
        scenario_from_dict(document)
    assert error.value.key == 'users[1].message'


def test_wrong_message_length_is_named(small_scenario):
    document = scenario_to_dict(small_scenario)
    document['users'][0]['message'] = document['users'][0]['message'][:2]
    with pytest.raises(ScenarioParseError) as error:
        scenario_from_dict(document)
    assert error.value.key == 'users[0].message'


def test_malformed_pairs_are_rejected(small_scenario):
    document = scenario_to_dict(small_scenario)
    document['users'][0]['paths'][0]['g'] = [1.0, 2.0, 3.0]
    with pytest.raises(ScenarioParseError) as error:
        scenario_from_dict(document)
    assert error.value.key == 'users[0].paths[0].g'


def test_malformed_json(tmp_path):
    path = tmp_path / 'broken.json'
    path.write_text('{"n_samples": 8, ')
    with pytest.raises(ScenarioParseError):
        load_scenario(path)


def test_close_delays_load_with_a_warning(tmp_path, caplog):
    n = 16
    rng = np.random.default_rng(8)
    close = make_scenario(
        n, delays=[[0.25, 0.25 + 0.5 / n]], gains=[[1.0, 0.5j]],
        codebooks=[rng.standard_normal((n, 2))], messages=[[0.6, 0.8]],
    )
    path = save_scenario(close, tmp_path / 'close.json')
    with caplog.at_level(logging.WARNING):
        loaded, report = load_scenario(path)
    assert report.ok
    assert report.min_separation == pytest.approx(0.5 / n)
    assert len(report.warnings) == 1
    assert 'below 1/N' in caplog.text
    np.testing.assert_allclose(loaded.channels[0].delays, [0.25, 0.25 + 0.5 / n])
