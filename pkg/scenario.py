"""
GB2D - Scenario Generation, Synthesis and Persistence

Deterministic random scenarios in the style of the published experiments,
direct synthesis of the measurements y = D sum_k sum_l g a(tau) . conj(C_k) x_k,
and the scenario JSON format.

Random stream: numpy's Philox-4x64-10 counter-based generator keyed with the
64-bit seed (counter starting at zero). Uniforms take the top 53 bits of each
64-bit word, u = (w >> 11) * 2**-53; normals come from Box-Muller pairs
z0 = sqrt(-2 ln(1 - u1)) cos(2 pi u2), z1 = ... sin(2 pi u2). Draw order:
all delays (users in order, rejection sampled), then per user the codebook
(row-major), the message and the amplitudes.
"""

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Tuple

import numpy as np

from config import GenConfig
from constants import AmplitudeDist, Defaults, MessageMode, SensingMode
from core_model import (
    ChannelSpec,
    Codebook,
    DomainError,
    GenerationError,
    Message,
    Scenario,
    ScenarioParseError,
    SensingMatrix,
    ValidationReport,
    minimum_separation,
    steering_matrix,
    validate_scenario,
    wrap_distance,
)
from logger_utils import get_logger
from operators import encode_message


logger = get_logger(__name__)

# Draws allowed for one delay before the whole placement restarts
_DRAWS_PER_DELAY = 1000


class SeededStream:
    """
    Reproducible random stream (Philox counter-based, Box-Muller normals)

    @param seed - 64-bit integer key

    @example
    stream = SeededStream(7)
    stream.normal(4)
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._bits = np.random.Philox(key=self.seed)

    def uniform(self, count: int) -> np.ndarray:
        """count uniforms in [0, 1)"""
        raw = self._bits.random_raw(count)
        return (np.asarray(raw, dtype=np.uint64) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53

    def normal(self, count: int) -> np.ndarray:
        """count standard normals via Box-Muller"""
        pairs = (count + 1) // 2
        u = self.uniform(2 * pairs).reshape(pairs, 2)
        radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        angle = 2.0 * np.pi * u[:, 1]
        z = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)]).ravel()
        return z[:count]

    def complex_normal(self, count: int) -> np.ndarray:
        """count circular complex normals with unit variance"""
        z = self.normal(2 * count).reshape(count, 2)
        return (z[:, 0] + 1j * z[:, 1]) / math.sqrt(2.0)


# ========================================
# Generation
# ========================================

def uniform_subsample_matrix(n_samples: int, m_rows: int) -> SensingMatrix:
    """
    Rows of I_N at indices floor(i * N / M), i = 0..M-1

    @param n_samples - N
    @param m_rows - M (1 <= M <= N)
    @returns SensingMatrix (identity flag set only when M = N)
    """
    if not (1 <= m_rows <= n_samples):
        raise DomainError(f"subsample rows {m_rows} outside [1, {n_samples}]")
    rows = (np.arange(m_rows) * n_samples) // m_rows
    entries = np.eye(n_samples)[rows]
    return SensingMatrix(entries, identity=(m_rows == n_samples))


def _place_delays(cfg: GenConfig, stream: SeededStream) -> List[np.ndarray]:
    """Rejection sample separated delays for every user"""
    draws = 0
    restarts = 0
    while draws < Defaults.MAX_REJECTION_ROUNDS:
        placed: List[List[float]] = [[] for _ in cfg.path_counts]
        complete = True
        for user, path_count in enumerate(cfg.path_counts):
            for _ in range(path_count):
                pool = [t for delays in placed for t in delays] if cfg.cross_user_separation else placed[user]
                accepted = False
                for _ in range(_DRAWS_PER_DELAY):
                    draws += 1
                    candidate = float(stream.uniform(1)[0])
                    if not pool or np.min(wrap_distance(candidate, np.array(pool))) >= cfg.min_separation:
                        placed[user].append(candidate)
                        accepted = True
                        break
                    if draws >= Defaults.MAX_REJECTION_ROUNDS:
                        break
                if not accepted:
                    complete = False
                    break
            if not complete:
                break
        if complete:
            if restarts:
                logger.debug(f"Delay placement needed {restarts} restart(s), {draws} draws")
            return [np.sort(np.array(delays)) for delays in placed]
        restarts += 1

    raise GenerationError(
        f"could not place {sum(cfg.path_counts)} delays with separation {cfg.min_separation:.6g} "
        f"after {Defaults.MAX_REJECTION_ROUNDS} rejection rounds"
    )


def _draw_amplitudes(cfg: GenConfig, stream: SeededStream, count: int) -> np.ndarray:
    if cfg.amplitude_dist is AmplitudeDist.UNIT_MODULUS_RANDOM_PHASE:
        return np.exp(2j * np.pi * stream.uniform(count))
    amplitudes = stream.complex_normal(count)
    for index in np.flatnonzero(amplitudes == 0):
        while amplitudes[index] == 0:
            amplitudes[index] = stream.complex_normal(1)[0]
    return amplitudes


def _draw_message(cfg: GenConfig, stream: SeededStream, size: int) -> Message:
    coords = stream.complex_normal(size)
    if cfg.message_mode is MessageMode.UNIT_SPHERE_POSITIVE:
        magnitudes = np.abs(coords)
        return Message(magnitudes / np.linalg.norm(magnitudes), positivity_convention=True)
    return Message(coords / np.linalg.norm(coords), positivity_convention=False)


def generate_scenario(cfg: GenConfig) -> Scenario:
    """
    Draw a random scenario fully determined by cfg (seed included)

    Codebooks are i.i.d. real N(0, 1), messages uniform on the unit sphere
    (made entrywise positive and renormalized in positive mode), amplitudes
    complex Gaussian or unit modulus, delays uniform with the configured
    minimum separation.

    @param cfg - Generation settings
    @returns Scenario
    @throws GenerationError - If the separation cannot be met

    @example
    scenario = generate_scenario(GenConfig(n_samples=64, path_counts=[2, 1], message_sizes=[5, 5]))
    """
    logger.info(
        f"Generating scenario: N={cfg.n_samples}, K={cfg.user_count}, "
        f"P={cfg.path_counts}, M_k={cfg.message_sizes}, seed={cfg.seed}"
    )
    stream = SeededStream(cfg.seed)
    delays = _place_delays(cfg, stream)

    codebooks, channels, messages = [], [], []
    for user, (path_count, size) in enumerate(zip(cfg.path_counts, cfg.message_sizes)):
        entries = stream.normal(cfg.n_samples * size).reshape(cfg.n_samples, size)
        codebooks.append(Codebook(user_index=user, entries=entries))
        messages.append(_draw_message(cfg, stream, size))
        channels.append(ChannelSpec(delays=delays[user], amplitudes=_draw_amplitudes(cfg, stream, path_count)))

    if cfg.sensing_mode is SensingMode.UNIFORM_SUBSAMPLE:
        sensing = uniform_subsample_matrix(cfg.n_samples, cfg.sensing_rows)
    else:
        sensing = SensingMatrix.eye(cfg.n_samples)

    separation = minimum_separation(channels, cross_user=cfg.cross_user_separation)
    if separation < cfg.min_separation:
        raise GenerationError(f"generated separation {separation:.6g} below {cfg.min_separation:.6g}")

    return Scenario(
        n_samples=cfg.n_samples,
        codebooks=tuple(codebooks),
        channels=tuple(channels),
        messages=tuple(messages),
        sensing=sensing,
        seed=cfg.seed,
    )


def user_contribution(scenario: Scenario, user: int) -> np.ndarray:
    """Unsensed contribution sum_l g_l a(tau_l) . conj(C_k) x_k of one user (length N)"""
    channel = scenario.channels[user]
    channel_response = steering_matrix(channel.delays, scenario.n_samples) @ channel.amplitudes
    return channel_response * encode_message(scenario.codebooks[user].entries, scenario.messages[user].coords)


def synthesize_measurements(scenario: Scenario) -> np.ndarray:
    """
    Measurements y = D sum_k sum_l g_l^k a(tau_l^k) . conj(C_k) x_k

    Evaluates the Hadamard-product form directly, without lifting.

    @param scenario - Ground truth
    @returns complex vector of length M
    @throws DomainError - If the scenario violates its invariants
    """
    report = validate_scenario(scenario)
    if not report.ok:
        raise DomainError(f"invalid scenario: {'; '.join(report.violations)}")
    v = sum(user_contribution(scenario, user) for user in range(scenario.user_count))
    return scenario.sensing.apply(v)


# ========================================
# Persistence
# ========================================

def complex_to_json(values) -> Any:
    """Nested lists with complex numbers written as [re, im]"""
    array = np.asarray(values, dtype=np.complex128)
    if array.ndim == 0:
        return [float(array.real), float(array.imag)]
    return [complex_to_json(item) for item in array]


def complex_from_json(data, key: str, ndim: int) -> np.ndarray:
    """
    Decode nested [re, im] pairs into a complex array of the given rank

    @throws ScenarioParseError - If the nesting or pairs are malformed
    """
    try:
        array = np.asarray(data, dtype=np.float64)
    except (TypeError, ValueError):
        raise ScenarioParseError(key, "expected nested arrays of [re, im] pairs")
    if array.ndim != ndim + 1 or array.shape[-1] != 2:
        raise ScenarioParseError(key, f"expected a rank-{ndim} array of [re, im] pairs, got shape {array.shape}")
    return array[..., 0] + 1j * array[..., 1]


def scenario_to_dict(scenario: Scenario) -> Dict[str, Any]:
    users = []
    for codebook, channel, message in zip(scenario.codebooks, scenario.channels, scenario.messages):
        users.append({
            'codebook': complex_to_json(codebook.entries),
            'paths': [
                {'tau': float(tau), 'g': complex_to_json(gain)}
                for tau, gain in zip(channel.delays, channel.amplitudes)
            ],
            'message': complex_to_json(message.coords),
            'positivity': bool(message.positivity_convention),
        })
    sensing = {'identity': bool(scenario.sensing.identity)}
    if not scenario.sensing.identity:
        sensing['entries'] = complex_to_json(scenario.sensing.entries)
    return {
        'n_samples': int(scenario.n_samples),
        'users': users,
        'sensing': sensing,
        'seed': int(scenario.seed),
    }


def _require(mapping: Dict[str, Any], name: str, key: str):
    if not isinstance(mapping, dict):
        raise ScenarioParseError(key, "expected an object")
    if name not in mapping:
        raise ScenarioParseError(f"{key}.{name}" if key else name, "missing key")
    return mapping[name]


def scenario_from_dict(data: Dict[str, Any]) -> Scenario:
    """
    Decode a scenario document

    @throws ScenarioParseError - Naming the offending key
    """
    n_samples = _require(data, 'n_samples', '')
    if not isinstance(n_samples, int) or n_samples < 1:
        raise ScenarioParseError('n_samples', f"expected a positive integer, got {n_samples!r}")
    users = _require(data, 'users', '')
    if not isinstance(users, list) or not users:
        raise ScenarioParseError('users', "expected a non-empty list")

    codebooks, channels, messages = [], [], []
    for index, user in enumerate(users):
        key = f"users[{index}]"
        entries = complex_from_json(_require(user, 'codebook', key), f"{key}.codebook", 2)
        if entries.shape[0] != n_samples:
            raise ScenarioParseError(f"{key}.codebook", f"has {entries.shape[0]} rows, expected {n_samples}")
        codebooks.append(Codebook(user_index=index, entries=entries))

        paths = _require(user, 'paths', key)
        if not isinstance(paths, list) or not paths:
            raise ScenarioParseError(f"{key}.paths", "expected a non-empty list")
        delays, gains = [], []
        for path_index, path in enumerate(paths):
            path_key = f"{key}.paths[{path_index}]"
            tau = _require(path, 'tau', path_key)
            if not isinstance(tau, (int, float)):
                raise ScenarioParseError(f"{path_key}.tau", f"expected a number, got {tau!r}")
            delays.append(float(tau))
            gains.append(complex(complex_from_json(_require(path, 'g', path_key), f"{path_key}.g", 0)))
        channels.append(ChannelSpec(delays=delays, amplitudes=gains))

        coords = complex_from_json(_require(user, 'message', key), f"{key}.message", 1)
        if coords.shape[0] != entries.shape[1]:
            raise ScenarioParseError(f"{key}.message", f"has {coords.shape[0]} entries, codebook has {entries.shape[1]} columns")
        messages.append(Message(coords, positivity_convention=bool(user.get('positivity', False))))

    sensing_data = _require(data, 'sensing', '')
    identity = bool(_require(sensing_data, 'identity', 'sensing'))
    if identity:
        sensing = SensingMatrix.eye(n_samples)
    else:
        entries = complex_from_json(_require(sensing_data, 'entries', 'sensing'), 'sensing.entries', 2)
        if entries.shape[1] != n_samples:
            raise ScenarioParseError('sensing.entries', f"has {entries.shape[1]} columns, expected {n_samples}")
        sensing = SensingMatrix(entries, identity=False)

    seed = data.get('seed', 0)
    if not isinstance(seed, int):
        raise ScenarioParseError('seed', f"expected an integer, got {seed!r}")

    return Scenario(
        n_samples=n_samples,
        codebooks=tuple(codebooks),
        channels=tuple(channels),
        messages=tuple(messages),
        sensing=sensing,
        seed=seed,
    )


def save_scenario(scenario: Scenario, path: str, header: Dict[str, Any] = None) -> Path:
    """
    Write a scenario as JSON

    @param scenario - Scenario to save
    @param path - Destination file
    @param header - Optional reproducibility header stored under "config"
    @returns Path written
    """
    document = scenario_to_dict(scenario)
    if header is not None:
        document['config'] = header
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, 'w', encoding='utf-8', newline='\n') as file:
        json.dump(document, file, indent=2, allow_nan=False)
        file.write('\n')
    logger.info(f"Scenario saved to {target}")
    return target


def load_scenario(path: str) -> Tuple[Scenario, ValidationReport]:
    """
    Read a scenario JSON file and validate it

    @param path - Scenario file
    @returns (scenario, validation report)
    @throws ScenarioParseError - On malformed JSON or inconsistent shapes
    """
    try:
        with open(path, 'r', encoding='utf-8') as file:
            data = json.load(file)
    except json.JSONDecodeError as error:
        raise ScenarioParseError('<document>', f"malformed JSON ({error.msg} at line {error.lineno})")
    scenario = scenario_from_dict(data)
    return scenario, validate_scenario(scenario)
