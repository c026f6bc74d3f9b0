import math

import numpy as np
import pytest
from scipy import stats

from urllcsim.exceptions import InfeasibleError, ShapeError
from urllcsim.linkphy import decoding_error, sir_threshold
from urllcsim.mcsim import (
    SimOptions,
    check_policy,
    estimate_qos_violation,
    loss_from_p_vio,
    packet_loss_prob,
    policy_is_feasible,
    probe_loss,
    sample_sinr,
    select_slots,
    simulate_violations,
    summarize,
)
from urllcsim.model import ActivityMode, QosSpec, SymmetricScenario
from urllcsim.queueing import queue_violation_prob
from urllcsim.stochgeom import approx_inputs, approx_p_a2
from urllcsim.topology import gen_bipolar
from urllcsim.types import FloatArray, NetworkInstance, RepetitionPolicy

from .conftest import make_instance


def _pair(direct: float, cross: float, arrival: float = 0.05) -> NetworkInstance:
    """Two links, every cross gain equal"""
    gain = np.array([[direct, cross], [cross, direct]])
    return NetworkInstance(
        tx_pos=np.array([[0.0, 0.0], [10.0, 0.0]]),
        rx_pos=np.array([[0.0, 5.0], [10.0, 5.0]]),
        gain=gain,
        arrival=np.full(2, arrival),
        reuse_group=np.zeros(2, dtype=np.int64),
        bandwidth_hz=np.full(2, 1e6),
        measured=np.ones(2, dtype=np.bool_),
    )


def test_select_slots() -> None:
    rng = np.random.default_rng(0)
    slots = select_slots(7, 4, rng)
    assert len(slots) == 4 and slots <= set(range(1, 8))
    assert select_slots(3, 3, rng) == frozenset({1, 2, 3})
    with pytest.raises(InfeasibleError):
        select_slots(2, 3, rng)


def test_select_slots_uniform_inclusion() -> None:
    rng = np.random.default_rng(1)
    draws = 20000
    hits = np.zeros(7)
    for _ in range(draws):
        for slot in select_slots(7, 4, rng):
            hits[slot - 1] += 1
    np.testing.assert_allclose(hits / draws, 4 / 7, atol=0.02)


def test_sample_sinr_hand_computed() -> None:
    spec = QosSpec(fading="rayleigh", n_tx_antennas=1, noise_dbm=-90.0)
    gain = np.array([[1e-6, 2e-8, 3e-9], [4e-8, 2e-6, 5e-9], [6e-9, 7e-9, 3e-6]])
    instance = NetworkInstance(
        tx_pos=np.zeros((3, 2)),
        rx_pos=np.ones((3, 2)),
        gain=gain,
        arrival=np.full(3, 0.05),
        reuse_group=np.zeros(3, dtype=np.int64),
        bandwidth_hz=np.full(3, 1e6),
        measured=np.ones(3, dtype=np.bool_),
    )
    fading = np.array([0.7, 1.3, 2.1])
    active = np.array([True, True, False])
    power = 10.0**2.3
    noise = 10.0**-9.0
    # receiver 1 hears transmitter 0 only, transmitter 2 is idle
    expected = power * 2e-6 * 1.3 / (power * 2e-8 * 0.7 + noise)
    assert sample_sinr(instance, 1, active, fading, spec) == pytest.approx(expected, rel=1e-12)


def test_sample_sinr_without_interference_or_noise(symmetric_spec: QosSpec) -> None:
    instance = _pair(1e-8, 1e-8)
    assert math.isinf(sample_sinr(instance, 0, np.zeros(2, dtype=bool), np.ones(2), symmetric_spec))


def test_packet_loss_is_product_of_copies(symmetric_spec: QosSpec) -> None:
    instance = _pair(1e-8, 5e-9)
    policy = RepetitionPolicy.uniform(2, 3, 2)
    draws = np.array([1.0, 1.0])
    activity = np.array([[False, True], [False, True]])
    eps = float(decoding_error(2.0, symmetric_spec.blocklength, symmetric_spec.packet_bits))
    loss = packet_loss_prob(instance, 0, policy, draws, np.random.default_rng(0), symmetric_spec, activity=activity)
    assert loss == pytest.approx(eps**2, rel=1e-12)

    idle = np.zeros((2, 2), dtype=bool)
    assert packet_loss_prob(instance, 0, policy, draws, np.random.default_rng(0), symmetric_spec, activity=idle) == 0.0

    with pytest.raises(ShapeError):
        packet_loss_prob(instance, 0, policy, draws, np.random.default_rng(0), symmetric_spec, activity=idle[:1])


def test_packet_loss_matches_enumeration() -> None:
    # moderate SNR so that both idle and busy slots lose packets
    spec = QosSpec(fading="rayleigh", n_tx_antennas=1, noise_dbm=-61.0)
    instance = _pair(1e-8, 2e-9, arrival=0.2)
    policy = RepetitionPolicy(n_slots=np.array([3, 2]), m_reps=np.array([2, 2]))
    draws = np.ones(2)

    power, noise = spec.tx_power_mw, spec.noise_mw
    busy = float(decoding_error(power * 1e-8 / (power * 2e-9 + noise), spec.blocklength, spec.packet_bits))
    idle = float(decoding_error(power * 1e-8 / noise, spec.blocklength, spec.packet_bits))
    p = 0.2 * 2
    expected = (p * busy + (1.0 - p) * idle) ** 2

    rng = np.random.default_rng(11)
    samples = np.array([packet_loss_prob(instance, 0, policy, draws, rng, spec) for _ in range(20000)])
    error = samples.std(ddof=1) / math.sqrt(samples.size)
    assert abs(samples.mean() - expected) <= 4.0 * error + 1e-15


def test_check_policy_errors(instance: NetworkInstance, symmetric_spec: QosSpec) -> None:
    k = instance.k_links
    with pytest.raises(ShapeError):
        check_policy(instance, RepetitionPolicy.uniform(k + 1, 2, 1), symmetric_spec)
    with pytest.raises(InfeasibleError, match="1 <= M <= N"):
        check_policy(instance, RepetitionPolicy.uniform(k, 2, 3), symmetric_spec)
    with pytest.raises(InfeasibleError, match="unstable"):
        check_policy(instance, RepetitionPolicy.uniform(k, 20, 1), symmetric_spec)
    check_policy(instance, RepetitionPolicy.uniform(k, 6, 3), symmetric_spec)


def test_policy_is_feasible(instance: NetworkInstance, symmetric_spec: QosSpec) -> None:
    k = instance.k_links
    assert policy_is_feasible(instance, RepetitionPolicy.uniform(k, 6, 3), symmetric_spec)
    # stable, but N=7 breaks ε_max in the queue alone
    assert not policy_is_feasible(instance, RepetitionPolicy.uniform(k, 7, 3), symmetric_spec)
    assert not policy_is_feasible(instance, RepetitionPolicy.uniform(k, 2, 3), symmetric_spec)


def test_isolated_link_never_violates(symmetric_spec: QosSpec) -> None:
    instance = make_instance(1)
    estimate = estimate_qos_violation(instance, RepetitionPolicy.uniform(1, 1, 1), symmetric_spec, 3, 50, seed=0)
    assert estimate.p_vio == 0.0
    assert estimate.trials == 150
    np.testing.assert_array_equal(estimate.realization_p_vio, np.zeros(3))


def test_equal_power_interferer(symmetric_spec: QosSpec) -> None:
    # an interferer as strong as the signal, active w.p. λM = 0.05:
    # P_vio ≈ 0.05 P(f_k / f_i < γ_th) = 0.05 γ_th / (1 + γ_th)
    instance = _pair(1e-8, 1e-8)
    estimate = estimate_qos_violation(instance, RepetitionPolicy.uniform(2, 1, 1), symmetric_spec, 4, 2000, seed=3)
    assert estimate.p_vio == pytest.approx(0.05 * 2.66 / 3.66, abs=0.01)
    assert estimate.links.tolist() == [0, 1]


def test_estimate_is_reproducible(instance: NetworkInstance, symmetric_spec: QosSpec) -> None:
    policy = RepetitionPolicy.uniform(instance.k_links, 4, 2)
    first = estimate_qos_violation(instance, policy, symmetric_spec, 4, 300, seed=9)
    again = estimate_qos_violation(instance, policy, symmetric_spec, 4, 300, seed=9)
    parallel = estimate_qos_violation(instance, policy, symmetric_spec, 4, 300, seed=9, workers=2)
    np.testing.assert_array_equal(first.p_k, again.p_k)
    np.testing.assert_array_equal(first.p_k, parallel.p_k)
    np.testing.assert_array_equal(first.realization_p_vio, parallel.realization_p_vio)


def test_realization_streams_are_independent_of_count(instance: NetworkInstance, symmetric_spec: QosSpec) -> None:
    policy = RepetitionPolicy.uniform(instance.k_links, 2, 1)
    short = estimate_qos_violation(instance, policy, symmetric_spec, 2, 200, seed=5)
    long = estimate_qos_violation(instance, policy, symmetric_spec, 5, 200, seed=5)
    np.testing.assert_array_equal(short.realization_p_vio, long.realization_p_vio[:2])


@pytest.mark.parametrize(
    "options",
    [
        SimOptions(activity=ActivityMode.PATTERN),
        SimOptions(per_slot_fading=False),
        SimOptions(nearest_interferer_only=True),
        SimOptions(cutoff_m=100.0),
    ],
)
def test_engine_options(instance: NetworkInstance, symmetric_spec: QosSpec, options: SimOptions) -> None:
    policy = RepetitionPolicy.uniform(instance.k_links, 4, 2)
    links, counts = simulate_violations(instance, policy, symmetric_spec, 100, np.random.default_rng(2), options)
    assert links.shape == counts.shape
    assert np.all((counts >= 0) & (counts <= 100))


def test_nearest_interferer_only_lowers_violations(symmetric_spec: QosSpec) -> None:
    instance = make_instance(12, seed=1, spread_m=250.0)
    policy = RepetitionPolicy.uniform(12, 2, 1)
    full = estimate_qos_violation(instance, policy, symmetric_spec, 4, 500, seed=1)
    nearest = estimate_qos_violation(
        instance, policy, symmetric_spec, 4, 500, seed=1, options=SimOptions(nearest_interferer_only=True)
    )
    assert nearest.p_vio <= full.p_vio


def test_unmeasured_links_only_interfere(symmetric_spec: QosSpec) -> None:
    base = make_instance(4)
    measured = np.array([True, False, True, False])
    instance = NetworkInstance(
        base.tx_pos, base.rx_pos, base.gain, base.arrival, base.reuse_group, base.bandwidth_hz, measured
    )
    estimate = estimate_qos_violation(instance, RepetitionPolicy.uniform(4, 2, 1), symmetric_spec, 2, 50, seed=0)
    assert estimate.links.tolist() == [0, 2]
    assert estimate.p_k.shape == (2,)


def test_probe_loss_floor(symmetric_spec: QosSpec) -> None:
    instance = make_instance(1)
    loss = probe_loss(instance, RepetitionPolicy.uniform(1, 1, 1), symmetric_spec, 100, seed=0)
    assert loss == pytest.approx(math.log(1.0 / 200.0))
    assert loss_from_p_vio(0.25, 100, 4) == pytest.approx(math.log(0.25))


def test_summarize_empty() -> None:
    estimate = summarize(np.zeros(0, dtype=np.int64), [], 10, seed=1)
    assert estimate.p_vio == 0.0
    assert estimate.trials == 0
    assert math.isnan(estimate.std_error)




def test_nakagami_link_with_noise() -> None:
    # unit-mean fading: an isolated link violates iff g < γ_th σ² / (p μ), g ~ Gamma(N_T m) / (N_T m)
    spec = QosSpec(noise_dbm=-100.0)
    gamma_th = sir_threshold(spec.eps_max - queue_violation_prob(0.05, 1, spec), spec)
    direct = 1.2 * gamma_th * spec.noise_mw / spec.tx_power_mw
    instance = NetworkInstance(
        tx_pos=np.zeros((1, 2)),
        rx_pos=np.ones((1, 2)),
        gain=np.array([[direct]]),
        arrival=np.array([0.05]),
        reuse_group=np.zeros(1, dtype=np.int64),
        bandwidth_hz=np.full(1, 1e6),
        measured=np.ones(1, dtype=np.bool_),
    )
    estimate = estimate_qos_violation(instance, RepetitionPolicy.uniform(1, 1, 1), spec, 4, 2000, seed=2)
    shape = spec.n_tx_antennas * spec.nakagami_m
    assert estimate.p_vio == pytest.approx(stats.gamma.cdf(1.0 / 1.2, shape, scale=1.0 / shape), abs=0.02)


_NEAR = SimOptions(cutoff_m=500.0)


def _bipolar_p_vio(
    scenario: SymmetricScenario,
    spec: QosSpec,
    n: int,
    m: int,
    instances: int,
    frames: int,
    *,
    options: SimOptions = _NEAR,
    seed: int = 100,
) -> FloatArray:
    """Network P_vio of the uniform (n, m) policy on independent 1 km² bipolar instances"""
    values = []
    for r in range(instances):
        instance = gen_bipolar(scenario, 1.0, np.random.default_rng(seed + r))
        policy = RepetitionPolicy.uniform(instance.k_links, n, m)
        values.append(estimate_qos_violation(instance, policy, spec, 1, frames, seed=r, options=options).p_vio)
    return np.asarray(values)


@pytest.mark.parametrize(
    ("density", "reference", "instances", "frames"),
    [
        (28.0, 0.0056, 12, 1000),
        pytest.param(28.0, 0.0056, 20, 2000, marks=pytest.mark.slow),
        pytest.param(14.0, 0.0016, 20, 4000, marks=pytest.mark.slow),
    ],
)
def test_symmetric_optimum_reference(
    ms_spec: QosSpec, density: float, reference: float, instances: int, frames: int
) -> None:
    values = _bipolar_p_vio(SymmetricScenario(density=density), ms_spec, 7, 4, instances, frames)
    assert 0.5 * reference <= float(values.mean()) <= 2.0 * reference


@pytest.mark.parametrize(("instances", "frames"), [(12, 1000), pytest.param(20, 2000, marks=pytest.mark.slow)])
def test_no_repetition_reference(
    scenario: SymmetricScenario, symmetric_spec: QosSpec, instances: int, frames: int
) -> None:
    values = _bipolar_p_vio(scenario, symmetric_spec, 1, 1, instances, frames, seed=200)
    assert 0.5 * 0.0615 <= float(values.mean()) <= 2.0 * 0.0615


def test_repetition_beats_no_repetition(scenario: SymmetricScenario, ms_spec: QosSpec) -> None:
    optimum = _bipolar_p_vio(scenario, ms_spec, 7, 4, 8, 800, seed=300)
    single = _bipolar_p_vio(scenario, ms_spec, 1, 1, 8, 800, seed=300)
    assert float(optimum.mean()) <= 0.3 * float(single.mean())


@pytest.mark.parametrize(
    ("area_km2", "realizations", "frames"), [(1.0, 4, 500), pytest.param(4.0, 10, 1000, marks=pytest.mark.slow)]
)
def test_k_repetition_degrades(
    scenario: SymmetricScenario, symmetric_spec: QosSpec, area_km2: float, realizations: int, frames: int
) -> None:
    # with M = N every copy meets the same active interferers
    options = SimOptions(activity=ActivityMode.PATTERN, cutoff_m=500.0)
    instance = gen_bipolar(scenario, area_km2, np.random.default_rng(0))
    means, errors = [], []
    for c in range(1, 6):
        estimate = estimate_qos_violation(
            instance,
            RepetitionPolicy.uniform(instance.k_links, c, c),
            symmetric_spec,
            realizations,
            frames,
            seed=c,
            options=options,
        )
        means.append(estimate.p_vio)
        errors.append(estimate.std_error)
    for c in range(4):
        assert means[c + 1] >= means[c] - 3.0 * math.hypot(errors[c], errors[c + 1])


def test_violations_grow_with_load(symmetric_spec: QosSpec) -> None:
    light = gen_bipolar(SymmetricScenario(lambda0=0.05), 1.0, np.random.default_rng(4))
    heavy = gen_bipolar(SymmetricScenario(lambda0=0.1), 1.0, np.random.default_rng(4))
    np.testing.assert_array_equal(light.tx_pos, heavy.tx_pos)

    policy = RepetitionPolicy.uniform(light.k_links, 4, 2)
    low = estimate_qos_violation(light, policy, symmetric_spec, 4, 500, seed=1, options=_NEAR)
    high = estimate_qos_violation(heavy, policy, symmetric_spec, 4, 500, seed=1, options=_NEAR)
    assert high.p_vio > low.p_vio


def test_violations_grow_with_density(symmetric_spec: QosSpec) -> None:
    sparse = _bipolar_p_vio(SymmetricScenario(density=28.0), symmetric_spec, 4, 2, 4, 400, seed=400)
    dense = _bipolar_p_vio(SymmetricScenario(density=56.0), symmetric_spec, 4, 2, 4, 400, seed=400)
    assert float(dense.mean()) > float(sparse.mean())


def test_pattern_activity_above_nearest_collision(scenario: SymmetricScenario, ms_spec: QosSpec) -> None:
    # P_A2 only counts the nearest active transmitter repeating in the very same slots
    gamma_th = sir_threshold(ms_spec.eps_max - queue_violation_prob(scenario.lambda0, 7, ms_spec), ms_spec)
    bound = approx_p_a2(approx_inputs(scenario, 7, 4, gamma_th))
    options = SimOptions(activity=ActivityMode.PATTERN)
    values = _bipolar_p_vio(scenario, ms_spec, 7, 4, 6, 600, options=options, seed=500)
    error = float(values.std(ddof=1)) / math.sqrt(values.size)
    assert float(values.mean()) >= bound - 3.0 * error
