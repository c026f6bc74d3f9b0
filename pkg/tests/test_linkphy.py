import math

import numpy as np
import pytest

from urllcsim.exceptions import DomainError, InfeasibleError
from urllcsim.linkphy import (
    achievable_rate,
    decoding_error,
    decoding_error_prob,
    fading_power,
    inverse_q,
    q_function,
    sample_fading,
    sir_threshold,
)
from urllcsim.model import FadingKind, QosSpec


def test_q_function_values() -> None:
    assert q_function(0.0) == pytest.approx(0.5)
    assert q_function(1.959963985) == pytest.approx(0.025, rel=1e-8)
    np.testing.assert_allclose(q_function(np.array([-1.0, 1.0])), [0.841344746, 0.158655254], rtol=1e-8)


@pytest.mark.parametrize("p", [1e-9, 1e-5, 0.3, 0.5, 0.9])
def test_inverse_q_inverts(p: float) -> None:
    assert q_function(inverse_q(p)) == pytest.approx(p, rel=1e-10)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 2.0])
def test_inverse_q_rejects_closed_interval(p: float) -> None:
    with pytest.raises(DomainError):
        inverse_q(p)


def test_decoding_error_limits(symmetric_spec: QosSpec) -> None:
    assert decoding_error_prob(math.inf, symmetric_spec) == 0.0
    assert decoding_error_prob(0.0, symmetric_spec) == 1.0
    assert 0.0 <= decoding_error_prob(1.0, symmetric_spec) <= 1.0


def test_decoding_error_decreases_with_sinr(symmetric_spec: QosSpec) -> None:
    values = decoding_error(np.geomspace(0.5, 20.0, 50), symmetric_spec.blocklength, symmetric_spec.packet_bits)
    assert np.all(np.diff(values) <= 0.0)


def test_rate_at_threshold_covers_packet(symmetric_spec: QosSpec) -> None:
    gamma = sir_threshold(1e-5, symmetric_spec)
    # at the threshold one slot carries the packet
    assert achievable_rate(gamma, 1e-5, symmetric_spec) == pytest.approx(1.0, rel=1e-6)


def test_sir_threshold_reference(symmetric_spec: QosSpec) -> None:
    gamma = sir_threshold(1e-5, symmetric_spec)
    assert gamma == pytest.approx(2.66, abs=0.01)
    assert decoding_error_prob(gamma, symmetric_spec) <= 1e-5
    assert decoding_error_prob(gamma * (1.0 - 1e-6), symmetric_spec) > 1e-5


def test_sir_threshold_grows_with_reliability(symmetric_spec: QosSpec) -> None:
    thresholds = [sir_threshold(eps, symmetric_spec) for eps in (1e-7, 1e-5, 1e-3)]
    assert thresholds[0] > thresholds[1] > thresholds[2]


def test_sir_threshold_narrow_band_needs_more(symmetric_spec: QosSpec) -> None:
    assert sir_threshold(1e-5, symmetric_spec, bandwidth_hz=1e6 / 3) > sir_threshold(1e-5, symmetric_spec)


@pytest.mark.parametrize("eps", [0.0, 1.0])
def test_sir_threshold_domain(symmetric_spec: QosSpec, eps: float) -> None:
    with pytest.raises(DomainError):
        sir_threshold(eps, symmetric_spec)


def test_sir_threshold_unreachable() -> None:
    # 2 symbols cannot carry 128 bits at any SINR up to 1e9
    spec = QosSpec(bandwidth_hz=2e4, fading="rayleigh")
    with pytest.raises(InfeasibleError):
        sir_threshold(1e-5, spec)


def test_sample_fading_moments() -> None:
    spec = QosSpec(n_tx_antennas=4, nakagami_m=3)
    rng = np.random.default_rng(3)
    rayleigh = [sample_fading(FadingKind.RAYLEIGH, spec, rng).gain for _ in range(4000)]
    nakagami = [sample_fading(FadingKind.NAKAGAMI, spec, rng).gain for _ in range(4000)]
    assert np.mean(rayleigh) == pytest.approx(1.0, abs=0.08)
    # raw draw of h*h has mean N_T
    assert np.mean(nakagami) == pytest.approx(4.0, abs=0.1)
    assert min(rayleigh) >= 0.0 and min(nakagami) >= 0.0


def test_fading_power_unit_mean() -> None:
    spec = QosSpec(n_tx_antennas=16)
    draws = fading_power(FadingKind.NAKAGAMI, spec, np.random.default_rng(1), (20000,))
    assert draws.shape == (20000,)
    assert draws.mean() == pytest.approx(1.0, abs=0.01)


def test_fading_power_nakagami_moments() -> None:
    spec = QosSpec()
    shape = spec.n_tx_antennas * spec.nakagami_m
    draws = fading_power(FadingKind.NAKAGAMI, spec, np.random.default_rng(6), (1_000_000,))
    # the sample variance of Gamma(k)/k has variance (2/k² + 6/k³)/n
    mean_error = math.sqrt(1.0 / shape / draws.size)
    var_error = math.sqrt((2.0 / shape**2 + 6.0 / shape**3) / draws.size)
    assert abs(draws.mean() - 1.0) <= 4.0 * mean_error
    assert abs(draws.var(ddof=1) - 1.0 / shape) <= 4.0 * var_error
