import math

import numpy as np
import pytest

from urllcsim.exceptions import DomainError, InfeasibleError
from urllcsim.model import QosSpec
from urllcsim.queueing import (
    effective_bandwidth,
    max_slots,
    max_slots_array,
    qos_exponent_array,
    queue_profile,
    queue_violation_array,
    queue_violation_prob,
    solve_qos_exponent,
    stable_limit,
)


def test_qos_exponent_reference() -> None:
    theta = solve_qos_exponent(0.05, 7)
    assert theta == pytest.approx(1.828, abs=1e-3)
    assert effective_bandwidth(0.05, theta) == pytest.approx(1.0 / 7.0, rel=1e-10)


def test_effective_bandwidth_domain() -> None:
    with pytest.raises(DomainError):
        effective_bandwidth(0.05, 0.0)


@pytest.mark.parametrize(("lam", "n"), [(0.5, 2), (0.2, 5), (0.05, 20), (1.0, 1)])
def test_unstable_queue(lam: float, n: int) -> None:
    with pytest.raises(InfeasibleError):
        solve_qos_exponent(lam, n)


def test_violation_increases_with_slots(symmetric_spec: QosSpec) -> None:
    values = [queue_violation_prob(0.05, n, symmetric_spec) for n in range(1, 16)]
    assert all(a < b for a, b in zip(values, values[1:]))


def test_no_headroom() -> None:
    spec = QosSpec(d_max_slots=5)
    with pytest.raises(InfeasibleError):
        queue_violation_prob(0.01, 5, spec)


def test_ms_convention(ms_spec: QosSpec) -> None:
    assert math.log(queue_violation_prob(0.05, 7, ms_spec)) == pytest.approx(-112.3, abs=0.1)
    assert max_slots(0.05, ms_spec) == 15


@pytest.mark.parametrize(("lam", "expected"), [(0.05, 6), (0.075, 5), (0.1, 4), (0.5, 1)])
def test_max_slots_slot_convention(symmetric_spec: QosSpec, lam: float, expected: int) -> None:
    n = max_slots(lam, symmetric_spec)
    assert n == expected
    assert queue_violation_prob(lam, n, symmetric_spec) <= symmetric_spec.eps_max
    if lam * (n + 1) < 1.0:
        assert queue_violation_prob(lam, n + 1, symmetric_spec) > symmetric_spec.eps_max


def test_max_slots_infeasible() -> None:
    spec = QosSpec(d_max_slots=3, eps_max=1e-9)
    with pytest.raises(InfeasibleError):
        max_slots(0.5, spec)


def test_stable_limit() -> None:
    assert stable_limit(0.05) == 19
    assert stable_limit(0.3) == 3
    assert stable_limit(0.5) == 1


def test_profile_matches_scalars(symmetric_spec: QosSpec) -> None:
    profile = queue_profile(0.05, 4, symmetric_spec)
    assert profile.theta == pytest.approx(solve_qos_exponent(0.05, 4))
    assert profile.eps_q == pytest.approx(queue_violation_prob(0.05, 4, symmetric_spec))
    assert profile.d_q_max == symmetric_spec.d_max_slots - 4


def test_arrays_match_scalars(symmetric_spec: QosSpec) -> None:
    lam = np.array([0.01, 0.05, 0.075, 0.1])
    n = np.array([3, 6, 5, 4])
    thetas = qos_exponent_array(lam, n)
    np.testing.assert_allclose(thetas, [solve_qos_exponent(a, b) for a, b in zip(lam, n)], rtol=1e-8)
    np.testing.assert_allclose(
        queue_violation_array(lam, n, symmetric_spec),
        [queue_violation_prob(a, b, symmetric_spec) for a, b in zip(lam, n)],
        rtol=1e-6,
    )
    np.testing.assert_array_equal(max_slots_array(lam, symmetric_spec), [max_slots(a, symmetric_spec) for a in lam])


def test_arrays_flag_unstable(symmetric_spec: QosSpec) -> None:
    assert np.isnan(qos_exponent_array(np.array([0.5]), np.array([2]))[0])
    assert queue_violation_array(np.array([0.5]), np.array([2]), symmetric_spec)[0] == 1.0
