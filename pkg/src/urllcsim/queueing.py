"""
Effective bandwidth model of a link's queue.

Packets arrive as a Poisson process with rate λ per slot and every packet holds
the link for N slots, so the queue is served at rate 1/N. The QoS exponent θ solves
E_B(θ) = λ(e^θ - 1)/θ = 1/N and the queueing delay violation probability with
D_q = D_max - N slots of headroom is exp(-λ D_q (e^θ - 1) / T_s).
"""

from __future__ import annotations

import math

import numpy as np
from scipy import optimize

from .exceptions import DomainError, InfeasibleError
from .model import QosSpec, QueueTimeUnit
from .types import FloatArray, IntArray, QueueProfile

THETA_TOL = 1e-12


def effective_bandwidth(lam: float, theta: float) -> float:
    """Effective bandwidth λ(e^θ - 1)/θ of a Poisson source in packets per slot"""
    if theta <= 0.0:
        raise DomainError(f"theta must be positive, got {theta}")
    return lam * math.expm1(theta) / theta


def queue_exponent_scale(spec: QosSpec) -> float:
    """
    Factor 1/T_s applied to the exponent of the delay violation probability.

    This is the only place where the unit convention of T_s enters the queueing model.
    """
    if spec.queue_time_unit is QueueTimeUnit.MS:
        return 1.0 / spec.slot_ms
    return 1.0


def _check_stable(lam: float, n_slots: int) -> None:
    if not 0.0 < lam < 1.0:
        raise InfeasibleError(f"arrival rate must lie in (0, 1), got {lam}")
    if n_slots < 1:
        raise InfeasibleError(f"a packet needs at least one slot, got N={n_slots}")
    if lam * n_slots >= 1.0:
        raise InfeasibleError(f"unstable queue: λN = {lam * n_slots:.4g} >= 1 (λ={lam:g}, N={n_slots})")


def solve_qos_exponent(lam: float, n_slots: int) -> float:
    """
    QoS exponent θ > 0 with E_B(θ) = 1/N.

    Raises
    ------
    InfeasibleError
        λN >= 1, the service rate does not exceed the arrival rate.
    """
    _check_stable(lam, n_slots)
    target = 1.0 / n_slots

    def gap(theta: float) -> float:
        return lam * math.expm1(theta) / theta - target

    upper = 1.0
    while gap(upper) <= 0.0:
        upper *= 2.0

    return float(optimize.brentq(gap, 1e-300, upper, xtol=THETA_TOL, rtol=4 * np.finfo(float).eps))


def _headroom(n_slots: int, spec: QosSpec) -> int:
    d_q = spec.d_max_slots - n_slots
    if d_q < 1:
        raise InfeasibleError(f"no queueing headroom: D_max - N = {d_q} (N={n_slots}, D_max={spec.d_max_slots})")
    return d_q


def queue_violation_prob(lam: float, n_slots: int, spec: QosSpec) -> float:
    """
    Queueing delay violation probability of a link reserving `n_slots` per packet.

    Raises
    ------
    InfeasibleError
        Unstable queue or no queueing headroom left.
    """
    d_q = _headroom(n_slots, spec)
    theta = solve_qos_exponent(lam, n_slots)
    return math.exp(-lam * d_q * math.expm1(theta) * queue_exponent_scale(spec))


def queue_profile(lam: float, n_slots: int, spec: QosSpec) -> QueueProfile:
    d_q = _headroom(n_slots, spec)
    theta = solve_qos_exponent(lam, n_slots)
    eps_q = math.exp(-lam * d_q * math.expm1(theta) * queue_exponent_scale(spec))
    return QueueProfile(arrival_rate=lam, n_slots=n_slots, theta=theta, eps_q=eps_q, d_q_max=d_q)


def stable_limit(lam: float) -> int:
    """Largest N with λN < 1"""
    n = math.floor(1.0 / lam)
    while n > 0 and lam * n >= 1.0:
        n -= 1
    return n


def max_slots(lam: float, spec: QosSpec) -> int:
    """
    Largest N whose queue is stable, leaves at least one slot of headroom and keeps
    ε_q within `spec.eps_max`.

    Raises
    ------
    InfeasibleError
        Even N = 1 violates one of the conditions.
    """
    upper = min(spec.d_max_slots - 1, stable_limit(lam)) if 0.0 < lam < 1.0 else 0
    if upper < 1 or queue_violation_prob(lam, 1, spec) > spec.eps_max:
        raise InfeasibleError(f"no feasible slot count for λ={lam:g}: even N=1 violates eps_max={spec.eps_max:g}")

    low, high = 1, upper
    while low < high:
        mid = (low + high + 1) // 2
        if queue_violation_prob(lam, mid, spec) <= spec.eps_max:
            low = mid
        else:
            high = mid - 1
    return low


def qos_exponent_array(lam: FloatArray, n_slots: FloatArray, iterations: int = 200) -> FloatArray:
    """
    Vectorized `solve_qos_exponent` by bisection, entries with λN >= 1 come back as nan.
    """
    lam, n = np.broadcast_arrays(np.asarray(lam, dtype=np.float64), np.asarray(n_slots, dtype=np.float64))
    stable = lam * n < 1.0
    target = np.where(stable, 1.0 / np.maximum(lam * n, 1e-300), 2.0)

    # expm1(θ)/θ >= 1 + θ/2, so θ = 2(target - 1) is an upper bracket
    low = np.zeros_like(lam)
    high = np.maximum(2.0 * (target - 1.0), 1e-12)
    for _ in range(iterations):
        mid = 0.5 * (low + high)
        with np.errstate(over="ignore"):
            above = np.expm1(mid) / mid > target
        high = np.where(above, mid, high)
        low = np.where(above, low, mid)
        if np.all(high - low <= THETA_TOL * np.maximum(high, 1.0)):
            break

    return np.where(stable, 0.5 * (low + high), np.nan)


def queue_violation_array(lam: FloatArray, n_slots: IntArray, spec: QosSpec) -> FloatArray:
    """
    Vectorized `queue_violation_prob`. Unstable entries or entries without headroom give 1.
    """
    lam = np.asarray(lam, dtype=np.float64)
    n = np.asarray(n_slots, dtype=np.float64)
    theta = qos_exponent_array(lam, n)
    d_q = spec.d_max_slots - n
    valid = np.isfinite(theta) & (d_q >= 1)
    # λ(e^θ - 1) = θ/N on the solution
    exponent = np.where(valid, np.nan_to_num(theta) / n * d_q * queue_exponent_scale(spec), 0.0)
    return np.where(valid, np.exp(-exponent), 1.0)


def max_slots_array(lam: FloatArray, spec: QosSpec) -> IntArray:
    """
    Vectorized `max_slots` over a vector of arrival rates.

    Raises
    ------
    InfeasibleError
        Some link has no feasible N at all.
    """
    lam = np.asarray(lam, dtype=np.float64)
    candidates = np.arange(1, spec.d_max_slots, dtype=np.float64)
    eps_q = queue_violation_array(lam[:, None], candidates[None, :], spec)
    # ε_q is increasing in N, so the feasible N form a prefix
    counts = np.sum(eps_q <= spec.eps_max, axis=1)
    if np.any(counts < 1):
        worst = float(lam[np.argmin(counts)])
        raise InfeasibleError(f"no feasible slot count for λ={worst:g}: even N=1 violates eps_max={spec.eps_max:g}")
    return counts.astype(np.int64)
