"""
Physical layer: finite blocklength rate and decoding error, SIR threshold search, fading.

All rates are in packets per slot. The blocklength of a slot is T_s W with T_s in
seconds; every function accepts an optional per-link bandwidth overriding the one
in the `QosSpec`, which is how frequency reuse shrinks the blocklength.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Optional, Union

import numpy as np
from loguru import logger
from scipy import optimize, stats

from .exceptions import DomainError, InfeasibleError
from .model import FadingKind, QosSpec
from .types import FadingDraw, FloatArray

LN2 = math.log(2.0)
V_FLOOR = 1e-12
GAMMA_MAX = 1e9
GAMMA_MIN = 1e-12

ArrayLike = Union[float, FloatArray]


def _blocklength(spec: QosSpec, bandwidth_hz: Optional[ArrayLike] = None) -> ArrayLike:
    if bandwidth_hz is None:
        return spec.blocklength
    return spec.slot_ms / 1000.0 * np.asarray(bandwidth_hz, dtype=np.float64)


def q_function(x: ArrayLike) -> ArrayLike:
    """Tail probability of the standard normal"""
    result = stats.norm.sf(x)
    return float(result) if np.ndim(result) == 0 else np.asarray(result, dtype=np.float64)


def inverse_q(p: float) -> float:
    """
    Inverse of `q_function`.

    Raises
    ------
    DomainError
        `p` outside the open interval (0, 1).
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"inverse_q is defined on (0, 1), got {p}")
    return float(stats.norm.isf(p))


def achievable_rate(gamma: float, eps_d: float, spec: QosSpec, bandwidth_hz: Optional[float] = None) -> float:
    """
    Normal approximation of the finite blocklength rate in packets per slot.

    A negative value is a valid result and means the packet cannot be delivered
    in one slot at this SINR and error target.
    """
    n = float(_blocklength(spec, bandwidth_hz))
    dispersion = 1.0 - (1.0 + gamma) ** -2
    return n / (spec.packet_bits * LN2) * (math.log1p(gamma) - math.sqrt(dispersion / n) * inverse_q(eps_d))


def decoding_error(gamma: ArrayLike, blocklength: ArrayLike, packet_bits: int) -> FloatArray:
    """
    Vectorized decoding error probability of one packet sent in one slot.

    `gamma` and `blocklength` broadcast against each other. `gamma = inf` gives 0,
    a vanishing channel dispersion gives 1.
    """
    gamma = np.asarray(gamma, dtype=np.float64)
    n = np.asarray(blocklength, dtype=np.float64)
    dispersion = 1.0 - (1.0 + gamma) ** -2.0
    degenerate = dispersion < V_FLOOR
    with np.errstate(invalid="ignore"):
        argument = np.sqrt(n / np.maximum(dispersion, V_FLOOR)) * (np.log1p(gamma) - packet_bits * LN2 / n)
    eps = np.where(degenerate, 1.0, stats.norm.sf(argument))
    return np.asarray(np.clip(eps, 0.0, 1.0), dtype=np.float64)


def decoding_error_prob(gamma: float, spec: QosSpec, bandwidth_hz: Optional[float] = None) -> float:
    """Decoding error probability at SINR `gamma`, clamped to [0, 1]"""
    return float(decoding_error(gamma, _blocklength(spec, bandwidth_hz), spec.packet_bits))


@lru_cache(maxsize=4096)
def _sir_threshold(eps_th: float, blocklength: float, packet_bits: int) -> float:
    def excess(log_gamma: float) -> float:
        return float(decoding_error(math.exp(log_gamma), blocklength, packet_bits)) - eps_th

    if excess(math.log(GAMMA_MAX)) > 0.0:
        raise InfeasibleError(
            f"decoding error {eps_th:.3e} is unreachable for SINR up to {GAMMA_MAX:g} "
            f"(blocklength {blocklength:g}, {packet_bits} bits)"
        )

    log_gamma = optimize.brentq(excess, math.log(GAMMA_MIN), math.log(GAMMA_MAX), xtol=1e-13, rtol=1e-14)
    gamma = math.exp(log_gamma)

    # brentq may stop on either side of the root
    for _ in range(1000):
        if float(decoding_error(gamma, blocklength, packet_bits)) <= eps_th:
            break
        gamma *= 1.0 + 1e-9

    return gamma


def sir_threshold(eps_th: float, spec: QosSpec, bandwidth_hz: Optional[float] = None) -> float:
    """
    Smallest SINR whose decoding error probability does not exceed `eps_th`.

    Parameters
    ----------
    eps_th : float
        Decoding error target in (0, 1).
    spec : QosSpec
    bandwidth_hz : float, optional
        Bandwidth of the link, `spec.bandwidth_hz` if omitted.

    Returns
    -------
    float
        Linear SINR threshold.

    Raises
    ------
    DomainError
        `eps_th` outside (0, 1).
    InfeasibleError
        The target needs an SINR above 1e9.
    """
    if not 0.0 < eps_th < 1.0:
        raise DomainError(f"decoding error target must lie in (0, 1), got {eps_th}")
    gamma = _sir_threshold(float(eps_th), float(_blocklength(spec, bandwidth_hz)), spec.packet_bits)
    logger.debug(f"SIR threshold for eps_d={eps_th:.3e}: {gamma:.6g}")
    return gamma


def sample_fading(kind: FadingKind, spec: QosSpec, rng: np.random.Generator) -> FadingDraw:
    """
    One raw fading power draw.

    Rayleigh gives an Exp(1) draw. Nakagami gives h*h of an N_T antenna MRT channel,
    a Gamma draw with shape N_T m and rate m (mean N_T), before the division by N_T.
    """
    if kind is FadingKind.RAYLEIGH:
        return FadingDraw(float(rng.exponential(1.0)))
    return FadingDraw(float(rng.gamma(shape=spec.n_tx_antennas * spec.nakagami_m, scale=1.0 / spec.nakagami_m)))


def fading_power(
    kind: FadingKind, spec: QosSpec, rng: np.random.Generator, size: Union[int, tuple[int, ...]]
) -> FloatArray:
    """
    Batched fading powers as they enter the SINR, i.e. with the Nakagami draws divided by N_T.
    Both kinds have unit mean.
    """
    if kind is FadingKind.RAYLEIGH:
        return rng.standard_exponential(size)
    shape = spec.n_tx_antennas * spec.nakagami_m
    return rng.standard_gamma(shape, size) / shape
