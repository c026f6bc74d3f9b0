"""
Closed-form approximations of the QoS violation probability in the symmetric Poisson
bipolar network, and the exhaustive search over (N0, M0) that minimizes the larger one.

P_A1 treats the aggregate interference of all links whose M0-subsets overlap,
P_A2 keeps only the nearest active transmitter and requires it to pick the very same
slots as the tagged link.
"""

from __future__ import annotations

import math
from collections.abc import Iterable
from typing import Callable, Optional

import numpy as np
from loguru import logger
from scipy import integrate, special

from .exceptions import DivergenceError, DomainError, InfeasibleError
from .linkphy import sir_threshold
from .model import QosSpec, SymmetricScenario
from .queueing import max_slots, queue_violation_prob
from .types import ApproxInputs, EsPoint, EsResult, FloatArray


def _characteristic_u(scenario: SymmetricScenario, n0: int, gamma_th: float) -> float:
    """πρλN0 r0² γ^(2/α), the interference scale in units of the nearest-neighbor exponent"""
    return (
        math.pi * scenario.density_m2 * scenario.lambda0 * n0 * scenario.r0**2 * gamma_th ** (2.0 / scenario.alpha)
    )


def constant_c(scenario: SymmetricScenario, n0: int, gamma_th: float) -> float:
    """
    C = πρλN0 r0² γ^(2/α) Γ(1 + 2/α) Γ(1 - 2/α), ρ taken per m².

    Raises
    ------
    DivergenceError
        α <= 2, the aggregate interference has no finite Laplace transform.
    """
    if scenario.alpha <= 2.0:
        raise DivergenceError(f"path-loss exponent must exceed 2, got {scenario.alpha}")
    delta = 2.0 / scenario.alpha
    return _characteristic_u(scenario, n0, gamma_th) * float(special.gamma(1.0 + delta) * special.gamma(1.0 - delta))


def collision_prob(n0: int, m0: int) -> float:
    """
    Z = 1 / C(n0, m0), the chance that two links repeat in the same M0 slots.

    Evaluated as a running product so that large n0 never overflows.
    """
    if not 1 <= m0 <= n0:
        raise DomainError(f"expected 1 <= m0 <= n0, got n0={n0}, m0={m0}")
    k = min(m0, n0 - m0)
    z = 1.0
    for j in range(1, k + 1):
        z *= j / (n0 - k + j)
    return z


def approx_inputs(scenario: SymmetricScenario, n0: int, m0: int, gamma_th: float) -> ApproxInputs:
    return ApproxInputs(
        n0=n0,
        m0=m0,
        gamma_th=gamma_th,
        constant_c=constant_c(scenario, n0, gamma_th),
        z_collision=collision_prob(n0, m0),
        scenario=scenario,
    )


def approx_p_a1(inputs: ApproxInputs) -> float:
    """(1 - exp(-(M0/N0) C))^M0"""
    single = -math.expm1(-inputs.m0 / inputs.n0 * inputs.constant_c)
    return float(min(max(single**inputs.m0, 0.0), 1.0))


def _no_collision_integral(u_c: float, alpha: float) -> float:
    """
    ∫ e^-u / (1 + (u/u_c)^(α/2)) du over (0, ∞), the probability that the nearest active
    transmitter, at squared distance u/(πρλN0), pushes the SIR below the threshold.
    """
    if u_c <= 0.0:
        return 0.0
    if math.isinf(u_c):
        return 1.0
    half = alpha / 2.0

    def integrand(u: float) -> float:
        return math.exp(-u) / (1.0 + (u / u_c) ** half)

    head, _ = integrate.quad(integrand, 0.0, u_c, epsabs=0.0, epsrel=1e-11, limit=200)
    tail, _ = integrate.quad(integrand, u_c, math.inf, epsabs=0.0, epsrel=1e-11, limit=200)
    return float(head + tail)


def approx_p_a2(inputs: ApproxInputs) -> float:
    """
    Z (1 - ∫ f1(r) / (1 + γ r0^α r^-α) dr) with f1 the nearest active-transmitter density.

    The substitution u = πρλN0 r² turns f1 dr into e^-u du; the complement is integrated
    directly, so small results keep their relative accuracy.
    """
    scenario = inputs.scenario
    u_c = _characteristic_u(scenario, inputs.n0, inputs.gamma_th)
    value = inputs.z_collision * _no_collision_integral(u_c, scenario.alpha)
    return float(min(max(value, 0.0), inputs.z_collision))


def nearest_interferer_oracle(inputs: ApproxInputs, rng: np.random.Generator, draws: int) -> float:
    """
    Monte Carlo counterpart of `approx_p_a2`: sample the nearest active-transmitter distance
    from f1 and average the SIR outage it causes.
    """
    scenario = inputs.scenario
    intensity = math.pi * scenario.density_m2 * scenario.lambda0 * inputs.n0
    r = np.sqrt(rng.standard_exponential(draws) / intensity)
    outage = 1.0 - 1.0 / (1.0 + inputs.gamma_th * scenario.r0**scenario.alpha * r**-scenario.alpha)
    return float(inputs.z_collision * np.mean(outage))


def lemma1_bound_check(eps_q: float, eps_d: Iterable[float], eps_max: float) -> bool:
    """
    True when the best copy alone meets the decoding budget, min ε_d <= ε_max - ε_q,
    which guarantees ε_q + Π ε_d <= ε_max.
    """
    values: FloatArray = np.asarray(list(eps_d), dtype=np.float64)
    if values.size == 0:
        raise DomainError("at least one decoding error probability is required")
    if not (0.0 <= eps_q <= 1.0 and 0.0 <= eps_max <= 1.0) or np.any((values < 0.0) | (values > 1.0)):
        raise DomainError("probabilities must lie in [0, 1]")
    return bool(values.min() <= eps_max - eps_q)


def exhaustive_search(
    scenario: SymmetricScenario,
    spec: QosSpec,
    on_row: Optional[Callable[[int], None]] = None,
) -> EsResult:
    """
    Minimize max(P_A1, P_A2) over 1 <= M0 <= N0 <= max_slots(λ0).

    For every N0 the decoding budget is ε_max - ε_q(N0) and the SIR threshold is found
    once; the M0 loop reuses it.

    Parameters
    ----------
    scenario : SymmetricScenario
    spec : QosSpec
    on_row : Callable[[int], None], optional
        Called after every N0 with that N0, e.g. to advance a progress bar.

    Returns
    -------
    EsResult
        Optimum and the full surface ordered by N0 then M0. Ties go to the smallest N0, then M0.

    Raises
    ------
    InfeasibleError
        No N0 leaves a positive decoding budget.
    """
    n_max = max_slots(scenario.lambda0, spec)
    logger.debug(f"ES: density {scenario.density:g}/km², λ0={scenario.lambda0:g}, N0 up to {n_max}")

    surface: list[EsPoint] = []
    for n0 in range(1, n_max + 1):
        eps_q = queue_violation_prob(scenario.lambda0, n0, spec)
        budget = spec.eps_max - eps_q
        if budget <= 0.0:
            logger.debug(f"ES: N0={n0} skipped, ε_q={eps_q:.3e} leaves no decoding budget")
            continue

        gamma_th = sir_threshold(budget, spec)
        for m0 in range(1, n0 + 1):
            inputs = approx_inputs(scenario, n0, m0, gamma_th)
            p_a1, p_a2 = approx_p_a1(inputs), approx_p_a2(inputs)
            surface.append(
                EsPoint(
                    objective=max(p_a1, p_a2),
                    n0=n0,
                    m0=m0,
                    eps_q=eps_q,
                    gamma_th=gamma_th,
                    p_a1=p_a1,
                    p_a2=p_a2,
                )
            )

        if on_row is not None:
            on_row(n0)

    if not surface:
        raise InfeasibleError(f"no (N0, M0) meets eps_max={spec.eps_max:g} at λ0={scenario.lambda0:g}")

    best = min(surface)
    logger.debug(f"ES optimum ({best.n0}, {best.m0}), objective {best.objective:.4e}")
    return EsResult(n0=best.n0, m0=best.m0, objective=best.objective, surface=surface)


def density_sweep(
    scenario: SymmetricScenario,
    spec: QosSpec,
    densities: Iterable[float],
    on_density: Optional[Callable[[], None]] = None,
) -> list[tuple[SymmetricScenario, EsResult]]:
    """Exhaustive search repeated for every density, all else fixed"""
    sweeps = []
    for density in densities:
        swept = scenario.model_copy(update={"density": float(density)})
        sweeps.append((swept, exhaustive_search(swept, spec)))
        if on_density is not None:
            on_density()
    return sweeps
