"""
Monte Carlo estimation of QoS violation probabilities under random repetition.

A frame of link k spans its N_k reserved slots; the packet is sent in a uniformly
random M_k-subset of them. In every slot an interferer i transmits with probability
λ_i M_i (`bernoulli` activity) or follows its own frame pattern (`pattern` activity).
Fading is independent across slots by default (block fading per frame on request).
The packet is lost when every copy fails, so ε_c is the product of the per-copy
decoding errors, and the frame violates the QoS target when ε_q + ε_c > ε_max.

The scalar functions (`select_slots`, `sample_sinr`, `packet_loss_prob`) describe one
frame of one link and serve as the reference the vectorized engine is checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Callable, Optional

import numpy as np
from loguru import logger

from .exceptions import InfeasibleError, ShapeError
from .linkphy import decoding_error, fading_power
from .model import ActivityMode, FadingKind, McConfig, QosSpec
from .queueing import max_slots_array, queue_violation_array
from .topology import interference_mask, nearest_interferer_mask
from .types import BoolArray, FloatArray, IntArray, NetworkInstance, QosEstimate, RepetitionPolicy
from .utils import parallel_map, rng_stream

# Upper bound on (frames x slots x links x interferers) elements held at once
_CHUNK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class SimOptions:
    """
    Knobs of the Monte Carlo engine that do not change the estimated quantity's definition.

    Attributes
    ----------
    activity : ActivityMode
        Interferer activity model.
    per_slot_fading : bool
        Redraw fading every slot. When False the draws are held for the whole frame.
    nearest_interferer_only : bool
        Keep only the strongest allowed interferer of every receiver.
    cutoff_m : float, optional
        Drop interferers farther than this from the receiver.
    chunk_frames : int
        Frames simulated at once.
    """

    activity: ActivityMode = ActivityMode.BERNOULLI
    per_slot_fading: bool = True
    nearest_interferer_only: bool = False
    cutoff_m: Optional[float] = None
    chunk_frames: int = 256

    @classmethod
    def from_config(cls, mc: McConfig, cutoff_m: Optional[float]) -> SimOptions:
        return cls(
            activity=mc.activity,
            per_slot_fading=mc.per_slot_fading,
            nearest_interferer_only=mc.nearest_interferer_only,
            cutoff_m=cutoff_m,
            chunk_frames=mc.chunk_frames,
        )


def fading_scale(spec: QosSpec) -> float:
    """Divisor turning raw fading draws into SINR channel powers"""
    return float(spec.n_tx_antennas) if spec.fading is FadingKind.NAKAGAMI else 1.0


def check_policy(instance: NetworkInstance, policy: RepetitionPolicy, spec: QosSpec) -> None:
    """
    Check that a policy can be simulated on an instance: matching shapes, 1 <= M <= N,
    stable queues and at least one slot of queueing headroom.

    Raises
    ------
    ShapeError
        Policy vectors do not have one entry per link.
    InfeasibleError
        Any other violation.
    """
    k = instance.k_links
    if policy.n_slots.shape != (k,) or policy.m_reps.shape != (k,):
        raise ShapeError(
            f"policy has {policy.n_slots.shape} slots and {policy.m_reps.shape} repetitions for {k} link(s)"
        )
    if np.any(policy.m_reps < 1) or np.any(policy.m_reps > policy.n_slots):
        bad = int(np.argmax((policy.m_reps < 1) | (policy.m_reps > policy.n_slots)))
        raise InfeasibleError(
            f"link {bad}: repetitions must satisfy 1 <= M <= N, got N={policy.n_slots[bad]}, M={policy.m_reps[bad]}"
        )
    if np.any(instance.arrival * policy.n_slots >= 1.0):
        bad = int(np.argmax(instance.arrival * policy.n_slots >= 1.0))
        raise InfeasibleError(f"link {bad}: unstable queue, λN = {instance.arrival[bad] * policy.n_slots[bad]:.4g}")
    if np.any(policy.n_slots > spec.d_max_slots - 1):
        bad = int(np.argmax(policy.n_slots > spec.d_max_slots - 1))
        raise InfeasibleError(f"link {bad}: N={policy.n_slots[bad]} leaves no queueing headroom")


def policy_is_feasible(instance: NetworkInstance, policy: RepetitionPolicy, spec: QosSpec) -> bool:
    """True when 1 <= M <= N <= max_slots(λ) holds on every link"""
    try:
        check_policy(instance, policy, spec)
        return bool(np.all(policy.n_slots <= max_slots_array(instance.arrival, spec)))
    except (ShapeError, InfeasibleError):
        return False


def select_slots(n: int, m: int, rng: np.random.Generator) -> frozenset[int]:
    """Uniformly random m-subset of the slots {1, ..., n}"""
    if not 1 <= m <= n:
        raise InfeasibleError(f"cannot select {m} of {n} slots")
    return frozenset(int(s) + 1 for s in rng.choice(n, size=m, replace=False))


def sample_sinr(
    instance: NetworkInstance,
    k: int,
    slot_active: BoolArray,
    fading: FloatArray,
    spec: QosSpec,
    mask: Optional[BoolArray] = None,
) -> float:
    """
    SINR of link k in one slot.

    Parameters
    ----------
    instance : NetworkInstance
    k : int
        Receiving link.
    slot_active : BoolArray
        (K,) transmitters active in the slot, entry k is ignored.
    fading : FloatArray
        (K,) raw fading draws of the channels i -> k, entry k is the direct channel.
    spec : QosSpec
    mask : BoolArray, optional
        (K, K) interference mask, same-group interferers when omitted.

    Returns
    -------
    float
        Linear SINR, `inf` without interference and noise.
    """
    allowed = interference_mask(instance) if mask is None else mask
    scale = fading_scale(spec)
    power = spec.tx_power_mw
    signal = power * instance.gain[k, k] * fading[k] / scale
    interferers = np.asarray(slot_active, dtype=np.bool_) & allowed[:, k]
    interferers[k] = False
    interference = float(np.sum(power * instance.gain[interferers, k] * fading[interferers] / scale))
    denominator = interference + spec.noise_mw
    if denominator <= 0.0:
        return math.inf
    return float(signal / denominator)


def packet_loss_prob(
    instance: NetworkInstance,
    k: int,
    policy: RepetitionPolicy,
    frame_draws: FloatArray,
    rng: np.random.Generator,
    spec: QosSpec,
    *,
    activity: Optional[BoolArray] = None,
    mask: Optional[BoolArray] = None,
) -> float:
    """
    Loss probability ε_c of one packet of link k over one frame.

    Parameters
    ----------
    frame_draws : FloatArray
        (K,) raw fading of the channels i -> k, held for the whole frame.
    rng : numpy.random.Generator
        Picks the repetition slots and, unless `activity` is given, the interferer activity.
    activity : BoolArray, optional
        (M_k, K) interferer activity in each selected slot, overriding the
        Bernoulli(λ_i M_i) draws.
    """
    n, m = int(policy.n_slots[k]), int(policy.m_reps[k])
    slots = sorted(select_slots(n, m, rng))
    if activity is None:
        probability = np.minimum(instance.arrival * policy.m_reps, 1.0)
        activity = rng.random((len(slots), instance.k_links)) < probability
    elif activity.shape != (m, instance.k_links):
        raise ShapeError(f"activity must have shape {(m, instance.k_links)}, got {activity.shape}")

    allowed = interference_mask(instance) if mask is None else mask
    blocklength = spec.slot_ms / 1000.0 * instance.bandwidth_hz[k]

    loss = 1.0
    for row in activity:
        gamma = sample_sinr(instance, k, row, frame_draws, spec, allowed)
        loss *= float(decoding_error(gamma, blocklength, spec.packet_bits))
    return loss


@dataclass(frozen=True)
class _Neighbors:
    """Padded interferer table of the measured links"""

    tagged: IntArray  # (Kt,) measured link indices
    index: IntArray  # (Kt, Q) interferer indices, padding points at 0
    weight: FloatArray  # (Kt, Q) p_i μ_ik, 0 on padding
    signal: FloatArray  # (Kt,) p_k μ_kk
    blocklength: FloatArray  # (Kt,)

    @property
    def width(self) -> int:
        return int(self.index.shape[1])


def _neighbors(instance: NetworkInstance, spec: QosSpec, options: SimOptions) -> _Neighbors:
    mask = interference_mask(instance, options.cutoff_m)
    if options.nearest_interferer_only:
        mask = nearest_interferer_mask(instance, mask)

    tagged = np.flatnonzero(instance.measured).astype(np.int64)
    columns = mask[:, tagged]
    width = max(int(columns.sum(axis=0).max(initial=0)), 1)

    index = np.zeros((tagged.shape[0], width), dtype=np.int64)
    weight = np.zeros((tagged.shape[0], width), dtype=np.float64)
    power = spec.tx_power_mw
    for row, k in enumerate(tagged):
        sources = np.flatnonzero(columns[:, row])
        index[row, : sources.shape[0]] = sources
        weight[row, : sources.shape[0]] = power * instance.gain[sources, k]

    return _Neighbors(
        tagged=tagged,
        index=index,
        weight=weight,
        signal=power * instance.gain[tagged, tagged],
        blocklength=spec.slot_ms / 1000.0 * instance.bandwidth_hz[tagged],
    )


def _random_subsets(keys: FloatArray, n: IntArray, m: IntArray) -> BoolArray:
    """
    Uniform m-subsets of the first n positions along the last axis of `keys`.

    `keys` holds iid uniforms; positions beyond n are pushed to the back before ranking.
    """
    positions = np.arange(keys.shape[-1])
    keys = np.where(positions < n[..., None], keys, 2.0)
    rank = np.argsort(np.argsort(keys, axis=-1), axis=-1)
    return np.asarray(rank < m[..., None], dtype=np.bool_)


def _activity_bernoulli(
    rng: np.random.Generator, frames: int, slots: int, probability: FloatArray
) -> BoolArray:
    return np.asarray(rng.random((frames, slots, probability.shape[0])) < probability, dtype=np.bool_)


def _activity_pattern(
    rng: np.random.Generator, frames: int, slots: int, n_slots: IntArray, m_reps: IntArray, arrival: FloatArray
) -> BoolArray:
    """
    Frame-level activity. Interferer i repeats frames of N_i slots aligned with slot 0;
    each frame carries a packet with probability min(1, λ_i N_i) and then occupies a
    uniform M_i-subset of its slots.
    """
    k = n_slots.shape[0]
    n_max = int(n_slots.max())
    repeats = -(-slots // int(n_slots.min()))

    busy = rng.random((frames, k, repeats)) < np.minimum(arrival * n_slots, 1.0)[None, :, None]
    keys = rng.random((frames, k, repeats, n_max))
    chosen = _random_subsets(keys, n_slots[None, :, None], m_reps[None, :, None])

    t = np.arange(slots)
    frame_of = t[None, :] // n_slots[:, None]  # (K, T)
    offset = t[None, :] % n_slots[:, None]
    links = np.arange(k)[:, None]
    active = busy[:, links, frame_of] & chosen[:, links, frame_of, offset]  # (F, K, T)
    return np.asarray(np.transpose(active, (0, 2, 1)), dtype=np.bool_)


def _violations_chunk(
    rng: np.random.Generator,
    frames: int,
    instance: NetworkInstance,
    policy: RepetitionPolicy,
    spec: QosSpec,
    options: SimOptions,
    table: _Neighbors,
    eps_q: FloatArray,
) -> IntArray:
    """Violating frames per measured link over `frames` simulated frames"""
    n_tag = policy.n_slots[table.tagged]
    m_tag = policy.m_reps[table.tagged]
    slots = int(n_tag.max())
    kt, q = table.index.shape

    if options.activity is ActivityMode.PATTERN:
        active = _activity_pattern(rng, frames, slots, policy.n_slots, policy.m_reps, instance.arrival)
    else:
        probability = np.minimum(instance.arrival * policy.m_reps, 1.0)
        active = _activity_bernoulli(rng, frames, slots, probability)

    selected = _random_subsets(rng.random((frames, kt, slots)), n_tag[None, :], m_tag[None, :])  # (F, Kt, T)
    selected = np.transpose(selected, (0, 2, 1))  # (F, T, Kt)

    kind = spec.fading
    if options.per_slot_fading:
        own = fading_power(kind, spec, rng, (frames, slots, kt))
        cross = fading_power(kind, spec, rng, (frames, slots, kt, q))
    else:
        own = fading_power(kind, spec, rng, (frames, 1, kt))
        cross = fading_power(kind, spec, rng, (frames, 1, kt, q))

    # (F, T, Kt, Q) activity of every listed interferer
    gathered = active[:, :, table.index]
    interference = np.sum(gathered * (table.weight * cross), axis=-1)
    signal = table.signal * own
    denominator = interference + spec.noise_mw
    with np.errstate(divide="ignore"):
        sinr = np.where(denominator > 0.0, signal / np.where(denominator > 0.0, denominator, 1.0), np.inf)

    eps_d = decoding_error(sinr, table.blocklength, spec.packet_bits)
    eps_c = np.prod(np.where(selected, eps_d, 1.0), axis=1)  # (F, Kt)
    violated = eps_q[None, :] + eps_c > spec.eps_max
    return np.asarray(violated.sum(axis=0), dtype=np.int64)


def simulate_violations(
    instance: NetworkInstance,
    policy: RepetitionPolicy,
    spec: QosSpec,
    frames: int,
    rng: np.random.Generator,
    options: SimOptions = SimOptions(),
) -> tuple[IntArray, IntArray]:
    """
    Simulate `frames` frames of every measured link.

    Returns
    -------
    tuple[IntArray, IntArray]
        Measured link indices and the number of frames in which each violated the target.
    """
    check_policy(instance, policy, spec)
    table = _neighbors(instance, spec, options)
    kt = table.tagged.shape[0]
    if kt == 0:
        return table.tagged, np.zeros(0, dtype=np.int64)

    eps_q = queue_violation_array(instance.arrival[table.tagged], policy.n_slots[table.tagged], spec)
    slots = int(policy.n_slots[table.tagged].max())
    per_frame = max(slots * kt * table.width, instance.k_links * slots * int(policy.n_slots.max()), 1)
    chunk = max(1, min(options.chunk_frames, _CHUNK_ELEMENTS // per_frame))

    counts = np.zeros(kt, dtype=np.int64)
    done = 0
    while done < frames:
        size = min(chunk, frames - done)
        counts += _violations_chunk(rng, size, instance, policy, spec, options, table, eps_q)
        done += size

    return table.tagged, counts


def _realization(
    index: int,
    instance: NetworkInstance,
    policy: RepetitionPolicy,
    spec: QosSpec,
    frames: int,
    seed: int,
    options: SimOptions,
) -> IntArray:
    _, counts = simulate_violations(instance, policy, spec, frames, rng_stream(seed, "mcsim", index), options)
    return counts


def estimate_qos_violation(
    instance: NetworkInstance,
    policy: RepetitionPolicy,
    spec: QosSpec,
    realizations: int,
    frames_per_realization: int,
    seed: int,
    *,
    options: SimOptions = SimOptions(),
    workers: Optional[int] = 1,
    on_realization: Optional[Callable[[], None]] = None,
) -> QosEstimate:
    """
    Estimate per-link and network QoS violation probabilities on a fixed instance.

    Realization r draws from the stream `("mcsim", r)` of `seed`, so the estimate is
    identical for any worker count.

    Raises
    ------
    InfeasibleError
        An unstable queue or a policy without queueing headroom.
    ShapeError
        The policy does not match the instance.
    """
    check_policy(instance, policy, spec)
    links = np.flatnonzero(instance.measured).astype(np.int64)
    logger.debug(
        f"Monte Carlo: {links.shape[0]} measured link(s) of {instance.k_links}, "
        f"{realizations} realization(s) x {frames_per_realization} frame(s)"
    )

    job = partial(
        _realization,
        instance=instance,
        policy=policy,
        spec=spec,
        frames=frames_per_realization,
        seed=seed,
        options=options,
    )
    counts = parallel_map(job, range(realizations), workers=workers, on_done=on_realization)
    return summarize(links, counts, frames_per_realization, seed)


def summarize(links: IntArray, counts: list[IntArray], frames: int, seed: int) -> QosEstimate:
    """Reduce per-realization violation counts, in realization order, into a `QosEstimate`"""
    if not counts or links.shape[0] == 0:
        return QosEstimate(
            links=links,
            p_k=np.zeros(links.shape[0]),
            p_vio=0.0,
            trials=len(counts) * frames,
            seed=seed,
            realization_p_vio=np.zeros(len(counts)),
        )

    stacked = np.stack(counts).astype(np.float64)  # (R, Kt)
    trials = stacked.shape[0] * frames
    p_k = stacked.sum(axis=0) / trials
    return QosEstimate(
        links=links,
        p_k=p_k,
        p_vio=float(p_k.mean()),
        trials=trials,
        seed=seed,
        realization_p_vio=stacked.mean(axis=1) / frames,
    )


def probe_loss(
    instance: NetworkInstance,
    policy: RepetitionPolicy,
    spec: QosSpec,
    trials: int,
    seed: int,
    *,
    options: SimOptions = SimOptions(),
    rng: Optional[np.random.Generator] = None,
) -> float:
    """
    Loss probed by the trainer: log of the QoS violation probability over `trials` frames,
    floored at 1/(2 trials K) so that it stays finite.
    """
    generator = rng_stream(seed, "probe") if rng is None else rng
    links, counts = simulate_violations(instance, policy, spec, trials, generator, options)
    k = max(links.shape[0], 1)
    p_vio = float(counts.sum()) / (trials * k) if links.shape[0] else 0.0
    return loss_from_p_vio(p_vio, trials, k)


def loss_from_p_vio(p_vio: float, trials: int, k_links: int) -> float:
    return math.log(max(p_vio, 1.0 / (2.0 * trials * max(k_links, 1))))

