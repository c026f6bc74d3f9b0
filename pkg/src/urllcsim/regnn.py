"""
Cascaded random-edge graph neural network emitting per-link repetition policies.

Network 1 reads the arrival rates and emits the truncated Gaussian of z1 (reserved
slots), network 2 reads z1 and emits the truncated Gaussian of z2 (repetitions).
Every layer is a polynomial graph filter over the normalized gain matrix. Training
is unsupervised: the Monte Carlo loss of a sampled policy scales the score
∇ log Ψ(z1, z2), and both networks descend along the batch mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Callable, Literal, Optional

import numpy as np
from loguru import logger
from pydantic import BaseModel, ValidationError
from scipy import special, stats

from .exceptions import DomainError, ShapeError, TrainingDivergedError
from .mcsim import SimOptions, probe_loss
from .model import QosSpec, TrainConfig
from .queueing import max_slots_array
from .topology import interference_mask
from .types import (
    FloatArray,
    IntArray,
    NetworkInstance,
    PolicyHeads,
    RegnnParams,
    RepetitionPolicy,
    TrainResult,
    TrainState,
)
from .utils import parallel_map, rng_stream

Activation = Literal["relu", "sigmoid", "identity"]
InstanceSampler = Callable[[int, int], NetworkInstance]
"""Returns the training instance of (iteration, batch sample)"""

HEAD_FEATURES = 2
"""Output features of the final layer, the logits of ξ and β"""

ROUND_TOL = 1e-9


# --------------------------------------------------------------------------------------------
# Graph filters
# --------------------------------------------------------------------------------------------


def _activate(z: FloatArray, activation: Activation) -> FloatArray:
    if activation == "relu":
        return np.maximum(z, 0.0)
    if activation == "sigmoid":
        return np.asarray(special.expit(z), dtype=np.float64)
    return z


def _shifted_signals(h_norm: FloatArray, y_in: FloatArray, taps: int) -> FloatArray:
    """(I, K, F) stack of S^i y, each power obtained from the previous one"""
    shifted = np.empty((taps, *y_in.shape), dtype=np.float64)
    shifted[0] = y_in
    for i in range(1, taps):
        shifted[i] = h_norm @ shifted[i - 1]
    return shifted


def _check_layer(h_norm: FloatArray, y_in: FloatArray, taps: FloatArray) -> None:
    k = y_in.shape[0]
    if h_norm.shape != (k, k):
        raise ShapeError(f"graph shift has shape {h_norm.shape}, expected ({k}, {k})")
    if taps.ndim != 3 or taps.shape[1] != y_in.shape[1]:
        raise ShapeError(f"filter taps of shape {taps.shape} do not accept {y_in.shape[1]} input feature(s)")


def graph_filter_forward(
    h_norm: FloatArray, y_in: FloatArray, taps: FloatArray, activation: Activation = "relu"
) -> FloatArray:
    """
    One graph filter layer.

    Parameters
    ----------
    h_norm : FloatArray
        (K, K) graph shift, row k aggregates what receiver k hears.
    y_in : FloatArray
        (K, F_in) node signal.
    taps : FloatArray
        (I, F_in, F_out) coefficients, tap i multiplies S^i.
    activation : {"relu", "sigmoid", "identity"}

    Returns
    -------
    FloatArray
        (K, F_out) activated output, ψ(Σ_i S^i y A_i).

    Raises
    ------
    ShapeError
        The dimensions of the shift, signal and taps disagree.
    """
    h_norm = np.asarray(h_norm, dtype=np.float64)
    y_in = np.asarray(y_in, dtype=np.float64)
    taps = np.asarray(taps, dtype=np.float64)
    _check_layer(h_norm, y_in, taps)
    shifted = _shifted_signals(h_norm, y_in, taps.shape[0])
    return _activate(np.einsum("ikf,ifg->kg", shifted, taps), activation)


def normalize_gain(instance: NetworkInstance, cutoff_m: Optional[float] = None) -> FloatArray:
    """
    Graph shift of an instance: the transposed gain matrix, restricted to the links that can
    interfere plus the direct links, divided by its largest entry.

    Dividing by the largest entry makes the shift, and every output of the cascade,
    invariant to a global scaling of the gains.
    """
    k = instance.k_links
    allowed = interference_mask(instance, cutoff_m) | np.eye(k, dtype=np.bool_)
    shift = np.where(allowed, instance.gain, 0.0).T
    peak = float(shift.max()) if k else 0.0
    if peak <= 0.0 or not math.isfinite(peak):
        return np.zeros((k, k), dtype=np.float64)
    return np.asarray(shift / peak, dtype=np.float64)


def layer_shapes(config: TrainConfig) -> list[tuple[int, int, int]]:
    """(I, F_in, F_out) of every layer of one network, scalar input and two head features"""
    shapes = []
    for layer in range(config.layers):
        f_in = 1 if layer == 0 else config.features
        f_out = HEAD_FEATURES if layer == config.layers - 1 else config.features
        shapes.append((config.taps, f_in, f_out))
    return shapes


def init_params(config: TrainConfig, seed: int) -> RegnnParams:
    """Coefficients drawn from a zero-mean Gaussian truncated at two deviations, scaled by `init_std`"""
    rng = rng_stream(seed, "init")
    networks = [
        [
            np.asarray(stats.truncnorm.rvs(-2.0, 2.0, size=shape, random_state=rng), dtype=np.float64) * config.init_std
            for shape in layer_shapes(config)
        ]
        for _ in range(2)
    ]
    return RegnnParams(networks=networks, beta_min=config.beta_min)


@dataclass(frozen=True)
class _LayerCache:
    shifted: FloatArray
    """(I, K, F_in) stack of S^i y"""

    pre: FloatArray
    """(K, F_out) output before the activation"""


def _network_forward(
    h_norm: FloatArray, signal: FloatArray, net: list[FloatArray]
) -> tuple[FloatArray, list[_LayerCache]]:
    """Run one network, rectifier between layers, and return the final logits with the layer caches"""
    y = signal
    caches: list[_LayerCache] = []
    for index, taps in enumerate(net):
        _check_layer(h_norm, y, taps)
        shifted = _shifted_signals(h_norm, y, taps.shape[0])
        pre = np.einsum("ikf,ifg->kg", shifted, taps)
        caches.append(_LayerCache(shifted=shifted, pre=pre))
        y = pre if index == len(net) - 1 else np.maximum(pre, 0.0)
    return y, caches


def _heads(logits: FloatArray, beta_min: float) -> PolicyHeads:
    xi = special.expit(logits[:, 0])
    beta = beta_min + (1.0 - beta_min) * special.expit(logits[:, 1])
    return PolicyHeads(xi=np.asarray(xi, dtype=np.float64), beta=np.asarray(beta, dtype=np.float64))


def _bounds(xi: FloatArray, beta: FloatArray) -> tuple[FloatArray, FloatArray]:
    return -xi / beta, (1.0 - xi) / beta


def sample_truncnorm(heads: PolicyHeads, rng: np.random.Generator) -> FloatArray:
    """One draw per link from N(ξ, β²) truncated to [0, 1]"""
    a, b = _bounds(heads.xi, heads.beta)
    draws = stats.truncnorm.rvs(a, b, loc=heads.xi, scale=heads.beta, random_state=rng)
    return np.clip(np.asarray(draws, dtype=np.float64).reshape(heads.xi.shape), 0.0, 1.0)


@dataclass(frozen=True)
class CascadeOutput:
    """
    Attributes
    ----------
    heads_n : PolicyHeads
        Distribution of z1, the normalized reserved slots.
    z1 : FloatArray
    heads_m : PolicyHeads
        Distribution of z2 given z1, the normalized repetitions.
    z2 : FloatArray
    """

    heads_n: PolicyHeads
    z1: FloatArray
    heads_m: PolicyHeads
    z2: FloatArray


def cascade_forward(
    instance: NetworkInstance,
    params: RegnnParams,
    rng: Optional[np.random.Generator] = None,
    *,
    cutoff_m: Optional[float] = None,
) -> CascadeOutput:
    """
    Run both networks.

    With a generator, z1 and z2 are sampled from the emitted truncated Gaussians.
    Without one the policy is deterministic: z1 = ξ1 and z2 = ξ2 given z1.
    """
    h_norm = normalize_gain(instance, cutoff_m)
    logits_n, _ = _network_forward(h_norm, instance.arrival[:, None], params.networks[0])
    heads_n = _heads(logits_n, params.beta_min)
    z1 = heads_n.xi.copy() if rng is None else sample_truncnorm(heads_n, rng)

    logits_m, _ = _network_forward(h_norm, z1[:, None], params.networks[1])
    heads_m = _heads(logits_m, params.beta_min)
    z2 = heads_m.xi.copy() if rng is None else sample_truncnorm(heads_m, rng)

    return CascadeOutput(heads_n=heads_n, z1=z1, heads_m=heads_m, z2=z2)


# --------------------------------------------------------------------------------------------
# Score function
# --------------------------------------------------------------------------------------------


def _log_mass(a: FloatArray, b: FloatArray) -> FloatArray:
    """log(Φ(b) - Φ(a)), taken from the tail that keeps precision"""
    upper = a > 0.0
    mass = np.where(upper, special.ndtr(-a) - special.ndtr(-b), special.ndtr(b) - special.ndtr(a))
    return np.asarray(np.log(mass), dtype=np.float64)


def truncnorm_logpdf_grad(
    z: FloatArray, xi: FloatArray, beta: FloatArray
) -> tuple[FloatArray, FloatArray, FloatArray]:
    """
    Log density of N(ξ, β²) truncated to [0, 1] at z, and its exact partials in ξ and β.

    Returns
    -------
    tuple[FloatArray, FloatArray, FloatArray]
        `(logpdf, d/dξ, d/dβ)`, shaped like the broadcast inputs.

    Raises
    ------
    DomainError
        z outside [0, 1] or β not positive.
    """
    z, xi, beta = (np.asarray(v, dtype=np.float64) for v in np.broadcast_arrays(z, xi, beta))
    if np.any((z < 0.0) | (z > 1.0)) or not np.all(np.isfinite(z)):
        raise DomainError("truncated Gaussian samples must lie in [0, 1]")
    if np.any(beta <= 0.0):
        raise DomainError("truncated Gaussian deviation must be positive")

    u = (z - xi) / beta
    a, b = _bounds(xi, beta)
    log_mass = _log_mass(a, b)
    mass = np.exp(log_mass)
    pdf_a, pdf_b = stats.norm.pdf(a), stats.norm.pdf(b)

    logpdf = -0.5 * u**2 - 0.5 * math.log(2.0 * math.pi) - np.log(beta) - log_mass
    d_xi = u / beta + (pdf_b - pdf_a) / (beta * mass)
    d_beta = (u**2 - 1.0) / beta + (b * pdf_b - a * pdf_a) / (beta * mass)
    return logpdf, d_xi, d_beta


def _network_backward(
    h_norm: FloatArray, net: list[FloatArray], caches: list[_LayerCache], d_logits: FloatArray
) -> list[FloatArray]:
    grads: list[FloatArray] = [np.zeros_like(taps) for taps in net]
    d_pre = d_logits
    for index in range(len(net) - 1, -1, -1):
        taps, cache = net[index], caches[index]
        grads[index] = np.einsum("ikf,kg->ifg", cache.shifted, d_pre)
        if index == 0:
            break

        # d/dy of Σ_i S^i y A_i, evaluated in Horner form
        d_shifted = np.einsum("kg,ifg->ikf", d_pre, taps)
        d_y = d_shifted[-1]
        for i in range(taps.shape[0] - 2, -1, -1):
            d_y = h_norm.T @ d_y + d_shifted[i]
        d_pre = d_y * (caches[index - 1].pre > 0.0)
    return grads


def _head_logit_grads(heads: PolicyHeads, d_xi: FloatArray, d_beta: FloatArray, beta_min: float) -> FloatArray:
    s = (heads.beta - beta_min) / (1.0 - beta_min)
    return np.column_stack((d_xi * heads.xi * (1.0 - heads.xi), d_beta * (1.0 - beta_min) * s * (1.0 - s)))


def _score(
    instance: NetworkInstance,
    params: RegnnParams,
    z1: FloatArray,
    z2: FloatArray,
    cutoff_m: Optional[float],
) -> tuple[float, list[list[FloatArray]]]:
    k = instance.k_links
    z1 = np.asarray(z1, dtype=np.float64)
    z2 = np.asarray(z2, dtype=np.float64)
    if z1.shape != (k,) or z2.shape != (k,):
        raise ShapeError(f"samples of shape {z1.shape} and {z2.shape} do not match {k} link(s)")

    h_norm = normalize_gain(instance, cutoff_m)
    log_density = 0.0
    grads: list[list[FloatArray]] = []
    for net, signal, sample in ((params.networks[0], instance.arrival, z1), (params.networks[1], z1, z2)):
        logits, caches = _network_forward(h_norm, signal[:, None], net)
        heads = _heads(logits, params.beta_min)
        logpdf, d_xi, d_beta = truncnorm_logpdf_grad(sample, heads.xi, heads.beta)
        log_density += float(logpdf.sum())
        d_logits = _head_logit_grads(heads, d_xi, d_beta, params.beta_min)
        grads.append(_network_backward(h_norm, net, caches, d_logits))
    return log_density, grads


def log_policy_density(
    instance: NetworkInstance,
    params: RegnnParams,
    z1: FloatArray,
    z2: FloatArray,
    *,
    cutoff_m: Optional[float] = None,
) -> float:
    """log Ψ_N(z1) + log Ψ_M|N(z2 | z1), summed over links"""
    return _score(instance, params, z1, z2, cutoff_m)[0]


def backward(
    instance: NetworkInstance,
    params: RegnnParams,
    z1: FloatArray,
    z2: FloatArray,
    loss_value: float,
    *,
    cutoff_m: Optional[float] = None,
) -> list[list[FloatArray]]:
    """
    Score-function gradient `loss_value · ∇ log Ψ` with the layout of `params.networks`.

    Network 1 only receives the gradient of log Ψ_N, network 2 only that of log Ψ_M|N;
    z1 is a constant input of network 2.
    """
    _, grads = _score(instance, params, z1, z2, cutoff_m)
    return [[loss_value * g for g in net] for net in grads]


def round_policy(z1: FloatArray, z2: FloatArray, n_q_max: IntArray) -> RepetitionPolicy:
    """
    N = ceil(z1 N^{q,max}) in [1, N^{q,max}] and M = round(z2 N) in [1, N].

    Raises
    ------
    DomainError
        z entries outside [0, 1].
    """
    z1 = np.asarray(z1, dtype=np.float64)
    z2 = np.asarray(z2, dtype=np.float64)
    n_q_max = np.asarray(n_q_max, dtype=np.int64)
    if np.any((z1 < 0.0) | (z1 > 1.0)) or np.any((z2 < 0.0) | (z2 > 1.0)):
        raise DomainError("policy outputs must lie in [0, 1]")

    n = np.clip(np.ceil(z1 * n_q_max - ROUND_TOL), 1, np.maximum(n_q_max, 1)).astype(np.int64)
    m = np.clip(np.floor(z2 * n + 0.5), 1, n).astype(np.int64)
    return RepetitionPolicy(n_slots=n, m_reps=m)


def infer_policy(
    instance: NetworkInstance,
    params: RegnnParams,
    spec: QosSpec,
    rng: Optional[np.random.Generator] = None,
    *,
    cutoff_m: Optional[float] = None,
) -> RepetitionPolicy:
    """Policy of a trained cascade on one instance, deterministic without a generator"""
    output = cascade_forward(instance, params, rng, cutoff_m=cutoff_m)
    return round_policy(output.z1, output.z2, max_slots_array(instance.arrival, spec))


# --------------------------------------------------------------------------------------------
# Training
# --------------------------------------------------------------------------------------------


@dataclass(frozen=True)
class _Sample:
    loss: float
    score: list[list[FloatArray]]
    policy: RepetitionPolicy


def _train_sample(
    index: tuple[int, int],
    *,
    params: RegnnParams,
    sampler: InstanceSampler,
    spec: QosSpec,
    probe_frames: int,
    seed: int,
    options: SimOptions,
) -> _Sample:
    iteration, slot = index
    rng = rng_stream(seed, "train", iteration, slot)
    instance = sampler(iteration, slot)
    output = cascade_forward(instance, params, rng, cutoff_m=options.cutoff_m)
    policy = round_policy(output.z1, output.z2, max_slots_array(instance.arrival, spec))
    loss = probe_loss(instance, policy, spec, probe_frames, seed, options=options, rng=rng)
    _, score = _score(instance, params, output.z1, output.z2, options.cutoff_m)
    return _Sample(loss=loss, score=score, policy=policy)


def train(
    config: TrainConfig,
    sampler: InstanceSampler,
    spec: QosSpec,
    seed: int,
    *,
    params: Optional[RegnnParams] = None,
    state: Optional[TrainState] = None,
    options: SimOptions = SimOptions(),
    workers: Optional[int] = 1,
    on_iteration: Optional[Callable[[TrainState, RegnnParams, float], None]] = None,
) -> TrainResult:
    """
    Unsupervised policy-gradient training of the cascade.

    Iteration τ draws `config.batch` instances from `sampler(τ, b)`, samples and rounds a
    policy for each one with stream `("train", τ, b)`, probes its loss with Monte Carlo
    and descends along the batch mean of `(loss - baseline) ∇ log Ψ`.

    Parameters
    ----------
    config : TrainConfig
    sampler : InstanceSampler
        Picklable callable returning the instance of (iteration, batch sample).
    spec : QosSpec
    seed : int
    params : RegnnParams, optional
        Starting parameters, freshly initialized when omitted.
    state : TrainState, optional
        Progress of a resumed run, iterations before `state.iteration` are skipped.
    options : SimOptions
        Options of the loss probes.
    workers : int, optional
        Processes evaluating the batch samples.
    on_iteration : Callable[[TrainState, RegnnParams, float], None], optional
        Called after every update with the new state, parameters and batch-mean loss.

    Returns
    -------
    TrainResult
        Final parameters, the loss of every iteration run in this call and the final state.

    Raises
    ------
    TrainingDivergedError
        A probe loss or a gradient is not finite.
    """
    params = init_params(config, seed) if params is None else params.copy()
    state = TrainState(seed=seed) if state is None else state
    rates = (config.lr_n, config.lr_m)
    losses: list[float] = []

    logger.debug(
        f"Training {params.count} coefficient(s), iterations {state.iteration} to {config.iterations - 1}, "
        f"batch {config.batch}"
    )

    for iteration in range(state.iteration, config.iterations):
        job = partial(
            _train_sample,
            params=params,
            sampler=sampler,
            spec=spec,
            probe_frames=config.probe_frames,
            seed=seed,
            options=options,
        )
        samples = parallel_map(job, [(iteration, b) for b in range(config.batch)], workers=workers)

        batch_losses = np.array([s.loss for s in samples], dtype=np.float64)
        if not np.all(np.isfinite(batch_losses)):
            raise TrainingDivergedError(f"non-finite loss at iteration {iteration}")
        mean_loss = float(batch_losses.mean())

        baseline = state.baseline
        reference = (mean_loss if baseline is None else baseline) if config.baseline else 0.0

        for j, rate in enumerate(rates):
            if rate == 0.0:
                continue
            for layer in range(len(params.networks[j])):
                grad = np.mean([(s.loss - reference) * s.score[j][layer] for s in samples], axis=0)
                if not np.all(np.isfinite(grad)):
                    raise TrainingDivergedError(f"non-finite gradient in network {j + 1}, layer {layer + 1}")
                params.networks[j][layer] = params.networks[j][layer] - rate * grad

        if config.baseline:
            decay = config.baseline_decay
            baseline = mean_loss if baseline is None else decay * baseline + (1.0 - decay) * mean_loss
        state = TrainState(iteration=iteration + 1, baseline=baseline, seed=seed)
        losses.append(mean_loss)

        logger.debug(f"Iteration {iteration}: loss {mean_loss:.4f}")
        if on_iteration is not None:
            on_iteration(state, params, mean_loss)

    return TrainResult(params=params, losses=losses, state=state)


# --------------------------------------------------------------------------------------------
# Checkpoints
# --------------------------------------------------------------------------------------------


class _LayerRecord(BaseModel):
    taps: list[list[list[float]]]
    activation: Activation


class _NetworkRecord(BaseModel):
    layers: list[_LayerRecord]


class _HyperRecord(BaseModel):
    beta_min: float
    layers: list[int]
    taps: list[int]
    features: list[int]


class _MetaRecord(BaseModel):
    seed: int = 0
    iteration: int = 0
    baseline: Optional[float] = None
    config_hash: Optional[str] = None


class CheckpointRecord(BaseModel):
    """On-disk layout of a checkpoint"""

    networks: list[_NetworkRecord]
    hyper: _HyperRecord
    meta: _MetaRecord = _MetaRecord()


def _record(params: RegnnParams, state: TrainState, config_hash: Optional[str]) -> CheckpointRecord:
    networks = []
    for net in params.networks:
        layers = [
            _LayerRecord(taps=taps.tolist(), activation="sigmoid" if index == len(net) - 1 else "relu")
            for index, taps in enumerate(net)
        ]
        networks.append(_NetworkRecord(layers=layers))

    return CheckpointRecord(
        networks=networks,
        hyper=_HyperRecord(
            beta_min=params.beta_min,
            layers=[len(net) for net in params.networks],
            taps=[int(net[0].shape[0]) if net else 0 for net in params.networks],
            features=[int(net[0].shape[2]) if net else 0 for net in params.networks],
        ),
        meta=_MetaRecord(seed=state.seed, iteration=state.iteration, baseline=state.baseline, config_hash=config_hash),
    )


def save_checkpoint(
    params: RegnnParams, path: Path, state: TrainState = TrainState(), *, config_hash: Optional[str] = None
) -> Path:
    """Write the coefficients as JSON, every float in its shortest round-trip form"""
    if not all(np.all(np.isfinite(taps)) for net in params.networks for taps in net):
        raise ShapeError("refusing to write non-finite coefficients")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_record(params, state, config_hash).model_dump_json(), encoding="utf-8")
    return path


def _layer_taps(net: int, layer: int, record: _LayerRecord, f_in: int) -> FloatArray:
    rows: list[FloatArray] = []
    for tap, matrix in enumerate(record.taps):
        where = f"network {net + 1}, layer {layer + 1}, tap {tap}"
        try:
            array = np.asarray(matrix, dtype=np.float64)
        except ValueError:
            raise ShapeError(f"ragged coefficients at {where}") from None
        if array.ndim != 2 or array.shape[0] != f_in or (rows and array.shape != rows[0].shape):
            expected = f"({f_in}, {rows[0].shape[1]})" if rows else f"({f_in}, F_out)"
            raise ShapeError(f"coefficients at {where} have shape {array.shape}, expected {expected}")
        if not np.all(np.isfinite(array)):
            raise ShapeError(f"non-finite coefficients at {where}")
        rows.append(array)

    if not rows:
        raise ShapeError(f"network {net + 1}, layer {layer + 1} has no taps")
    return np.stack(rows)


def read_checkpoint(path: Path, expected: Optional[TrainConfig] = None) -> tuple[RegnnParams, TrainState]:
    """
    Load parameters and training progress.

    Parameters
    ----------
    path : Path
    expected : TrainConfig, optional
        When given, the layer layout must match the one this config would build.

    Raises
    ------
    ShapeError
        The file does not parse, or a layer or tap has the wrong shape.
    """
    try:
        record = CheckpointRecord.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as error:
        raise ShapeError(f"{path} is not a valid checkpoint: {error.error_count()} error(s)") from None

    if len(record.networks) != 2:
        raise ShapeError(f"expected 2 networks, found {len(record.networks)}")

    networks: list[list[FloatArray]] = []
    for j, net in enumerate(record.networks):
        layers: list[FloatArray] = []
        f_in = 1
        for index, layer in enumerate(net.layers):
            taps = _layer_taps(j, index, layer, f_in)
            layers.append(taps)
            f_in = taps.shape[2]
        if f_in != HEAD_FEATURES:
            raise ShapeError(f"network {j + 1} ends with {f_in} feature(s), expected {HEAD_FEATURES}")
        networks.append(layers)

    if expected is not None:
        shapes = layer_shapes(expected)
        for j, net in enumerate(networks):
            found = [taps.shape for taps in net]
            if found != shapes:
                raise ShapeError(f"network {j + 1} has layer shapes {found}, expected {shapes}")

    params = RegnnParams(networks=networks, beta_min=record.hyper.beta_min)
    state = TrainState(iteration=record.meta.iteration, baseline=record.meta.baseline, seed=record.meta.seed)
    return params, state


def load_checkpoint(path: Path, expected: Optional[TrainConfig] = None) -> RegnnParams:
    return read_checkpoint(path, expected)[0]
