from __future__ import annotations

from functools import partial
from pathlib import Path
from typing import Any, Callable, Optional, Union

import numpy as np
from loguru import logger

from ..config import config_hash, read_config
from ..exceptions import ConfigError
from ..mcsim import SimOptions, estimate_qos_violation, simulate_violations
from ..model import ExperimentConfig, PolicySource, TopologyKind
from ..regnn import read_checkpoint, save_checkpoint, train
from ..results import (
    ANALYZE_SUMMARY_FIELDS,
    ANALYZE_SURFACE_FIELDS,
    EVAL_CDF_FIELDS,
    EVAL_REALIZATION_FIELDS,
    EVAL_SUMMARY_FIELDS,
    LOSS_FIELDS,
    ResultWriter,
    es_row,
)
from ..stochgeom import density_sweep, exhaustive_search
from ..topology import load_instance, save_instance
from ..types import (
    AnalyzeOutput,
    EsOutput,
    EvalOutput,
    EvalSummary,
    FloatArray,
    QosEstimate,
    RegnnParams,
    RunOutput,
    StrPath,
    TrainOutput,
    TrainState,
)
from ..utils import parallel_map, rng_stream
from .utils import PolicyResolver, TrainingSampler, generated_instance, instance_files, policy_resolver

ConfigLike = Union[StrPath, ExperimentConfig]


def _load(config: ConfigLike) -> tuple[ExperimentConfig, ResultWriter]:
    data = read_config(Path(config).resolve() if isinstance(config, str) else config)
    writer = ResultWriter(data.output.dir, {"config_hash": config_hash(data), "seed": data.seed})
    return data, writer


def run_gen(config: ConfigLike) -> RunOutput:
    """
    Generate `topology.count` network instances and write them as JSON.

    Instance i draws from stream `("topology", i)`, the same realization `eval` uses for
    unit i of a generated topology.

    Parameters
    ----------
    config : str or pathlib.Path or ExperimentConfig

    Returns
    -------
    RunOutput
        Paths of `instance-<i>.json` in the output directory.

    Raises
    ------
    ConfigError
        The topology kind is `file`, there is nothing to generate.
    """
    data, writer = _load(config)
    if data.topology.kind is TopologyKind.FILE:
        raise ConfigError("topology kind 'file' cannot be generated, pick bipolar, random-area or hexagonal")

    files = []
    for index in range(data.topology.count):
        instance = generated_instance(data, index)
        meta = {**writer.meta, "kind": str(data.topology.kind), "index": index}
        path = save_instance(instance, data.output.dir / f"instance-{index}.json", meta=meta)
        logger.debug(f"{path.name}: {instance.k_links} link(s), {int(instance.measured.sum())} measured")
        files.append(path)

    return RunOutput(files=files)


def run_es(config: ConfigLike, *, on_row: Optional[Callable[[int], None]] = None) -> EsOutput:
    """
    Exhaustive search of the symmetric scenario.

    Returns
    -------
    EsOutput
        The search result with `es-surface.csv` and `es-optimum.json`.

    Raises
    ------
    InfeasibleError
        No (N0, M0) leaves a decoding budget.
    """
    data, writer = _load(config)
    result = exhaustive_search(data.scenario, data.qos, on_row=on_row)
    return EsOutput(files=writer.write_es(result), result=result)


def _sources(data: ExperimentConfig) -> list[PolicySource]:
    sources: list[PolicySource] = []
    for source in (data.policy.source, *data.policy.compare):
        if source not in sources:
            sources.append(source)
    return sources


def eval_workload(config: ConfigLike) -> int:
    """Progress units of `run_eval`, realizations times instance files and sources for a file topology"""
    data = read_config(Path(config) if isinstance(config, str) else config)
    if data.topology.kind is TopologyKind.FILE:
        return len(instance_files(data.topology)) * len(_sources(data)) * data.mc.realizations
    return data.mc.realizations


def _generated_unit(
    realization: int,
    *,
    data: ExperimentConfig,
    resolvers: list[PolicyResolver],
    options: SimOptions,
) -> list[float]:
    """P_vio of every source on realization r: a fresh network and one frame block, shared by all sources"""
    instance = generated_instance(data, realization)
    values = []
    for resolver in resolvers:
        policy = resolver(instance)
        rng = rng_stream(data.seed, "mcsim", realization)
        links, counts = simulate_violations(instance, policy, data.qos, data.mc.frames, rng, options)
        values.append(float(counts.sum()) / (data.mc.frames * links.shape[0]) if links.shape[0] else 0.0)
    return values


def _unit_row(source: PolicySource, instance: str, realization: int, value: float) -> dict[str, Any]:
    return {"source": str(source), "instance": instance, "realization": realization, "p_vio": value}


def _cdf_rows(per_source: dict[str, FloatArray], points: int) -> list[dict[str, Any]]:
    """Empirical CDF of every source on a shared grid from 0 to the largest observed P_vio"""
    upper = max((float(v.max()) for v in per_source.values() if v.size), default=0.0)
    grid = np.linspace(0.0, upper, points)
    rows = []
    for source, values in per_source.items():
        for x in grid:
            cdf = float(np.mean(values <= x)) if values.size else float("nan")
            rows.append({"source": source, "p_vio": float(x), "cdf": cdf})
    return rows


def run_eval(config: ConfigLike, *, on_unit: Optional[Callable[[], None]] = None) -> EvalOutput:
    """
    Monte Carlo evaluation of one or more policy sources.

    A generated topology draws a fresh network for every realization, an instance-file
    topology evaluates every file over `mc.realizations` realizations. All sources see the
    same networks and the same random streams.

    Parameters
    ----------
    config : str or pathlib.Path or ExperimentConfig
    on_unit : Callable[[], None], optional
        Called after every realization, see `eval_workload` for the total.

    Returns
    -------
    EvalOutput
        Summaries in source order and the files `eval-realizations.csv`, `eval-summary.csv`,
        `eval-cdf.csv` and `eval-summary.json`. An instance-file topology adds the per-link
        estimate `links-<source>-<instance>.csv` and its JSON twin for every source and file.

    Raises
    ------
    InfeasibleError
        A policy is infeasible for some instance.
    """
    data, writer = _load(config)
    sources = _sources(data)
    options = SimOptions.from_config(data.mc, data.topology.cutoff_m)

    es = exhaustive_search(data.scenario, data.qos) if PolicySource.ES in sources else None
    resolvers = [policy_resolver(source, data, es) for source in sources]

    rows: list[dict[str, Any]] = []
    per_source: dict[str, list[float]] = {str(s): [] for s in sources}
    per_link: list[tuple[str, QosEstimate]] = []

    if data.topology.kind is TopologyKind.FILE:
        files = instance_files(data.topology)
        logger.info(f"Evaluating {len(sources)} source(s) on {len(files)} instance file(s)")
        for index, path in enumerate(files):
            instance = load_instance(path)
            unit_seed = int(rng_stream(data.seed, "instance", index).integers(2**63))
            for source, resolver in zip(sources, resolvers):
                estimate = estimate_qos_violation(
                    instance,
                    resolver(instance),
                    data.qos,
                    data.mc.realizations,
                    data.mc.frames,
                    unit_seed,
                    options=options,
                    workers=data.workers,
                    on_realization=on_unit,
                )
                for realization, value in enumerate(estimate.realization_p_vio.tolist()):
                    rows.append(_unit_row(source, path.name, realization, value))
                    per_source[str(source)].append(value)
                per_link.append((f"links-{source}-{path.stem}", estimate))
    else:
        logger.info(f"Evaluating {len(sources)} source(s) on {data.mc.realizations} generated realization(s)")
        job = partial(_generated_unit, data=data, resolvers=resolvers, options=options)
        units = parallel_map(job, range(data.mc.realizations), workers=data.workers, on_done=on_unit)
        for realization, values in enumerate(units):
            for source, value in zip(sources, values):
                rows.append(_unit_row(source, "generated", realization, value))
                per_source[str(source)].append(value)

    arrays = {source: np.asarray(values, dtype=np.float64) for source, values in per_source.items()}
    frames_per_unit = data.mc.frames
    first = arrays[str(sources[0])].mean() if arrays[str(sources[0])].size else float("nan")

    summaries = []
    for source, values in arrays.items():
        p_vio = float(values.mean()) if values.size else float("nan")
        std_error = float(values.std(ddof=1) / np.sqrt(values.size)) if values.size > 1 else float("nan")
        gain = None if source == str(sources[0]) or p_vio <= 0.0 else float((p_vio - first) / p_vio)
        summaries.append(
            EvalSummary(
                source=source,
                p_vio=p_vio,
                std_error=std_error,
                units=int(values.size),
                trials=int(values.size) * frames_per_unit,
                gain=gain,
            )
        )
        note = "" if gain is None else f", gain {gain:+.1%}"
        logger.success(f"{source}: P_vio {p_vio:.4e} ± {std_error:.1e}{note}")

    summary_rows = [
        {
            "source": s.source,
            "p_vio": s.p_vio,
            "std_error": s.std_error,
            "units": s.units,
            "trials": s.trials,
            "gain": "" if s.gain is None else s.gain,
        }
        for s in summaries
    ]
    files = [
        writer.write_csv("eval-realizations.csv", EVAL_REALIZATION_FIELDS, rows),
        writer.write_csv(
            "eval-summary.csv",
            EVAL_SUMMARY_FIELDS,
            summary_rows,
            footer={"p_vio": summaries[0].p_vio, "trials": summaries[0].trials, "seed": data.seed},
        ),
        writer.write_csv("eval-cdf.csv", EVAL_CDF_FIELDS, _cdf_rows(arrays, data.mc.cdf_points)),
        writer.write_json("eval-summary.json", {"summary": summary_rows}),
    ]
    for stem, estimate in per_link:
        files.extend(writer.write_estimate(estimate, stem))
    return EvalOutput(files=files, summaries=summaries, realization_p_vio=arrays)


def run_train(
    config: ConfigLike, *, on_iteration: Optional[Callable[[TrainState, float], None]] = None
) -> TrainOutput:
    """
    Train the cascade and write `checkpoint.json` and `train-loss.csv`.

    With `train.resume` set, training continues from the stored iteration and baseline;
    sample b of iteration τ always draws from stream `("train", τ, b)`, so a resumed run repeats the
    iterations an uninterrupted one would have run.

    Raises
    ------
    ConfigError
        The resumed checkpoint was trained with another seed.
    ShapeError
        The resumed checkpoint does not match the configured layer layout.
    TrainingDivergedError
        The loss became non-finite.
    """
    data, writer = _load(config)
    sampler = TrainingSampler(data, instance_files(data.topology) if data.topology.kind is TopologyKind.FILE else None)
    options = SimOptions.from_config(data.mc, data.topology.cutoff_m)
    checkpoint = data.output.dir / "checkpoint.json"
    digest = str(writer.meta["config_hash"])

    params: Optional[RegnnParams] = None
    state: Optional[TrainState] = None
    if data.train.resume is not None:
        params, state = read_checkpoint(data.train.resume, expected=data.train)
        if state.seed != data.seed:
            raise ConfigError(f"checkpoint was trained with seed {state.seed}, config has seed {data.seed}")
        logger.info(f"Resuming from {data.train.resume.name} at iteration {state.iteration}")

    start = 0 if state is None else state.iteration
    every = data.train.checkpoint_every

    def iteration_done(new_state: TrainState, new_params: RegnnParams, loss: float) -> None:
        if every and new_state.iteration % every == 0:
            save_checkpoint(new_params, checkpoint, new_state, config_hash=digest)
        if on_iteration is not None:
            on_iteration(new_state, loss)

    result = train(
        data.train,
        sampler,
        data.qos,
        data.seed,
        params=params,
        state=state,
        options=options,
        workers=data.workers,
        on_iteration=iteration_done,
    )

    save_checkpoint(result.params, checkpoint, result.state, config_hash=digest)
    loss_rows = ({"iteration": start + i, "loss": loss} for i, loss in enumerate(result.losses))
    trace = writer.write_csv("train-loss.csv", LOSS_FIELDS, loss_rows)
    if result.losses:
        logger.success(f"Trained to iteration {result.state.iteration}, last loss {result.losses[-1]:.4f}")
    return TrainOutput(files=[checkpoint, trace], result=result, checkpoint=checkpoint)


def run_analyze(config: ConfigLike, *, on_density: Optional[Callable[[], None]] = None) -> AnalyzeOutput:
    """
    Approximation surfaces for every density of `analyze.densities`, with the ES optimum,
    the best K-repetition point (N0 = M0) and no repetition side by side.
    """
    data, writer = _load(config)
    swept = density_sweep(data.scenario, data.qos, data.analyze.densities, on_density=on_density)
    sweeps = [(scenario.density, result) for scenario, result in swept]

    surface_rows = [{"density": density, **es_row(p)} for density, result in sweeps for p in result.surface]
    summary_rows = []
    for density, result in sweeps:
        diagonal = min(p for p in result.surface if p.n0 == p.m0)
        single = next((p for p in result.surface if p.n0 == 1), None)
        summary_rows.append(
            {
                "density": density,
                "es_n0": result.n0,
                "es_m0": result.m0,
                "es_objective": result.objective,
                "krep_n": diagonal.n0,
                "krep_objective": diagonal.objective,
                "norep_objective": "" if single is None else single.objective,
            }
        )
        logger.success(f"{density:g}/km²: ES ({result.n0}, {result.m0}) objective {result.objective:.4e}")

    files = [
        writer.write_csv("analyze-surface.csv", ANALYZE_SURFACE_FIELDS, surface_rows),
        writer.write_csv("analyze-summary.csv", ANALYZE_SUMMARY_FIELDS, summary_rows),
    ]
    return AnalyzeOutput(files=files, results=sweeps)
