from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from loguru import logger

from ..baselines import k_repetition, no_repetition
from ..exceptions import ConfigError, ShapeError
from ..model import ExperimentConfig, PolicySource, QosSpec, TopologyConfig, TopologyKind
from ..regnn import infer_policy, load_checkpoint
from ..stochgeom import exhaustive_search
from ..topology import build_instance, load_instance
from ..types import EsResult, NetworkInstance, RegnnParams, RepetitionPolicy
from ..utils import find_instance_files, rng_stream


@dataclass(frozen=True)
class PolicyResolver:
    """
    Turns a policy source into a per-instance policy.

    Everything the source needs (the ES optimum, the trained coefficients, explicit lists)
    is resolved once up front, so the resolver is cheap to call and to pickle.

    Attributes
    ----------
    source : PolicySource
    spec : QosSpec
    es : EsResult, optional
        Optimum applied uniformly to every link for the `es` source.
    params : RegnnParams, optional
        Trained cascade for the `regnn-checkpoint` source.
    n_slots : list[int], optional
    m_reps : list[int], optional
        Explicit lists, one value broadcast to every link or one value per link.
    cutoff_m : float, optional
        Interference cutoff of the graph shift fed to the cascade.
    """

    source: PolicySource
    spec: QosSpec
    es: Optional[EsResult] = None
    params: Optional[RegnnParams] = None
    n_slots: Optional[list[int]] = None
    m_reps: Optional[list[int]] = None
    cutoff_m: Optional[float] = None

    def __call__(self, instance: NetworkInstance) -> RepetitionPolicy:
        k = instance.k_links
        if self.source is PolicySource.NO_REP:
            return no_repetition(instance)

        if self.source is PolicySource.K_REP:
            return k_repetition(instance, self.spec)

        if self.source is PolicySource.ES:
            assert self.es is not None
            return RepetitionPolicy.uniform(k, self.es.n0, self.es.m0)

        if self.source is PolicySource.REGNN:
            assert self.params is not None
            return infer_policy(instance, self.params, self.spec, cutoff_m=self.cutoff_m)

        assert self.n_slots is not None and self.m_reps is not None
        if len(self.n_slots) not in (1, k):
            raise ShapeError(f"explicit policy has {len(self.n_slots)} value(s), instance has {k} link(s)")
        return RepetitionPolicy(
            n_slots=np.broadcast_to(np.asarray(self.n_slots, dtype=np.int64), (k,)).copy(),
            m_reps=np.broadcast_to(np.asarray(self.m_reps, dtype=np.int64), (k,)).copy(),
        )


def policy_resolver(
    source: PolicySource, config: ExperimentConfig, es: Optional[EsResult] = None
) -> PolicyResolver:
    """
    Prepare the resolver of one source. The `es` source solves the symmetric problem of
    `config.scenario` unless an optimum is passed in, the checkpoint source loads its file.
    """
    cutoff = config.topology.cutoff_m
    if source is PolicySource.ES:
        if es is None:
            es = exhaustive_search(config.scenario, config.qos)
        logger.info(f"ES policy: N0={es.n0}, M0={es.m0} (objective {es.objective:.4e})")
        return PolicyResolver(source, config.qos, es=es, cutoff_m=cutoff)

    if source is PolicySource.REGNN:
        assert config.policy.checkpoint is not None
        params = load_checkpoint(config.policy.checkpoint, expected=config.train)
        logger.info(f"REGNN policy: {config.policy.checkpoint.name}, {params.count} coefficient(s)")
        return PolicyResolver(source, config.qos, params=params, cutoff_m=cutoff)

    if source is PolicySource.EXPLICIT:
        return PolicyResolver(
            source, config.qos, n_slots=config.policy.n_slots, m_reps=config.policy.m_reps, cutoff_m=cutoff
        )

    return PolicyResolver(source, config.qos, cutoff_m=cutoff)


def instance_files(topology: TopologyConfig) -> list[Path]:
    """
    Instance files of a `file` topology.

    Raises
    ------
    ConfigError
        The topology is generated, or the configured path holds no instance.
    """
    if topology.kind is not TopologyKind.FILE or topology.instances is None:
        raise ConfigError(f"topology kind '{topology.kind}' does not read instance files")
    if not topology.instances.exists():
        raise FileNotFoundError(2, "No such file or directory", str(topology.instances))

    files = find_instance_files(topology.instances)
    if not files:
        raise ConfigError(f"no instance files found in {topology.instances}")
    return files


def generated_instance(config: ExperimentConfig, *indices: int) -> NetworkInstance:
    """Instance drawn from stream `("topology", *indices)`"""
    return build_instance(config.topology, config.scenario, config.qos, rng_stream(config.seed, "topology", *indices))


@dataclass(frozen=True)
class TrainingSampler:
    """
    Training instance of (iteration, batch sample): freshly generated, or cycled through
    the instance files in natural order.
    """

    config: ExperimentConfig
    files: Optional[list[Path]] = None

    def __call__(self, iteration: int, sample: int) -> NetworkInstance:
        if self.files:
            index = (iteration * self.config.train.batch + sample) % len(self.files)
            return load_instance(self.files[index])
        return generated_instance(self.config, iteration, sample)
