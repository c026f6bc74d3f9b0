"""Reference policies the optimized schemes are compared against."""

from __future__ import annotations

import numpy as np

from .model import QosSpec
from .queueing import max_slots_array
from .types import NetworkInstance, RepetitionPolicy


def no_repetition(instance: NetworkInstance) -> RepetitionPolicy:
    """One reserved slot and one transmission per packet on every link"""
    return RepetitionPolicy.uniform(instance.k_links, 1, 1)


def k_repetition(instance: NetworkInstance, spec: QosSpec) -> RepetitionPolicy:
    """
    Every reserved slot carries a copy, N = M, with N the largest slot count whose queue
    stays stable and meets ε_max on its own.

    Raises
    ------
    InfeasibleError
        Some link violates ε_max even with a single slot.
    """
    if instance.k_links == 0:
        return RepetitionPolicy.uniform(0, 1, 1)
    n = max_slots_array(instance.arrival, spec)
    return RepetitionPolicy(n_slots=n, m_reps=np.array(n, dtype=np.int64))
