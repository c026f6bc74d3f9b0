"""
Simulator and optimizer for random-repetition URLLC links in interference-limited networks.

Experiment Functions
--------------------
- run_gen
- run_es
- run_eval
- run_train
- run_analyze

Model Functions
---------------
- sir_threshold
- decoding_error_prob
- queue_violation_prob
- max_slots
- estimate_qos_violation
- exhaustive_search
- approx_p_a1
- approx_p_a2
- no_repetition
- k_repetition

Types
-----
- ExperimentConfig
- QosSpec
- SymmetricScenario
- NetworkInstance
- RepetitionPolicy
- QosEstimate
- EsResult
- RegnnParams
"""

from .api.main import run_analyze, run_es, run_eval, run_gen, run_train
from .baselines import k_repetition, no_repetition
from .linkphy import decoding_error_prob, sir_threshold
from .mcsim import estimate_qos_violation
from .model import ExperimentConfig, QosSpec, SymmetricScenario
from .queueing import max_slots, queue_violation_prob
from .stochgeom import approx_p_a1, approx_p_a2, exhaustive_search
from .types import EsResult, NetworkInstance, QosEstimate, RegnnParams, RepetitionPolicy
from .version import get_version

__all__ = [
    # experiments
    "run_gen",
    "run_es",
    "run_eval",
    "run_train",
    "run_analyze",
    # model
    "sir_threshold",
    "decoding_error_prob",
    "queue_violation_prob",
    "max_slots",
    "estimate_qos_violation",
    "exhaustive_search",
    "approx_p_a1",
    "approx_p_a2",
    "no_repetition",
    "k_repetition",
    # types
    "ExperimentConfig",
    "QosSpec",
    "SymmetricScenario",
    "NetworkInstance",
    "RepetitionPolicy",
    "QosEstimate",
    "EsResult",
    "RegnnParams",
]

__version__ = get_version()
