from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
import numpy.typing as npt

from .compat import TypeAlias
from .model import SymmetricScenario

FloatArray: TypeAlias = npt.NDArray[np.float64]
IntArray: TypeAlias = npt.NDArray[np.int64]
BoolArray: TypeAlias = npt.NDArray[np.bool_]
StrPath: TypeAlias = Union[Path, str]
InstanceFilePath: TypeAlias = Path
CsvFilePath: TypeAlias = Path
JsonFilePath: TypeAlias = Path


@dataclass(frozen=True, order=True)
class FadingDraw:
    """
    A single small-scale fading power draw.

    Attributes
    ----------
    gain : float
        Nonnegative channel power, h*h for Nakagami or g for Rayleigh.
    """

    gain: float
    """Nonnegative channel power, h*h for Nakagami or g for Rayleigh."""

    def __post_init__(self) -> None:
        if not (np.isfinite(self.gain) and self.gain >= 0.0):
            raise ValueError(f"fading gain must be finite and nonnegative, got {self.gain}")


@dataclass(frozen=True, order=True)
class QueueProfile:
    """
    Effective-bandwidth view of one link's queue.

    Attributes
    ----------
    arrival_rate : float
        Poisson arrival rate λ in packets per slot.
    n_slots : int
        Slots reserved per packet N, the queue is served at rate 1/N.
    theta : float
        QoS exponent θ solving E_B(θ) = 1/N.
    eps_q : float
        Queueing delay violation probability.
    d_q_max : int
        Queueing delay budget D_max - N in slots.
    """

    arrival_rate: float
    """Poisson arrival rate λ in packets per slot."""

    n_slots: int
    """Slots reserved per packet N."""

    theta: float
    """QoS exponent θ solving E_B(θ) = 1/N."""

    eps_q: float
    """Queueing delay violation probability."""

    d_q_max: int
    """Queueing delay budget D_max - N in slots."""


@dataclass(frozen=True)
class NetworkInstance:
    """
    One network realization.

    Attributes
    ----------
    tx_pos : FloatArray
        (K, 2) transmitter coordinates in meters.
    rx_pos : FloatArray
        (K, 2) receiver coordinates in meters.
    gain : FloatArray
        (K, K) linear large-scale gains, entry (i, k) from transmitter i to receiver k.
    arrival : FloatArray
        (K,) arrival rates in packets per slot.
    reuse_group : IntArray
        (K,) frequency reuse labels, links in different groups never interfere.
    bandwidth_hz : FloatArray
        (K,) bandwidth available to every link after the reuse split.
    measured : BoolArray
        (K,) links whose QoS is measured, guard-ring links only interfere.
    """

    tx_pos: FloatArray
    """(K, 2) transmitter coordinates in meters."""

    rx_pos: FloatArray
    """(K, 2) receiver coordinates in meters."""

    gain: FloatArray
    """(K, K) linear large-scale gains, entry (i, k) from transmitter i to receiver k."""

    arrival: FloatArray
    """(K,) arrival rates in packets per slot."""

    reuse_group: IntArray
    """(K,) frequency reuse labels."""

    bandwidth_hz: FloatArray
    """(K,) bandwidth available to every link after the reuse split."""

    measured: BoolArray
    """(K,) links whose QoS is measured."""

    @property
    def k_links(self) -> int:
        return int(self.arrival.shape[0])

    def distances(self) -> FloatArray:
        """(K, K) distance from transmitter i to receiver k"""
        diff = self.tx_pos[:, None, :] - self.rx_pos[None, :, :]
        return np.asarray(np.hypot(diff[..., 0], diff[..., 1]), dtype=np.float64)


@dataclass(frozen=True)
class RepetitionPolicy:
    """
    Per-link reserved slots N and repetitions M.

    Attributes
    ----------
    n_slots : IntArray
        (K,) slots reserved for every packet.
    m_reps : IntArray
        (K,) copies sent in a uniformly random subset of the reserved slots.
    """

    n_slots: IntArray
    """(K,) slots reserved for every packet."""

    m_reps: IntArray
    """(K,) copies sent in a uniformly random subset of the reserved slots."""

    @classmethod
    def uniform(cls, k_links: int, n_slots: int, m_reps: int) -> RepetitionPolicy:
        return cls(
            n_slots=np.full(k_links, n_slots, dtype=np.int64),
            m_reps=np.full(k_links, m_reps, dtype=np.int64),
        )


@dataclass(frozen=True)
class QosEstimate:
    """
    Monte Carlo estimate of the QoS violation probabilities.

    Attributes
    ----------
    links : IntArray
        Indices of the measured links, aligned with `p_k`.
    p_k : FloatArray
        Per-link fraction of frames with ε_q + ε_c above the target.
    p_vio : float
        Mean of `p_k`, the network QoS violation probability.
    trials : int
        Frames simulated per link.
    seed : int
        Seed the estimate was drawn with.
    realization_p_vio : FloatArray
        Network QoS violation probability of every realization.
    """

    links: IntArray
    """Indices of the measured links, aligned with `p_k`."""

    p_k: FloatArray
    """Per-link fraction of frames with ε_q + ε_c above the target."""

    p_vio: float
    """Mean of `p_k`."""

    trials: int
    """Frames simulated per link."""

    seed: int
    """Seed the estimate was drawn with."""

    realization_p_vio: FloatArray = field(default_factory=lambda: np.zeros(0))
    """Network QoS violation probability of every realization."""

    @property
    def std_error(self) -> float:
        """Standard error of `p_vio` across realizations, nan for a single realization"""
        n = self.realization_p_vio.shape[0]
        if n < 2:
            return float("nan")
        return float(np.std(self.realization_p_vio, ddof=1) / np.sqrt(n))


@dataclass(frozen=True, order=True)
class ApproxInputs:
    """
    Inputs of the two stochastic-geometry approximations.

    Attributes
    ----------
    scenario : SymmetricScenario
    n0 : int
    m0 : int
    gamma_th : float
        SIR threshold of a single transmission.
    constant_c : float
        Interference constant C.
    z_collision : float
        Probability that two links pick the same slot subset, 1/C(n0, m0).
    """

    n0: int
    m0: int
    gamma_th: float
    constant_c: float
    z_collision: float
    scenario: SymmetricScenario = field(compare=False)


@dataclass(frozen=True, order=True)
class EsPoint:
    """
    One (N0, M0) cell of the exhaustive-search surface.

    Cells order by objective, then by the smallest N0 and M0.

    Attributes
    ----------
    objective : float
        max(P_A1, P_A2).
    n0 : int
    m0 : int
    eps_q : float
        Queueing delay violation probability at N0.
    gamma_th : float
        SIR threshold at N0.
    p_a1 : float
    p_a2 : float
    """

    objective: float
    n0: int
    m0: int
    eps_q: float = field(compare=False)
    gamma_th: float = field(compare=False)
    p_a1: float = field(compare=False)
    p_a2: float = field(compare=False)


@dataclass(frozen=True)
class EsResult:
    """
    Outcome of the exhaustive search.

    Attributes
    ----------
    n0 : int
    m0 : int
    objective : float
    surface : list[EsPoint]
        Every evaluated cell, ordered by N0 then M0.
    """

    n0: int
    m0: int
    objective: float
    surface: list[EsPoint]


@dataclass(frozen=True)
class PolicyHeads:
    """
    Truncated Gaussian parameters emitted by one network.

    Attributes
    ----------
    xi : FloatArray
        (K,) means in (0, 1).
    beta : FloatArray
        (K,) standard deviations in [β_min, 1).
    """

    xi: FloatArray
    """(K,) means in (0, 1)."""

    beta: FloatArray
    """(K,) standard deviations in [β_min, 1)."""


@dataclass
class RegnnParams:
    """
    Filter taps of both cascaded networks.

    Attributes
    ----------
    networks : list[list[FloatArray]]
        `networks[j][l]` holds the taps of layer `l` of network `j` with shape (I, F_in, F_out).
    beta_min : float
        Floor of the emitted standard deviations.
    """

    networks: list[list[FloatArray]]
    """`networks[j][l]` holds the taps of layer `l` of network `j`, shape (I, F_in, F_out)."""

    beta_min: float = 1e-3
    """Floor of the emitted standard deviations."""

    @property
    def count(self) -> int:
        return sum(int(taps.size) for net in self.networks for taps in net)

    def copy(self) -> RegnnParams:
        return RegnnParams(networks=[[taps.copy() for taps in net] for net in self.networks], beta_min=self.beta_min)


@dataclass(frozen=True)
class TrainState:
    """
    Training progress, persisted with the checkpoint so a run can resume.

    Attributes
    ----------
    iteration : int
        Completed iterations.
    baseline : float, optional
        Running mean of the loss, `None` before the first iteration.
    seed : int
    """

    iteration: int = 0
    baseline: Union[float, None] = None
    seed: int = 0


@dataclass(frozen=True)
class TrainResult:
    """
    Attributes
    ----------
    params : RegnnParams
        Parameters after the last iteration.
    losses : list[float]
        Batch-mean probe loss of every iteration run.
    state : TrainState
    """

    params: RegnnParams
    losses: list[float]
    state: TrainState


@dataclass(frozen=True)
class EvalSummary:
    """
    Aggregate of one policy source in an `eval` run.

    Attributes
    ----------
    source : str
    p_vio : float
        Mean QoS violation probability over all evaluation units.
    std_error : float
        Standard error of `p_vio` across units.
    units : int
        Evaluated realizations (generated topologies) or instance realizations (instance files).
    trials : int
        Frames simulated per measured link.
    gain : float, optional
        Relative improvement of the first source over this one, `None` for the first source.
    """

    source: str
    p_vio: float
    std_error: float
    units: int
    trials: int
    gain: Optional[float] = None


@dataclass(frozen=True)
class RunOutput:
    """
    Files written by a subcommand.

    Attributes
    ----------
    files : list[Path]
        Every file written, in the order they were written.
    """

    files: list[Path]


@dataclass(frozen=True)
class EsOutput(RunOutput):
    result: Optional[EsResult] = None


@dataclass(frozen=True)
class EvalOutput(RunOutput):
    summaries: list[EvalSummary] = field(default_factory=list)
    realization_p_vio: dict[str, FloatArray] = field(default_factory=dict)
    """Per-unit P_vio of every source, in evaluation order"""


@dataclass(frozen=True)
class TrainOutput(RunOutput):
    result: Optional[TrainResult] = None
    checkpoint: Optional[Path] = None


@dataclass(frozen=True)
class AnalyzeOutput(RunOutput):
    results: list[tuple[float, EsResult]] = field(default_factory=list)
    """(density, exhaustive search) for every swept density"""
