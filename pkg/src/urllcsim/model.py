from __future__ import annotations

import math
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .compat import StrEnum


class FadingKind(StrEnum):
    """Small-scale fading distribution of h*h"""

    RAYLEIGH = "rayleigh"
    NAKAGAMI = "nakagami"


class QueueTimeUnit(StrEnum):
    """
    Time unit of the slot duration inside the QoS exponent.

    `slot` measures queueing delay and slot duration in the same unit (slot duration = 1),
    `ms` divides by the slot duration expressed in milliseconds.
    """

    SLOT = "slot"
    MS = "ms"


class TopologyKind(StrEnum):
    BIPOLAR = "bipolar"
    RANDOM_AREA = "random-area"
    HEXAGONAL = "hexagonal"
    FILE = "file"


class Reuse(StrEnum):
    """Frequency reuse factor of the hexagonal topology"""

    ONE = "1"
    THIRD = "1/3"
    SEVENTH = "1/7"

    @property
    def groups(self) -> int:
        return {"1": 1, "1/3": 3, "1/7": 7}[self.value]

    @property
    def factor(self) -> float:
        return 1.0 / self.groups


class PolicySource(StrEnum):
    ES = "es"
    REGNN = "regnn-checkpoint"
    NO_REP = "no-rep"
    K_REP = "k-rep"
    EXPLICIT = "explicit"


class ActivityMode(StrEnum):
    """
    Interferer activity model of the Monte Carlo engine.

    `bernoulli` draws every interferer independently per slot with probability λM,
    `pattern` draws whole frames: a non-empty queue w.p. λN, then an M-subset of its N slots.
    """

    BERNOULLI = "bernoulli"
    PATTERN = "pattern"


# fmt: off
class QosSpec(BaseModel):
    """
    Link-level QoS and physical-layer parameters shared by every link

    Attributes
    ----------
    d_max_slots : int
        End-to-end delay bound D_max in slots. Default is `50`
    eps_max : float
        Per-link reliability target. Default is `1e-5`
    slot_ms : float
        Slot duration T_s in milliseconds. Default is `0.1`
    bandwidth_hz : float
        Bandwidth W in Hz. Default is `1e6`
    packet_bits : int
        Packet size a in bits. Default is `128`
    n_tx_antennas : int
        Transmit antennas N_T. Default is `16`
    tx_power_dbm : float
        Transmit power p_k. Default is `23`
    noise_dbm : float, optional
        Noise power. `None` integrates -174 dBm/Hz over the bandwidth
    include_noise : bool
        Whether noise enters the SINR at all. Default is `True`
    nakagami_m : int
        Nakagami shape m. Default is `3`
    fading : FadingKind
        Fading distribution used by the simulator. Default is `nakagami`
    queue_time_unit : QueueTimeUnit
        Unit convention of the QoS exponent. Default is `slot`
    """

    model_config = ConfigDict(frozen=True)

    d_max_slots: int = Field(default=50, ge=2)
    """End-to-end delay bound D_max in slots"""

    eps_max: float = Field(default=1e-5, gt=0.0, lt=1.0)
    """Per-link reliability target"""

    slot_ms: float = Field(default=0.1, gt=0.0)
    """Slot duration T_s in milliseconds"""

    bandwidth_hz: float = Field(default=1e6, gt=0.0)
    """Bandwidth W in Hz"""

    packet_bits: int = Field(default=128, gt=0)
    """Packet size a in bits"""

    n_tx_antennas: int = Field(default=16, ge=1)
    """Transmit antennas N_T"""

    tx_power_dbm: float = 23.0
    """Transmit power of every transmitter in dBm"""

    noise_dbm: Optional[float] = None
    """Noise power in dBm, `None` for thermal noise over the bandwidth"""

    include_noise: bool = True
    """Whether noise enters the SINR"""

    nakagami_m: int = Field(default=3, ge=1)
    """Nakagami shape m"""

    fading: FadingKind = FadingKind.NAKAGAMI
    """Fading distribution used by the simulator"""

    queue_time_unit: QueueTimeUnit = QueueTimeUnit.SLOT
    """Unit convention of the QoS exponent"""

    @model_validator(mode="after")
    def check_blocklength(self) -> QosSpec:
        """A slot must carry at least one symbol"""
        if self.blocklength < 1.0:
            raise ValueError(f"blocklength slot_ms/1000 * bandwidth_hz = {self.blocklength:g} is below one symbol")
        return self

    @property
    def blocklength(self) -> float:
        """Symbols per slot, T_s W with T_s in seconds"""
        return self.slot_ms / 1000.0 * self.bandwidth_hz

    @property
    def tx_power_mw(self) -> float:
        return float(10.0 ** (self.tx_power_dbm / 10.0))

    @property
    def noise_mw(self) -> float:
        if not self.include_noise:
            return 0.0
        dbm = self.noise_dbm if self.noise_dbm is not None else -174.0 + 10.0 * math.log10(self.bandwidth_hz)
        return float(10.0 ** (dbm / 10.0))


class SymmetricScenario(BaseModel):
    """
    Poisson bipolar network with identical links

    Attributes
    ----------
    density : float
        Transmitters per km². Default is `28`
    r0 : float
        Transmitter to receiver distance in meters. Default is `75`
    lambda0 : float
        Arrival rate of every link in packets per slot. Default is `0.05`
    alpha : float
        Path-loss exponent. Default is `4`
    """

    model_config = ConfigDict(frozen=True)

    density: float = Field(default=28.0, gt=0.0)
    """Transmitters per km²"""

    r0: float = Field(default=75.0, gt=0.0)
    """Direct link distance in meters"""

    lambda0: float = Field(default=0.05, gt=0.0, lt=1.0)
    """Arrival rate of every link in packets per slot"""

    alpha: float = Field(default=4.0, gt=2.0)
    """Path-loss exponent"""

    @property
    def density_m2(self) -> float:
        """Transmitters per m²"""
        return self.density * 1e-6


class TopologyConfig(BaseModel):
    """
    Network generator settings

    Attributes
    ----------
    kind : TopologyKind
        Which generator builds instances. Default is `bipolar`
    area_km2 : float
        Simulated area for the bipolar and random-area generators. Default is `9` (3 km x 3 km)
    guard_ring : bool
        Pad the bipolar area with a guard ring whose links interfere but are not measured. Default is `True`
    density : float
        Transmitters per km² of the random-area generator. Default is `28`
    alpha : float
        Path-loss exponent of the random-area generator. Default is `4`
    link_dist_range : tuple[float, float]
        Direct link distances of the random-area generator in meters. Default is `(50, 100)`
    arrival_range : tuple[float, float]
        Arrival rates of the random-area and hexagonal generators. Default is `(0.01, 0.1)`
    regions : int
        Number of 25-cell regions of the hexagonal generator, one of 1, 2 or 4. Default is `1`
    cell_radius_m : float
        Hexagonal cell radius in meters. Default is `100`
    user_dist_range : tuple[float, float]
        BS to user distances of the hexagonal generator. Default is `(50, 100)`
    reuse : Reuse
        Frequency reuse factor of the hexagonal generator. Default is `1`
    cutoff_m : float, optional
        Interferers farther than this from a receiver are dropped. Default is `500`, `None` keeps all
    instances : Path, optional
        Instance JSON file or directory of instance files, required when `kind` is `file`
    count : int
        Instances written by `gen`. Default is `1`
    """

    kind: TopologyKind = TopologyKind.BIPOLAR
    area_km2: float = Field(default=9.0, gt=0.0)
    guard_ring: bool = True
    density: float = Field(default=28.0, gt=0.0)
    alpha: float = Field(default=4.0, gt=0.0)
    link_dist_range: tuple[float, float] = (50.0, 100.0)
    arrival_range: tuple[float, float] = (0.01, 0.1)
    regions: int = 1
    cell_radius_m: float = Field(default=100.0, gt=0.0)
    user_dist_range: tuple[float, float] = (50.0, 100.0)
    reuse: Reuse = Reuse.ONE
    cutoff_m: Optional[float] = Field(default=500.0, gt=0.0)
    instances: Optional[Path] = None
    count: int = Field(default=1, ge=1)

    @field_validator("regions")
    @classmethod
    def check_regions(cls, regions: int) -> int:
        if regions not in (1, 2, 4):
            raise ValueError(f"regions must be 1, 2 or 4, got {regions}")
        return regions

    @field_validator("reuse", mode="before")
    @classmethod
    def coerce_reuse(cls, value: object) -> object:
        """Accept `1`, `0.333` style numbers next to the `1/3` strings"""
        if isinstance(value, (int, float)) and not isinstance(value, bool) and value > 0:
            groups = round(1.0 / value)
            if math.isclose(groups * value, 1.0, rel_tol=1e-2):
                return "1" if groups == 1 else f"1/{groups}"
        return value

    @field_validator("link_dist_range", "user_dist_range")
    @classmethod
    def check_distance_range(cls, value: tuple[float, float]) -> tuple[float, float]:
        low, high = value
        if not 0.0 < low <= high:
            raise ValueError(f"expected 0 < low <= high, got {value}")
        return value

    @field_validator("arrival_range")
    @classmethod
    def check_arrival_range(cls, value: tuple[float, float]) -> tuple[float, float]:
        low, high = value
        if not 0.0 < low <= high < 1.0:
            raise ValueError(f"expected 0 < low <= high < 1, got {value}")
        return value

    @field_validator("instances")
    @classmethod
    def resolve_path(cls, path: Optional[Path]) -> Optional[Path]:
        return None if path is None else path.expanduser().resolve()

    @model_validator(mode="after")
    def check_instances(self) -> TopologyConfig:
        if self.kind is TopologyKind.FILE and self.instances is None:
            raise ValueError("topology kind 'file' requires 'instances'")
        return self


class PolicyConfig(BaseModel):
    """
    Where the evaluated repetition policy comes from

    Attributes
    ----------
    source : PolicySource
        Policy source. Default is `es`
    checkpoint : Path, optional
        REGNN checkpoint, required for `regnn-checkpoint`
    n_slots : list[int], optional
        Explicit N, one value for every link or a single value broadcast to all
    m_reps : list[int], optional
        Explicit M, same shape rules as `n_slots`
    compare : list[PolicySource]
        Further sources evaluated on the same realizations for the gain table. Default is `[]`
    """

    source: PolicySource = PolicySource.ES
    checkpoint: Optional[Path] = None
    n_slots: Optional[list[int]] = None
    m_reps: Optional[list[int]] = None
    compare: list[PolicySource] = []

    @field_validator("checkpoint")
    @classmethod
    def resolve_path(cls, path: Optional[Path]) -> Optional[Path]:
        return None if path is None else path.expanduser().resolve()

    @model_validator(mode="after")
    def check_source(self) -> PolicyConfig:
        sources = [self.source, *self.compare]
        if PolicySource.REGNN in sources and self.checkpoint is None:
            raise ValueError("policy source 'regnn-checkpoint' requires 'checkpoint'")
        if PolicySource.EXPLICIT in sources:
            if not self.n_slots or not self.m_reps:
                raise ValueError("policy source 'explicit' requires 'n_slots' and 'm_reps'")
            if len(self.n_slots) != len(self.m_reps):
                raise ValueError("'n_slots' and 'm_reps' must have the same length")
        return self


class McConfig(BaseModel):
    """
    Monte Carlo settings

    Attributes
    ----------
    realizations : int
        Independent realizations. Default is `1000`
    frames : int
        Frames per realization. Default is `2000`
    activity : ActivityMode
        Interferer activity model. Default is `bernoulli`
    per_slot_fading : bool
        Redraw fading in every slot, `False` holds it for the whole frame. Default is `True`
    nearest_interferer_only : bool
        Keep only the interferer with the largest mean received power at every receiver. Default is `False`
    chunk_frames : int
        Frames vectorized at once, bounds memory. Default is `256`
    cdf_points : int
        Rows of the exported empirical CDF of per-realization P_vio. Default is `101`
    """

    realizations: int = Field(default=1000, ge=1)
    frames: int = Field(default=2000, ge=1)
    activity: ActivityMode = ActivityMode.BERNOULLI
    per_slot_fading: bool = True
    nearest_interferer_only: bool = False
    chunk_frames: int = Field(default=256, ge=1)
    cdf_points: int = Field(default=101, ge=2)


class TrainConfig(BaseModel):
    """
    Cascaded REGNN hyper-parameters and training loop settings

    Attributes
    ----------
    batch : int
        Instances per iteration b. Default is `64`
    lr_n : float
        Learning rate of the network emitting N. Default is `1e-3`
    lr_m : float
        Learning rate of the network emitting M. Default is `1e-3`
    iterations : int
        Training iterations. Default is `300`
    probe_frames : int
        Frames per loss probe. Default is `200`
    baseline : bool
        Subtract a running mean of the loss before scaling the score. Default is `True`
    baseline_decay : float
        Decay of the running-mean baseline. Default is `0.9`
    layers : int
        Graph filter layers per network L. Default is `25`
    taps : int
        Filter length I (number of matrix powers, the identity included). Default is `4`
    features : int
        Hidden features F. Default is `2`
    beta_min : float
        Floor of the truncated Gaussian standard deviation. Default is `1e-3`
    init_std : float
        Standard deviation of the initial coefficients. Default is `0.1`
    checkpoint_every : int
        Persist a checkpoint every this many iterations, 0 only at the end. Default is `50`
    resume : Path, optional
        Checkpoint to continue from
    """

    batch: int = Field(default=64, ge=1)
    lr_n: float = Field(default=1e-3, ge=0.0)
    lr_m: float = Field(default=1e-3, ge=0.0)
    iterations: int = Field(default=300, ge=1)
    probe_frames: int = Field(default=200, ge=1)
    baseline: bool = True
    baseline_decay: float = Field(default=0.9, ge=0.0, lt=1.0)
    layers: int = Field(default=25, ge=1)
    taps: int = Field(default=4, ge=1)
    features: int = Field(default=2, ge=1)
    beta_min: float = Field(default=1e-3, gt=0.0, lt=1.0)
    init_std: float = Field(default=0.1, ge=0.0)
    checkpoint_every: int = Field(default=50, ge=0)
    resume: Optional[Path] = None

    @field_validator("resume")
    @classmethod
    def resolve_path(cls, path: Optional[Path]) -> Optional[Path]:
        return None if path is None else path.expanduser().resolve()


class AnalyzeConfig(BaseModel):
    """
    Approximation sweeps of the `analyze` subcommand

    Attributes
    ----------
    densities : list[float]
        Transmitter densities per km² swept by the analysis. Default is `[14, 28, 56]`
    """

    densities: list[float] = [14.0, 28.0, 56.0]

    @field_validator("densities")
    @classmethod
    def check_densities(cls, densities: list[float]) -> list[float]:
        if not densities or any(d <= 0.0 for d in densities):
            raise ValueError("densities must be a non-empty list of positive values")
        return densities


class OutputConfig(BaseModel):
    """
    Attributes
    ----------
    dir : Path
        Directory receiving every output file. Default is `./results`
    logfile : bool
        Mirror the log into `urllcsim.log` inside `dir`. Default is `False`
    """

    dir: Path = Field(default=Path("results"), validate_default=True)
    logfile: bool = False

    @field_validator("dir")
    @classmethod
    def resolve_path(cls, path: Path) -> Path:
        return path.expanduser().resolve()


class ExperimentConfig(BaseModel):
    """
    Pydantic model for validating and setting defaults of an experiment file

    Attributes
    ----------
    version : int
        Schema version, must be `1`
    seed : int
        Global seed every random stream is split from. Default is `0`
    workers : int, optional
        Worker processes, `None` uses every available core
    topology : TopologyConfig
    qos : QosSpec
    scenario : SymmetricScenario
    policy : PolicyConfig
    mc : McConfig
    train : TrainConfig
    analyze : AnalyzeConfig
    output : OutputConfig
    """

    version: int = 1
    """Schema version"""

    seed: int = Field(default=0, ge=0, lt=2**64)
    """Global seed"""

    workers: Optional[int] = Field(default=None, ge=1)
    """Worker processes, `None` for all cores"""

    topology: TopologyConfig = TopologyConfig()
    qos: QosSpec = QosSpec()
    scenario: SymmetricScenario = SymmetricScenario()
    policy: PolicyConfig = PolicyConfig()
    mc: McConfig = McConfig()
    train: TrainConfig = TrainConfig()
    analyze: AnalyzeConfig = AnalyzeConfig()
    output: OutputConfig = OutputConfig()

    @field_validator("version")
    @classmethod
    def check_version(cls, version: int) -> int:
        if version != 1:
            raise ValueError(f"unsupported config version {version}, expected 1")
        return version
# fmt: on
