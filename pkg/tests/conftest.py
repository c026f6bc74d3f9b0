from __future__ import annotations

from pathlib import Path
from typing import Any, Callable

import numpy as np
import pytest
import yaml

from urllcsim.model import QosSpec, SymmetricScenario, TrainConfig
from urllcsim.types import NetworkInstance


@pytest.fixture
def symmetric_spec() -> QosSpec:
    """Single-antenna Rayleigh links without noise, the setting of the closed-form approximations"""
    return QosSpec(fading="rayleigh", n_tx_antennas=1, include_noise=False)


@pytest.fixture
def ms_spec() -> QosSpec:
    return QosSpec(fading="rayleigh", n_tx_antennas=1, include_noise=False, queue_time_unit="ms")


@pytest.fixture
def scenario() -> SymmetricScenario:
    return SymmetricScenario()


def make_instance(
    k: int,
    seed: int = 7,
    *,
    arrival: float = 0.05,
    spread_m: float = 400.0,
    link_m: float = 75.0,
) -> NetworkInstance:
    """K links scattered on a square, power-law gains with exponent 4"""
    rng = np.random.default_rng(seed)
    tx_pos = rng.uniform(0.0, spread_m, size=(k, 2))
    angle = rng.uniform(0.0, 2.0 * np.pi, size=k)
    rx_pos = tx_pos + link_m * np.column_stack((np.cos(angle), np.sin(angle)))
    diff = tx_pos[:, None, :] - rx_pos[None, :, :]
    gain = np.hypot(diff[..., 0], diff[..., 1]) ** -4.0
    return NetworkInstance(
        tx_pos=tx_pos,
        rx_pos=rx_pos,
        gain=gain,
        arrival=np.full(k, arrival),
        reuse_group=np.zeros(k, dtype=np.int64),
        bandwidth_hz=np.full(k, 1e6),
        measured=np.ones(k, dtype=np.bool_),
    )


@pytest.fixture
def instance() -> NetworkInstance:
    return make_instance(6)


@pytest.fixture
def small_train() -> TrainConfig:
    return TrainConfig(layers=3, taps=3, features=2, init_std=0.5, batch=2, iterations=2, probe_frames=20)


@pytest.fixture
def write_config(tmp_path: Path) -> Callable[..., Path]:
    """Write an experiment file into tmp_path, results go to tmp_path/results unless overridden"""

    def write(data: dict[str, Any], name: str = "urllcsim.yaml") -> Path:
        body = {"output": {"dir": str(tmp_path / "results")}, **data}
        path = tmp_path / name
        path.write_text(yaml.safe_dump(body), encoding="utf-8")
        return path

    return write
