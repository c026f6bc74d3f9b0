"""
Network instance generators and instance files.

Gains are stored linear, entry (i, k) of the gain matrix is the large-scale gain
from transmitter i to receiver k. dB only appears at the hexagonal path-loss model.
"""

from __future__ import annotations

import json
import math
from dataclasses import replace
from functools import partial
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
from loguru import logger

from .exceptions import ConfigError, ShapeError
from .model import QosSpec, Reuse, SymmetricScenario, TopologyConfig, TopologyKind
from .types import BoolArray, FloatArray, IntArray, NetworkInstance

MIN_DISTANCE_M = 1.0
"""Distances are clamped to this before any path-loss model is applied"""

HEX_REGION_CELLS = (5, 5)
"""Columns and rows of one hexagonal region"""

HEX_REGION_LAYOUT = {1: (1, 1), 2: (2, 1), 4: (2, 2)}
"""Regions per row and per column of the hexagonal tiling"""


def power_law_gain(distance: FloatArray, alpha: float) -> FloatArray:
    """r^-α with r clamped to `MIN_DISTANCE_M`"""
    return np.asarray(np.maximum(distance, MIN_DISTANCE_M) ** -alpha, dtype=np.float64)


def hex_path_loss_db(distance: FloatArray) -> FloatArray:
    """35.3 + 37.6 log10(r), r in meters"""
    return np.asarray(35.3 + 37.6 * np.log10(np.maximum(distance, MIN_DISTANCE_M)), dtype=np.float64)


def hex_path_gain(distance: FloatArray) -> FloatArray:
    return np.asarray(10.0 ** (-hex_path_loss_db(distance) / 10.0), dtype=np.float64)


def _receivers_around(tx_pos: FloatArray, distance: FloatArray, rng: np.random.Generator) -> FloatArray:
    angle = rng.uniform(0.0, 2.0 * math.pi, size=tx_pos.shape[0])
    return tx_pos + np.column_stack((distance * np.cos(angle), distance * np.sin(angle)))


def _instance(
    tx_pos: FloatArray,
    rx_pos: FloatArray,
    path_gain: Callable[[FloatArray], FloatArray],
    arrival: FloatArray,
    *,
    direct_gain: Optional[FloatArray] = None,
    reuse_group: Optional[IntArray] = None,
    bandwidth_hz: Optional[FloatArray] = None,
    measured: Optional[BoolArray] = None,
    default_bandwidth_hz: float = 1e6,
) -> NetworkInstance:
    """
    Assemble an instance whose gains are `path_gain` of its own transmitter to receiver
    distances, with the diagonal replaced by `direct_gain` when given.
    """
    k = arrival.shape[0]
    geometry = NetworkInstance(
        tx_pos=np.asarray(tx_pos, dtype=np.float64).reshape(k, 2),
        rx_pos=np.asarray(rx_pos, dtype=np.float64).reshape(k, 2),
        gain=np.ones((k, k), dtype=np.float64),
        arrival=np.asarray(arrival, dtype=np.float64),
        reuse_group=np.zeros(k, dtype=np.int64) if reuse_group is None else np.asarray(reuse_group, dtype=np.int64),
        bandwidth_hz=(
            np.full(k, default_bandwidth_hz) if bandwidth_hz is None else np.asarray(bandwidth_hz, dtype=np.float64)
        ),
        measured=np.ones(k, dtype=np.bool_) if measured is None else np.asarray(measured, dtype=np.bool_),
    )
    gain = path_gain(geometry.distances())
    if direct_gain is not None:
        np.fill_diagonal(gain, direct_gain)
    return replace(geometry, gain=gain)


def gen_bipolar(
    scenario: SymmetricScenario,
    area_km2: float,
    rng: np.random.Generator,
    *,
    guard_ring: bool = True,
    bandwidth_hz: float = 1e6,
) -> NetworkInstance:
    """
    Poisson bipolar network on a square of `area_km2`.

    With `guard_ring`, the square is padded by 5/sqrt(ρ) on every side. Links in the
    padding interfere but are not measured, which removes the boundary effect.
    """
    if area_km2 <= 0.0:
        raise ConfigError(f"area must be positive, got {area_km2}")

    side = math.sqrt(area_km2) * 1000.0
    guard = 5.0 / math.sqrt(scenario.density_m2) if guard_ring else 0.0
    padded = side + 2.0 * guard

    count = int(rng.poisson(scenario.density_m2 * padded**2))
    tx_pos = rng.uniform(-guard, side + guard, size=(count, 2))
    rx_pos = _receivers_around(tx_pos, np.full(count, scenario.r0), rng)

    measured = np.all((tx_pos >= 0.0) & (tx_pos <= side), axis=1)
    logger.debug(f"Bipolar instance: {count} link(s), {int(measured.sum())} measured, guard ring {guard:.0f} m")

    return _instance(
        tx_pos,
        rx_pos,
        partial(power_law_gain, alpha=scenario.alpha),
        np.full(count, scenario.lambda0),
        direct_gain=np.full(count, scenario.r0**-scenario.alpha),
        measured=measured,
        default_bandwidth_hz=bandwidth_hz,
    )


def gen_random_area(
    density: float,
    area_km2: float,
    alpha: float,
    rng: np.random.Generator,
    *,
    link_dist_range: tuple[float, float] = (50.0, 100.0),
    arrival_range: tuple[float, float] = (0.01, 0.1),
    bandwidth_hz: float = 1e6,
) -> NetworkInstance:
    """
    Random-area topology: round(ρ·area) transmitters placed uniformly on a square, each
    receiver at a uniform distance within `link_dist_range`, arrival rates uniform within
    `arrival_range`, gains r^-α.
    """
    if area_km2 <= 0.0 or density <= 0.0:
        raise ConfigError(f"density and area must be positive, got {density} and {area_km2}")

    side = math.sqrt(area_km2) * 1000.0
    count = int(round(density * area_km2))
    tx_pos = rng.uniform(0.0, side, size=(count, 2))
    link_dist = rng.uniform(*link_dist_range, size=count)
    rx_pos = _receivers_around(tx_pos, link_dist, rng)
    arrival = rng.uniform(*arrival_range, size=count)

    return _instance(
        tx_pos,
        rx_pos,
        partial(power_law_gain, alpha=alpha),
        arrival,
        direct_gain=power_law_gain(link_dist, alpha),
        default_bandwidth_hz=bandwidth_hz,
    )


def hex_cells(regions: int, cell_radius_m: float) -> tuple[FloatArray, IntArray]:
    """
    Cell centers of the hexagonal tiling and their axial coordinates (q, r).

    One region is a 5 x 5 block of cells in offset (odd rows shifted) layout; 2 regions
    sit side by side and 4 form a 2 x 2 block, giving 25, 50 or 100 cells.
    """
    if regions not in HEX_REGION_LAYOUT:
        raise ConfigError(f"regions must be one of {sorted(HEX_REGION_LAYOUT)}, got {regions}")

    per_row, per_col = HEX_REGION_LAYOUT[regions]
    cols, rows = HEX_REGION_CELLS[0] * per_row, HEX_REGION_CELLS[1] * per_col

    row, col = np.divmod(np.arange(rows * cols), cols)
    x = math.sqrt(3.0) * cell_radius_m * (col + 0.5 * (row & 1))
    y = 1.5 * cell_radius_m * row
    q = col - (row - (row & 1)) // 2

    return np.column_stack((x, y)).astype(np.float64), np.column_stack((q, row)).astype(np.int64)


def reuse_colors(axial: IntArray, reuse: Reuse) -> IntArray:
    """
    Proper coloring of the hexagonal lattice into 1, 3 or 7 reuse groups.

    Neighbors differ by (±1, 0), (0, ±1) or ±(1, -1) in axial coordinates, so
    q - r mod 3 and q + 3r mod 7 never repeat between neighbors.
    """
    q, r = axial[:, 0], axial[:, 1]
    if reuse is Reuse.ONE:
        return np.zeros(q.shape[0], dtype=np.int64)
    if reuse is Reuse.THIRD:
        return np.asarray((q - r) % 3, dtype=np.int64)
    return np.asarray((q + 3 * r) % 7, dtype=np.int64)


def gen_hexagonal(
    regions: int,
    cell_radius_m: float,
    reuse: Reuse,
    rng: np.random.Generator,
    *,
    user_dist_range: tuple[float, float] = (50.0, 100.0),
    arrival_range: tuple[float, float] = (0.01, 0.1),
    bandwidth_hz: float = 1e6,
) -> NetworkInstance:
    """
    Hexagonal topology: one BS per cell center serving one user at a uniform distance
    within `user_dist_range`. Each reuse group gets `bandwidth_hz` times the reuse factor.

    Raises
    ------
    ConfigError
        `regions` is not 1, 2 or 4.
    """
    tx_pos, axial = hex_cells(regions, cell_radius_m)
    count = tx_pos.shape[0]
    link_dist = rng.uniform(*user_dist_range, size=count)
    rx_pos = _receivers_around(tx_pos, link_dist, rng)
    arrival = rng.uniform(*arrival_range, size=count)

    groups = reuse_colors(axial, reuse)

    return _instance(
        tx_pos,
        rx_pos,
        hex_path_gain,
        arrival,
        reuse_group=groups,
        bandwidth_hz=np.full(count, bandwidth_hz * reuse.factor),
    )


def interference_mask(instance: NetworkInstance, cutoff_m: Optional[float] = None) -> BoolArray:
    """
    (K, K) mask, entry (i, k) true when transmitter i interferes with receiver k:
    same reuse group, i != k, and tx_i within `cutoff_m` of rx_k (`None` means no cutoff).
    """
    k = instance.k_links
    mask = instance.reuse_group[:, None] == instance.reuse_group[None, :]
    mask &= ~np.eye(k, dtype=np.bool_)
    if cutoff_m is not None and math.isfinite(cutoff_m):
        mask &= instance.distances() <= cutoff_m
    return np.asarray(mask, dtype=np.bool_)


def nearest_interferer_mask(instance: NetworkInstance, mask: BoolArray) -> BoolArray:
    """Keep, for every receiver, only the allowed interferer with the largest large-scale gain"""
    k = instance.k_links
    nearest = np.zeros((k, k), dtype=np.bool_)
    if k == 0:
        return nearest
    masked_gain = np.where(mask, instance.gain, -np.inf)
    strongest = np.argmax(masked_gain, axis=0)
    has_any = np.any(mask, axis=0)
    receivers = np.arange(k)[has_any]
    nearest[strongest[has_any], receivers] = True
    return nearest


def build_instance(
    config: TopologyConfig, scenario: SymmetricScenario, spec: QosSpec, rng: np.random.Generator
) -> NetworkInstance:
    """Generate one instance of the configured topology"""
    if config.kind is TopologyKind.BIPOLAR:
        return gen_bipolar(scenario, config.area_km2, rng, guard_ring=config.guard_ring, bandwidth_hz=spec.bandwidth_hz)

    if config.kind is TopologyKind.RANDOM_AREA:
        return gen_random_area(
            config.density,
            config.area_km2,
            config.alpha,
            rng,
            link_dist_range=config.link_dist_range,
            arrival_range=config.arrival_range,
            bandwidth_hz=spec.bandwidth_hz,
        )

    if config.kind is TopologyKind.HEXAGONAL:
        return gen_hexagonal(
            config.regions,
            config.cell_radius_m,
            config.reuse,
            rng,
            user_dist_range=config.user_dist_range,
            arrival_range=config.arrival_range,
            bandwidth_hz=spec.bandwidth_hz,
        )

    raise ConfigError(f"topology kind '{config.kind}' is not a generator")


def instance_to_dict(instance: NetworkInstance) -> dict[str, Any]:
    return {
        "k_links": instance.k_links,
        "tx_pos": instance.tx_pos.tolist(),
        "rx_pos": instance.rx_pos.tolist(),
        "gain": instance.gain.ravel().tolist(),
        "arrival": instance.arrival.tolist(),
        "reuse_group": instance.reuse_group.tolist(),
        "bandwidth_hz": instance.bandwidth_hz.tolist(),
        "measured": instance.measured.tolist(),
    }


def instance_from_dict(data: dict[str, Any]) -> NetworkInstance:
    """
    Rebuild an instance written by `instance_to_dict`.

    Raises
    ------
    ShapeError
        Missing fields or fields whose lengths disagree with `k_links`.
    """
    try:
        k = int(data["k_links"])
        tx_pos = np.asarray(data["tx_pos"], dtype=np.float64).reshape(k, 2)
        rx_pos = np.asarray(data["rx_pos"], dtype=np.float64).reshape(k, 2)
        gain = np.asarray(data["gain"], dtype=np.float64).reshape(k, k)
        arrival = np.asarray(data["arrival"], dtype=np.float64).reshape(k)
        reuse_group = np.asarray(data.get("reuse_group", [0] * k), dtype=np.int64).reshape(k)
        bandwidth_hz = np.asarray(data["bandwidth_hz"], dtype=np.float64).reshape(k)
        measured = np.asarray(data.get("measured", [True] * k), dtype=np.bool_).reshape(k)
    except KeyError as key:
        raise ShapeError(f"instance is missing field {key}") from None
    except ValueError as error:
        raise ShapeError(f"instance arrays do not match k_links: {error}") from None

    if k > 0 and (not np.all(np.isfinite(gain)) or np.any(gain <= 0.0)):
        raise ShapeError("instance gains must be positive and finite")

    return NetworkInstance(tx_pos, rx_pos, gain, arrival, reuse_group, bandwidth_hz, measured)


def save_instance(instance: NetworkInstance, path: Path, meta: Optional[dict[str, Any]] = None) -> Path:
    """Write an instance JSON, optionally with a `meta` object (config hash, seed...)"""
    data = instance_to_dict(instance)
    if meta is not None:
        data["meta"] = meta
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=None, separators=(",", ":")), encoding="utf-8")
    return path


def load_instance(path: Path) -> NetworkInstance:
    return instance_from_dict(json.loads(path.read_text(encoding="utf-8")))
