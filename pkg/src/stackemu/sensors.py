"""Virtual thermal sensors: noisy, quantized, sampled point probes, plus
greedy placement for hotspot tracking and max-readout reconstruction.

Noise is counter-based: each (network seed, sensor index, sample index)
triple seeds its own generator, so any reading is reproducible without
storing streams.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .solver import TemperatureField
from .stack import VoxelGrid


@dataclass(frozen=True)
class SensorSpec:
    """Location is (device layer ordinal, x mm, y mm)."""

    layer: int
    x_mm: float
    y_mm: float
    noise_sigma: float = 0.5        # K
    quantization_step: float = 0.25  # K
    sample_period: float = 1e-3      # s

    def __post_init__(self):
        if self.noise_sigma < 0 or self.quantization_step < 0:
            raise ValueError("noise_sigma and quantization_step must be >= 0")
        if self.sample_period <= 0:
            raise ValueError("sample_period must be positive")

    @property
    def site(self) -> tuple[int, float, float]:
        return (self.layer, self.x_mm, self.y_mm)


@dataclass(frozen=True)
class SensorNetwork:
    sensors: tuple[SensorSpec, ...]
    candidate_sites: tuple[tuple[int, float, float], ...] = ()
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sensors", tuple(self.sensors))
        object.__setattr__(self, "candidate_sites",
                           tuple(map(tuple, self.candidate_sites)))
        sites = [s.site for s in self.sensors]
        if len(set(sites)) != len(sites):
            raise ValueError("two sensors share the same site")


def quantize(value: float, step: float) -> float:
    """Round to the nearest multiple of step, ties away from zero."""
    if step <= 0:
        return value
    return math.copysign(math.floor(abs(value) / step + 0.5), value) * step


def _site_voxel(site: tuple[int, float, float],
                grid: VoxelGrid) -> tuple[int, int, int]:
    layer, x_mm, y_mm = site
    device = grid.device_layer_indices
    if not 0 <= layer < len(device):
        raise ValueError(f"device layer {layer} out of range")
    if not (0 <= x_mm <= grid.config.die_width_mm
            and 0 <= y_mm <= grid.config.die_length_mm):
        raise ValueError(f"sensor site ({x_mm}, {y_mm}) mm outside the die")
    slabs = grid.layer_slabs(device[layer])
    iz = int(slabs[len(slabs) // 2])
    ix = min(int(x_mm * 1e-3 / grid.dx_m), grid.nx - 1)
    iy = min(int(y_mm * 1e-3 / grid.dy_m), grid.ny - 1)
    return iz, iy, ix


def read_sensors(network: SensorNetwork, field_t: TemperatureField,
                 grid: VoxelGrid, t: float) -> list[float]:
    """Quantized noisy readings at time t, one per sensor, deg C."""
    if t < 0:
        raise ValueError("time must be >= 0")
    readings = []
    for s_idx, sensor in enumerate(network.sensors):
        iz, iy, ix = _site_voxel(sensor.site, grid)
        true_t = float(field_t.values[iz, iy, ix])
        if sensor.noise_sigma > 0:
            sample_idx = int(t // sensor.sample_period)
            rng = np.random.default_rng(
                [network.rng_seed & 0x7FFFFFFF, s_idx, sample_idx])
            true_t += float(rng.standard_normal()) * sensor.noise_sigma
        readings.append(quantize(true_t, sensor.quantization_step))
    return readings


UNOBSERVED = None  # sentinel for layers with no sensors / empty placements


@dataclass(frozen=True)
class Reconstruction:
    per_layer_max: tuple[float | None, ...]  # indexed by device ordinal
    hotspot_estimate: float | None


def reconstruct_field(network: SensorNetwork, readings: list[float],
                      n_device_layers: int) -> Reconstruction:
    """Max-readout estimate: per-layer max over that layer's sensors,
    global hotspot = max reading; sensorless layers stay unobserved."""
    if len(readings) != len(network.sensors):
        raise ValueError("readings length does not match sensor count")
    per_layer: list[float | None] = [UNOBSERVED] * n_device_layers
    for sensor, r in zip(network.sensors, readings):
        cur = per_layer[sensor.layer]
        per_layer[sensor.layer] = r if cur is None else max(cur, r)
    observed = [r for r in per_layer if r is not None]
    return Reconstruction(per_layer_max=tuple(per_layer),
                          hotspot_estimate=max(observed) if observed else None)


def _true_values(sites, fields: list[TemperatureField], grid: VoxelGrid):
    """(n_sites, n_fields) noiseless site temperatures."""
    vals = np.empty((len(sites), len(fields)))
    for i, site in enumerate(sites):
        iz, iy, ix = _site_voxel(site, grid)
        for j, f in enumerate(fields):
            vals[i, j] = f.values[iz, iy, ix]
    return vals


def placement_objective(sites, fields: list[TemperatureField],
                        grid: VoxelGrid) -> float:
    """Mean absolute hotspot-tracking error of a placement over fields,
    with noiseless readings."""
    if not sites:
        raise ValueError("placement is empty")
    true_max = np.array([f.values.max() for f in fields])
    vals = _true_values(sites, fields, grid)
    est = vals.max(axis=0)
    return float(np.mean(np.abs(true_max - est)))


def place_sensors_greedy(candidates, k: int,
                         training_fields: list[TemperatureField],
                         grid: VoxelGrid) -> list[tuple[int, float, float]]:
    """Greedy hotspot-tracking placement. Each round adds the candidate
    giving the lowest objective; ties go to the lowest candidate index.
    Deterministic; returns exactly k sites in selection order."""
    candidates = [tuple(c) for c in candidates]
    if k <= 0:
        raise ValueError("k must be positive")
    if k > len(candidates):
        raise ValueError("k exceeds candidate count")
    if not training_fields:
        raise ValueError("need at least one training field")

    true_max = np.array([f.values.max() for f in training_fields])
    vals = _true_values(candidates, training_fields, grid)

    chosen: list[int] = []
    est = np.full(len(training_fields), -np.inf)
    remaining = list(range(len(candidates)))
    for _ in range(k):
        best_idx, best_obj = None, np.inf
        for c in remaining:
            obj = float(np.mean(np.abs(true_max - np.maximum(est, vals[c]))))
            if obj < best_obj - 1e-15:
                best_idx, best_obj = c, obj
        chosen.append(best_idx)
        est = np.maximum(est, vals[best_idx])
        remaining.remove(best_idx)
    return [candidates[i] for i in chosen]


def hotspot_error(placement, evaluation_fields: list[TemperatureField],
                  grid: VoxelGrid):
    """(mean, max) absolute hotspot error with noiseless readings, K.
    Empty placement reports (UNOBSERVED, UNOBSERVED), never zero."""
    if not evaluation_fields:
        raise ValueError("need at least one evaluation field")
    if not placement:
        return (UNOBSERVED, UNOBSERVED)
    true_max = np.array([f.values.max() for f in evaluation_fields])
    vals = _true_values([tuple(p) for p in placement], evaluation_fields, grid)
    err = np.abs(true_max - vals.max(axis=0))
    return (float(err.mean()), float(err.max()))


def tile_center_candidates(grid: VoxelGrid) -> list[tuple[int, float, float]]:
    """Default candidate set: every tile center of every device layer."""
    config = grid.config
    out = []
    for ordinal, layer_index in enumerate(config.device_layer_indices):
        layer = config.layers[layer_index]
        tw = config.die_width_mm / layer.tile_cols
        th = config.die_length_mm / layer.tile_rows
        for r in range(layer.tile_rows):
            for c in range(layer.tile_cols):
                out.append((ordinal, (c + 0.5) * tw, (r + 0.5) * th))
    return out


def placement_to_csv(placement, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["layer", "x_mm", "y_mm"])
        for layer, x, y in placement:
            writer.writerow([layer, repr(float(x)), repr(float(y))])
