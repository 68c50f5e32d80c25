"""Lifetime-reliability screening metrics from thermal results.

Electromigration acceleration uses the thermal Arrhenius term only (no
per-wire current densities exist in this model). Thermal-cycling damage
uses simplified three-point rainflow over the extrema sequence with a
Coffin-Manson power law. Thermomechanical stress near via farms is a
unitless gradient-times-mismatch proxy, not MPa.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .solver import LayerStats, TemperatureField
from .stack import StackConfig, VoxelGrid

BOLTZMANN_EV = 8.617333262e-5  # eV/K
ZERO_C_IN_K = 273.15


@dataclass(frozen=True)
class ReliabilityParams:
    ea_ev: float = 0.7
    reference_t_c: float = 105.0
    cycling_exponent: float = 2.0
    delta_t_ref: float = 100.0       # K; one full-range cycle scores 1
    stress_cte_weight: float = 3.0   # mismatch weight at/near via farms
    stress_percentile: float = 99.0

    def __post_init__(self):
        if self.ea_ev <= 0:
            raise ValueError("activation energy must be positive")
        if self.cycling_exponent <= 0:
            raise ValueError("cycling exponent must be positive")
        if self.delta_t_ref <= 0:
            raise ValueError("delta_t_ref must be positive")
        if not 0 <= self.stress_percentile <= 100:
            raise ValueError("stress percentile must be in [0, 100]")


def em_acceleration(t_c: float,
                    params: ReliabilityParams = ReliabilityParams()) -> float:
    """Arrhenius acceleration factor relative to the reference
    temperature: AF = exp((Ea/kB) (1/T_ref - 1/T)), temperatures in K."""
    if t_c <= -ZERO_C_IN_K:
        raise ValueError(f"nonphysical temperature {t_c} C")
    t_k = t_c + ZERO_C_IN_K
    t_ref_k = params.reference_t_c + ZERO_C_IN_K
    return math.exp((params.ea_ev / BOLTZMANN_EV)
                    * (1.0 / t_ref_k - 1.0 / t_k))


def extract_extrema(trace) -> list[float]:
    """Strictly alternating local extrema of a time series, endpoints
    included; flat runs collapse."""
    vals = [float(v) for v in trace]
    out: list[float] = []
    for v in vals:
        if out and v == out[-1]:
            continue
        if len(out) >= 2 and (out[-1] - out[-2]) * (v - out[-1]) > 0:
            out[-1] = v
        else:
            out.append(v)
    return out


def rainflow_cycles(extrema: list[float]) -> list[tuple[float, float]]:
    """Simplified three-point rainflow on an extrema sequence.

    Stack method: whenever the middle range of the last three points is
    enclosed by the incoming range, that middle pair closes one full
    cycle and is removed. Leftover residual pairs count as half cycles.
    Returns (range, count) with count 1.0 or 0.5.
    """
    cycles: list[tuple[float, float]] = []
    stack: list[float] = []
    for v in extrema:
        stack.append(v)
        while len(stack) >= 3:
            x = abs(stack[-1] - stack[-2])
            y = abs(stack[-2] - stack[-3])
            if x < y:
                break
            cycles.append((y, 1.0))
            del stack[-3:-1]
    for a, b in zip(stack, stack[1:]):
        if a != b:
            cycles.append((abs(b - a), 0.5))
    return cycles


def cycling_damage(trace,
                   params: ReliabilityParams = ReliabilityParams()) -> float:
    """Coffin-Manson damage index: sum of count * (dT/dT_ref)^m over
    rainflow cycles. Flat traces score 0."""
    if len(trace) < 2:
        raise ValueError("trace needs at least 2 samples")
    cycles = rainflow_cycles(extract_extrema(trace))
    m = params.cycling_exponent
    return float(sum(count * (rng / params.delta_t_ref) ** m
                     for rng, count in cycles))


@dataclass(frozen=True)
class StressHotspot:
    voxel: tuple[int, int, int]   # (iz, iy, ix)
    score: float                  # |grad T| (K/mm) x mismatch weight


def stress_proxy(field_t: TemperatureField, grid: VoxelGrid,
                 config: StackConfig,
                 params: ReliabilityParams = ReliabilityParams()
                 ) -> list[StressHotspot]:
    """Gradient-magnitude stress scores, weighted up inside and one voxel
    ring around via-farm footprints. Returns voxels whose score exceeds
    the configured percentile, sorted descending, ties by linear index."""
    z_mm = grid.z_centers_m() * 1e3
    y_mm = grid.y_centers_m() * 1e3
    x_mm = grid.x_centers_m() * 1e3
    if grid.nz > 1:
        gz = np.gradient(field_t.values, z_mm, axis=0)
    else:
        gz = np.zeros(grid.shape)
    gy = np.gradient(field_t.values, y_mm, axis=1)
    gx = np.gradient(field_t.values, x_mm, axis=2)
    score = np.sqrt(gx**2 + gy**2 + gz**2)

    weight = np.ones(grid.shape)
    for i, layer in enumerate(config.layers):
        if not layer.tsv_farms:
            continue
        mask = grid.farm_lateral_mask(i)
        ring = mask.copy()
        ring[1:, :] |= mask[:-1, :]
        ring[:-1, :] |= mask[1:, :]
        ring[:, 1:] |= mask[:, :-1]
        ring[:, :-1] |= mask[:, 1:]
        for iz in grid.layer_slabs(i):
            weight[iz][ring] = params.stress_cte_weight
    score = score * weight

    flat = score.reshape(-1)
    threshold = np.percentile(flat, params.stress_percentile)
    # floor filters gradient roundoff on (near-)isothermal fields
    above = np.nonzero((flat > threshold) & (flat > 1e-9))[0]
    order = sorted(above, key=lambda i: (-flat[i], i))
    return [StressHotspot(
        voxel=tuple(int(v) for v in np.unravel_index(i, grid.shape)),
        score=float(flat[i])) for i in order]


@dataclass(frozen=True)
class LayerReliability:
    layer_index: int
    role: str
    max_t_c: float
    em_af: float
    cycling_damage: float


@dataclass(frozen=True)
class ReliabilityReport:
    layers: tuple[LayerReliability, ...]
    stress_hotspots: tuple[StressHotspot, ...]
    min_mttf_layer: int   # physical layer index of the worst (hottest) die


def reliability_report(layer_stats: list[LayerStats],
                       layer_traces: dict[int, list[float]],
                       field_t: TemperatureField, grid: VoxelGrid,
                       config: StackConfig,
                       params: ReliabilityParams = ReliabilityParams()
                       ) -> ReliabilityReport:
    """Aggregate EM, cycling and stress scores per device layer.

    layer_traces maps physical layer index -> time series of that layer's
    max temperature (may be missing or flat in steady-only runs). The
    min-MTTF layer is the highest-AF layer; ties go to the layer farthest
    from the heat sink (lowest index)."""
    layers = []
    for stats in layer_stats:
        trace = layer_traces.get(stats.layer_index, [stats.max, stats.max])
        layers.append(LayerReliability(
            layer_index=stats.layer_index,
            role=stats.role,
            max_t_c=stats.max,
            em_af=em_acceleration(stats.max, params),
            cycling_damage=cycling_damage(trace, params)))
    best = max(range(len(layers)),
               key=lambda i: (layers[i].em_af, -layers[i].layer_index))
    hotspots = stress_proxy(field_t, grid, config, params)
    return ReliabilityReport(layers=tuple(layers),
                             stress_hotspots=tuple(hotspots),
                             min_mttf_layer=layers[best].layer_index)
