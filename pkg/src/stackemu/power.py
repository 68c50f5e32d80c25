"""Configurable tile-level heat generators.

Each device layer carries a tile grid; each tile holds a temporal power
density profile in W/cm^2. Profiles convert to volumetric sources by
spreading a tile's areal density through the full thickness of its die.
Voxel assignment is overlap-weighted, so the volume integral of the
source field equals the tile-sum total power exactly, for any grid
resolution.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .stack import StackConfig, VoxelGrid


class Profile:
    """Base temporal power-density profile, W/cm^2."""

    def power_at(self, t: float) -> float:  # pragma: no cover - abstract
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(Profile):
    p: float = 0.0

    def __post_init__(self):
        if self.p < 0:
            raise ValueError("power density must be >= 0")

    def power_at(self, t: float) -> float:
        return self.p


@dataclass(frozen=True)
class Step(Profile):
    p0: float
    p1: float
    t_switch: float

    def __post_init__(self):
        if self.p0 < 0 or self.p1 < 0:
            raise ValueError("power densities must be >= 0")

    def power_at(self, t: float) -> float:
        return self.p0 if t < self.t_switch else self.p1


@dataclass(frozen=True)
class Periodic(Profile):
    """Square wave: p_high for the first duty fraction of each period."""

    p_low: float
    p_high: float
    period: float
    duty: float

    def __post_init__(self):
        if self.p_low < 0 or self.p_high < 0:
            raise ValueError("power densities must be >= 0")
        if self.period <= 0:
            raise ValueError("period must be positive")
        if not 0.0 <= self.duty <= 1.0:
            raise ValueError("duty must be in [0, 1]")

    def power_at(self, t: float) -> float:
        phase = (t % self.period) / self.period
        return self.p_high if phase < self.duty else self.p_low


@dataclass(frozen=True)
class Trace(Profile):
    """Piecewise-constant samples (t, p); holds the last value forever."""

    samples: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(map(tuple, self.samples)))
        if not self.samples:
            raise ValueError("trace needs at least one sample")
        ts = [s[0] for s in self.samples]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("trace timestamps must be strictly increasing")
        if any(s[1] < 0 for s in self.samples):
            raise ValueError("power densities must be >= 0")

    def power_at(self, t: float) -> float:
        if t <= self.samples[0][0]:
            return self.samples[0][1]
        idx = np.searchsorted([s[0] for s in self.samples], t, side="right") - 1
        return self.samples[idx][1]


def load_trace_csv(path) -> Trace:
    """Two columns `t_seconds,power_w_per_cm2`, header required."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != \
                ["t_seconds", "power_w_per_cm2"]:
            raise ValueError(
                f"{path}: expected header 't_seconds,power_w_per_cm2'")
        samples = [(float(r[0]), float(r[1])) for r in reader if r]
    return Trace(tuple(samples))


@dataclass(frozen=True)
class CoreProxyPreset:
    """Spatial activity pattern scaled by a base density."""

    name: str
    spatial_pattern: tuple[tuple[float, ...], ...]  # (rows, cols) multipliers
    base_density: float                             # W/cm^2

    def __post_init__(self):
        pat = np.asarray(self.spatial_pattern, dtype=float)
        if (pat < 0).any():
            raise ValueError("pattern multipliers must be >= 0")
        if self.name != "idle" and not (pat > 0).any():
            raise ValueError("pattern needs at least one positive entry")

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.spatial_pattern), len(self.spatial_pattern[0]))


def _pattern(rows):
    return tuple(tuple(float(v) for v in row) for row in rows)


def _center_hotspot(rows, cols, edge, center):
    pat = np.full((rows, cols), edge)
    pat[rows // 4: rows - rows // 4, cols // 4: cols - cols // 4] = center
    return _pattern(pat)


# Preset pattern tables for the default 4x8 tile grid (data, not code).
BUILTIN_PRESETS = {
    "cpu_core": CoreProxyPreset("cpu_core", _center_hotspot(4, 8, 0.5, 2.0), 20.0),
    "gpu_sm": CoreProxyPreset("gpu_sm", _center_hotspot(4, 8, 1.0, 4.0), 15.0),
    "cache": CoreProxyPreset("cache", _pattern(np.full((4, 8), 1.0)), 3.0),
    "dram": CoreProxyPreset("dram", _pattern(np.full((4, 8), 1.0)), 1.5),
    "accelerator": CoreProxyPreset(
        "accelerator", _center_hotspot(4, 8, 0.25, 3.0), 25.0),
    "idle": CoreProxyPreset("idle", _pattern(np.zeros((4, 8))), 0.0),
}


@dataclass(frozen=True)
class PowerMap:
    """Per (device layer, tile) temporal profiles. Immutable; setters
    return new maps."""

    config: StackConfig
    profiles: tuple[tuple[tuple[Profile, ...], ...], ...]  # [layer][row][col]

    @staticmethod
    def zeros(config: StackConfig) -> "PowerMap":
        layers = []
        for layer in config.device_layers:
            layers.append(tuple(
                tuple(Constant(0.0) for _ in range(layer.tile_cols))
                for _ in range(layer.tile_rows)))
        return PowerMap(config=config, profiles=tuple(layers))

    @property
    def n_device_layers(self) -> int:
        return len(self.profiles)

    def tile_shape(self, layer: int) -> tuple[int, int]:
        return (len(self.profiles[layer]), len(self.profiles[layer][0]))

    def profile(self, layer: int, row: int, col: int) -> Profile:
        return self.profiles[layer][row][col]

    def _check_tile(self, layer: int, row: int, col: int):
        if not 0 <= layer < self.n_device_layers:
            raise IndexError(f"device layer {layer} out of range")
        rows, cols = self.tile_shape(layer)
        if not (0 <= row < rows and 0 <= col < cols):
            raise IndexError(f"tile ({row}, {col}) out of range for "
                             f"{rows}x{cols} grid")

    def set_tile_power(self, layer: int, row: int, col: int,
                       profile: Profile) -> "PowerMap":
        self._check_tile(layer, row, col)
        layers = list(self.profiles)
        rows = [list(r) for r in layers[layer]]
        rows[row][col] = profile
        layers[layer] = tuple(tuple(r) for r in rows)
        return replace(self, profiles=tuple(layers))

    def apply_preset(self, layer: int, preset: CoreProxyPreset) -> "PowerMap":
        self._check_tile(layer, 0, 0)
        if preset.shape != self.tile_shape(layer):
            raise ValueError(
                f"preset shape {preset.shape} does not match layer tile grid "
                f"{self.tile_shape(layer)}")
        layers = list(self.profiles)
        layers[layer] = tuple(
            tuple(Constant(preset.base_density * m) for m in row)
            for row in preset.spatial_pattern)
        return replace(self, profiles=tuple(layers))

    def set_uniform(self, layer: int, profile: Profile) -> "PowerMap":
        self._check_tile(layer, 0, 0)
        rows, cols = self.tile_shape(layer)
        layers = list(self.profiles)
        layers[layer] = tuple(tuple(profile for _ in range(cols))
                              for _ in range(rows))
        return replace(self, profiles=tuple(layers))

    def densities(self, layer: int, t: float) -> np.ndarray:
        """(rows, cols) array of densities at time t, W/cm^2."""
        if t < 0:
            raise ValueError("time must be >= 0")
        return np.array([[p.power_at(t) for p in row]
                         for row in self.profiles[layer]])

    def scaled(self, layer_factors: dict[int, float]) -> "PowerMap":
        """Return a map with whole device layers scaled (DTM throttling)."""
        layers = list(self.profiles)
        for layer, f in layer_factors.items():
            layers[layer] = tuple(
                tuple(_Scaled.wrap(p, f) for p in row)
                for row in layers[layer])
        return replace(self, profiles=tuple(layers))


@dataclass(frozen=True)
class _Scaled(Profile):
    inner: Profile
    factor: float

    @staticmethod
    def wrap(p: Profile, factor: float) -> Profile:
        if isinstance(p, _Scaled):
            return _Scaled(p.inner, p.factor * factor)
        return _Scaled(p, factor)

    def power_at(self, t: float) -> float:
        return self.factor * self.inner.power_at(t)


def _overlap_weights(n_cells: int, cell_size: float, n_tiles: int,
                     extent: float) -> np.ndarray:
    """(n_cells, n_tiles) fractional overlap of each grid cell with each
    tile interval along one axis; rows sum to 1."""
    tile_size = extent / n_tiles
    w = np.zeros((n_cells, n_tiles))
    for i in range(n_cells):
        lo, hi = i * cell_size, (i + 1) * cell_size
        for j in range(n_tiles):
            tlo, thi = j * tile_size, (j + 1) * tile_size
            ov = min(hi, thi) - max(lo, tlo)
            if ov > 0:
                w[i, j] = ov / cell_size
    return w


def power_density_field(pmap: PowerMap, grid: VoxelGrid,
                        t: float) -> np.ndarray:
    """Volumetric heat source (nz, ny, nx), W/m^3; nonzero only in device
    slabs. Tile areal density spreads through the full die thickness."""
    if t < 0:
        raise ValueError("time must be >= 0")
    config = grid.config
    if config is not pmap.config and config != pmap.config:
        raise ValueError("power map and grid come from different stacks")
    field = np.zeros(grid.shape)
    w_m = config.die_width_mm * 1e-3
    l_m = config.die_length_mm * 1e-3
    for ordinal, layer_index in enumerate(config.device_layer_indices):
        layer = config.layers[layer_index]
        dens = pmap.densities(ordinal, t) * 1e4  # W/cm^2 -> W/m^2
        if not dens.any():
            continue
        wx = _overlap_weights(grid.nx, grid.dx_m, layer.tile_cols, w_m)
        wy = _overlap_weights(grid.ny, grid.dy_m, layer.tile_rows, l_m)
        areal = wy @ dens @ wx.T  # (ny, nx), W/m^2
        thickness = layer.thickness_um * 1e-6
        slabs = grid.layer_slabs(layer_index)
        for iz in slabs:
            field[iz] += areal / thickness
    return field


def total_power(pmap: PowerMap, config: StackConfig, t: float) -> float:
    """Total injected power at time t, W."""
    total = 0.0
    for ordinal, layer_index in enumerate(config.device_layer_indices):
        layer = config.layers[layer_index]
        tile_area_cm2 = (config.die_width_mm / 10.0 / layer.tile_cols) * \
                        (config.die_length_mm / 10.0 / layer.tile_rows)
        total += float(pmap.densities(ordinal, t).sum()) * tile_area_cm2
    return total
