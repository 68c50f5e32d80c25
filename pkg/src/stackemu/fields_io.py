"""Field export/import: CSV (full precision, round-trippable) and
PGM P2 grayscale heatmaps per layer."""

from __future__ import annotations

import csv

import numpy as np

from .solver import TemperatureField
from .stack import VoxelGrid

FIELD_CSV_HEADER = ["layer", "z", "y", "x", "temperature_c"]


def field_to_csv(field_t: TemperatureField, path) -> None:
    grid = field_t.grid
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FIELD_CSV_HEADER)
        for iz in range(grid.nz):
            layer = int(grid.slab_layer[iz])
            for iy in range(grid.ny):
                for ix in range(grid.nx):
                    writer.writerow([layer, iz, iy, ix,
                                     repr(float(field_t.values[iz, iy, ix]))])


def field_from_csv(path, grid: VoxelGrid,
                   time: float | None = None) -> TemperatureField:
    values = np.empty(grid.shape)
    seen = np.zeros(grid.shape, dtype=bool)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != FIELD_CSV_HEADER:
            raise ValueError(f"{path}: expected header "
                             f"{','.join(FIELD_CSV_HEADER)}")
        for row in reader:
            if not row:
                continue
            _, iz, iy, ix, t = row
            iz, iy, ix = int(iz), int(iy), int(ix)
            values[iz, iy, ix] = float(t)
            seen[iz, iy, ix] = True
    if not seen.all():
        raise ValueError(f"{path}: field is missing voxels")
    return TemperatureField(values=values, grid=grid, time=time)


def plane_to_pgm(plane: np.ndarray, path, floor: float,
                 unit: str = "C") -> None:
    """Write a 2D (ny, nx) plane as ASCII PGM, linearly mapping
    [floor, max] to [0, 255]; the comment line carries the max."""
    vmax = float(plane.max())
    span = vmax - floor
    if span <= 0:
        pix = np.zeros(plane.shape, dtype=int)
    else:
        pix = np.clip(np.rint((plane - floor) / span * 255), 0, 255).astype(int)
    ny, nx = plane.shape
    lines = [f"P2", f"# max={vmax!r} floor={floor!r} unit={unit}",
             f"{nx} {ny}", "255"]
    for iy in range(ny):
        lines.append(" ".join(str(v) for v in pix[iy]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def layer_to_pgm(field_t: TemperatureField, grid: VoxelGrid,
                 layer_index: int, path, ambient_c: float) -> None:
    """Per-layer heatmap: per-(y,x) max over the layer's slabs."""
    slabs = grid.layer_slabs(layer_index)
    if len(slabs) == 0:
        raise ValueError(f"layer {layer_index} has no slabs")
    plane = field_t.values[slabs].max(axis=0)
    plane_to_pgm(plane, path, floor=ambient_c, unit="C")
