"""Simplified power-delivery-network analysis.

One resistive plane per device layer (sheet-resistance lateral grid),
vertical uC4+TSV resistors between adjacent planes wherever the lower die
carries TSVs, package supply through C4+package resistance under the
bottom die. Nodal analysis reuses the thermal module's SPD solver.
Droop is a first-order closed-form surrogate, not a transient circuit
simulation.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .power import PowerMap
from .solver import SolveOptions, _solve_linear
from .stack import StackConfig


class PdnConfigError(ValueError):
    def __init__(self, message: str, nodes=()):
        super().__init__(message)
        self.nodes = tuple(nodes)


@dataclass(frozen=True)
class PdnParams:
    nx: int = 16
    ny: int = 8
    vdd: float = 1.0
    sheet_ohm_sq: float = 0.02
    r_c4: float = 0.005
    r_uc4: float = 0.015
    r_tsv: float = 0.020
    r_pkg: float = 0.001
    decap_per_node: float = 1e-9     # F
    l_loop_proxy: float = 1e-12      # H

    def __post_init__(self):
        for name in ("sheet_ohm_sq", "r_c4", "r_uc4", "r_tsv", "vdd",
                     "decap_per_node", "l_loop_proxy"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.r_pkg < 0:
            raise ValueError("r_pkg must be >= 0")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("node grid must be at least 1x1")


@dataclass(frozen=True)
class PdnGrid:
    """Node index = (plane * ny + y) * nx + x; plane 0 is the bottom
    device layer (package side)."""

    n_planes: int
    nx: int
    ny: int
    G: sp.csr_matrix = field(repr=False)     # SPD nodal conductance, S
    supply_g: np.ndarray = field(repr=False)  # (n,) conductance to Vdd rail
    params: PdnParams = field(repr=False)
    config: StackConfig = field(repr=False)

    @property
    def n(self) -> int:
        return self.n_planes * self.ny * self.nx

    def node_index(self, plane: int, y: int, x: int) -> int:
        return (plane * self.ny + y) * self.nx + x


def build_pdn(config: StackConfig, params: PdnParams = PdnParams()) -> PdnGrid:
    """Assemble the nodal conductance matrix and verify that every node
    has a resistive path to the supply."""
    device = config.device_layers
    if not device:
        raise PdnConfigError("stack has no device layers")
    n_planes = len(device)
    nx, ny = params.nx, params.ny
    n = n_planes * ny * nx
    idx = np.arange(n).reshape(n_planes, ny, nx)

    rows, cols, vals = [], [], []

    def add(i_idx, j_idx, g):
        i = i_idx.reshape(-1)
        j = j_idx.reshape(-1)
        gg = np.broadcast_to(g, i.shape).reshape(-1)
        rows.extend([i, j])
        cols.extend([j, i])
        vals.extend([-gg, -gg])

    # Lateral sheet resistors; cell aspect ratio sets squares per segment.
    pitch_x = config.die_width_mm / nx
    pitch_y = config.die_length_mm / ny
    g_x = 1.0 / (params.sheet_ohm_sq * pitch_x / pitch_y)
    g_y = 1.0 / (params.sheet_ohm_sq * pitch_y / pitch_x)
    if nx > 1:
        add(idx[:, :, :-1], idx[:, :, 1:], g_x)
    if ny > 1:
        add(idx[:, :-1, :], idx[:, 1:, :], g_y)

    # Vertical uC4+TSV resistors where the lower die has TSVs.
    g_vert = 1.0 / (params.r_uc4 + params.r_tsv)
    for p in range(n_planes - 1):
        if device[p].has_tsvs:
            add(idx[p], idx[p + 1], g_vert)

    # Package supply under the bottom die, every node.
    supply_g = np.zeros(n)
    supply_g[idx[0].reshape(-1)] = 1.0 / (params.r_c4 + params.r_pkg)

    if rows:
        r = np.concatenate(rows)
        c = np.concatenate(cols)
        v = np.concatenate(vals)
        off = sp.coo_matrix((v, (r, c)), shape=(n, n)).tocsr()
    else:
        off = sp.csr_matrix((n, n))
    diag = -np.asarray(off.sum(axis=1)).reshape(-1) + supply_g
    G = (off + sp.diags(diag)).tocsr()

    _check_connected(off, supply_g, n_planes, ny, nx)
    return PdnGrid(n_planes=n_planes, nx=nx, ny=ny, G=G,
                   supply_g=supply_g, params=params, config=config)


def _check_connected(off: sp.csr_matrix, supply_g: np.ndarray,
                     n_planes: int, ny: int, nx: int) -> None:
    n = off.shape[0]
    seen = supply_g > 0
    queue = deque(np.nonzero(seen)[0].tolist())
    indptr, indices = off.indptr, off.indices
    while queue:
        i = queue.popleft()
        for jj in range(indptr[i], indptr[i + 1]):
            j = indices[jj]
            if not seen[j]:
                seen[j] = True
                queue.append(j)
    if not seen.all():
        bad = np.nonzero(~seen)[0]
        coords = [(int(b) // (ny * nx), (int(b) // nx) % ny, int(b) % nx)
                  for b in bad]
        raise PdnConfigError(
            f"{len(bad)} PDN nodes have no path to the supply", nodes=coords)


def currents_from_power(pmap: PowerMap, pdn: PdnGrid, t: float) -> np.ndarray:
    """Per-node current draw (n_planes, ny, nx), A: tile power / Vdd,
    spread uniformly over the nodes whose cells overlap the tile."""
    from .power import _overlap_weights
    config = pdn.config
    params = pdn.params
    out = np.zeros((pdn.n_planes, pdn.ny, pdn.nx))
    w_m = config.die_width_mm * 1e-3
    l_m = config.die_length_mm * 1e-3
    cell_area = (w_m / pdn.nx) * (l_m / pdn.ny)
    for ordinal, layer_index in enumerate(config.device_layer_indices):
        layer = config.layers[layer_index]
        dens = pmap.densities(ordinal, t) * 1e4  # W/m^2
        if not dens.any():
            continue
        wx = _overlap_weights(pdn.nx, w_m / pdn.nx, layer.tile_cols, w_m)
        wy = _overlap_weights(pdn.ny, l_m / pdn.ny, layer.tile_rows, l_m)
        areal = wy @ dens @ wx.T                 # W/m^2 at node cells
        out[ordinal] = areal * cell_area / params.vdd
    return out


def solve_ir_drop(pdn: PdnGrid, currents: np.ndarray,
                  options: SolveOptions = SolveOptions()) -> np.ndarray:
    """Static drop Vdd - v per node, shape (n_planes, ny, nx)."""
    i_draw = np.asarray(currents).reshape(-1)
    if i_draw.shape[0] != pdn.n:
        raise ValueError("current map size does not match PDN")
    if (i_draw < 0).any():
        raise ValueError("currents must be >= 0")
    b = pdn.supply_g * pdn.params.vdd - i_draw
    x0 = np.full(pdn.n, pdn.params.vdd)
    v = _solve_linear(pdn.G, b, x0, options)
    return (pdn.params.vdd - v).reshape(pdn.n_planes, pdn.ny, pdn.nx)


def worst_case_droop(pdn: PdnGrid, currents_before: np.ndarray,
                     currents_after: np.ndarray,
                     options: SolveOptions = SolveOptions()) -> np.ndarray:
    """Per-plane peak transient droop, V: static drop after the step plus
    a sqrt(L/C) surge term on nodes whose draw increased."""
    drop_after = solve_ir_drop(pdn, currents_after, options)
    delta = np.asarray(currents_after) - np.asarray(currents_before)
    surge = np.maximum(delta, 0.0) * np.sqrt(
        pdn.params.l_loop_proxy / pdn.params.decap_per_node)
    droop = drop_after + surge.reshape(drop_after.shape)
    return droop.reshape(pdn.n_planes, -1).max(axis=1)


def coupling_report(pdn: PdnGrid, aggressor_plane: int, step: float,
                    options: SolveOptions = SolveOptions()) -> np.ndarray:
    """Max induced drop per victim plane for a uniform current step
    (A per node) on the aggressor plane; pure superposition."""
    if not 0 <= aggressor_plane < pdn.n_planes:
        raise ValueError(f"aggressor plane {aggressor_plane} out of range")
    if step < 0:
        raise ValueError("step must be >= 0")
    delta = np.zeros((pdn.n_planes, pdn.ny, pdn.nx))
    delta[aggressor_plane] = step
    # Delta-current solve: drop contribution is linear, so solve G v = -dI
    # and read the induced drop directly.
    b = -delta.reshape(-1)
    v = _solve_linear(pdn.G, b, np.zeros(pdn.n), options) if step > 0 \
        else np.zeros(pdn.n)
    induced = (-v).reshape(pdn.n_planes, pdn.ny, pdn.nx)
    return induced.reshape(pdn.n_planes, -1).max(axis=1)
