import numpy as np
import pytest

from stackemu.materials import Material, SILICON
from stackemu.stack import LayerRole, LayerSpec, StackConfig, discretize


@pytest.fixture
def single_layer_stack():
    """One 500 um silicon S0 die, no interface slabs."""
    layers = (LayerSpec(LayerRole.S0, 500.0, SILICON),)
    return StackConfig(die_width_mm=2.0, die_length_mm=2.0, layers=layers)


def column_stack(k=100.0, vhc=1.6e6, thickness_um=400.0, ambient=25.0,
                 h=500.0, package_resistance=1.0e-2):
    """Laterally uniform single-material stack for 1D-style checks."""
    mat = Material("col", k=k, volumetric_heat_capacity=vhc)
    layers = (LayerSpec(LayerRole.S0, thickness_um, mat),)
    return StackConfig(die_width_mm=1.0, die_length_mm=1.0, layers=layers,
                       ambient_c=ambient, heat_sink_h=h,
                       package_resistance=package_resistance)


def random_stack(rng: np.random.Generator, max_unknowns=1000):
    """Random small multi-layer stack plus grid for oracle comparisons."""
    from stackemu.stack import preset_stack

    n_layers = int(rng.integers(2, 5))
    cfg = preset_stack(n_layers)
    n_slabs = len(cfg.layers)
    while True:
        nx = int(rng.integers(2, 8))
        ny = int(rng.integers(2, 6))
        sub = int(rng.integers(1, 3))
        if nx * ny * n_slabs * sub <= max_unknowns:
            break
    grid = discretize(cfg, nx, ny, sub)
    return cfg, grid


def random_power_map(rng: np.random.Generator, cfg):
    from stackemu.power import Constant, PowerMap

    pmap = PowerMap.zeros(cfg)
    for layer in range(pmap.n_device_layers):
        rows, cols = pmap.tile_shape(layer)
        for _ in range(int(rng.integers(1, 5))):
            r = int(rng.integers(0, rows))
            c = int(rng.integers(0, cols))
            pmap = pmap.set_tile_power(layer, r, c,
                                       Constant(float(rng.uniform(0, 20))))
    return pmap
