#!/usr/bin/env python3
"""Steady-state demo on the 4-layer preset: uniform power on every
device layer, then a per-layer temperature table showing the
distance-from-heat-sink ordering."""

import argparse

from stackemu.power import Constant, PowerMap, power_density_field, total_power
from stackemu.solver import SolveOptions, assemble, layer_summary, solve_steady
from stackemu.stack import discretize, preset_stack


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--power", type=float, default=10.0,
                    help="areal power density per device layer, W/cm^2")
    ap.add_argument("--nx", type=int, default=32)
    ap.add_argument("--ny", type=int, default=16)
    args = ap.parse_args()

    cfg = preset_stack(4)
    pmap = PowerMap.zeros(cfg)
    for ordinal in range(len(cfg.device_layer_indices)):
        pmap = pmap.set_uniform(ordinal, Constant(args.power))

    grid = discretize(cfg, args.nx, args.ny, 1)
    system = assemble(grid, cfg)
    field = solve_steady(system, power_density_field(pmap, grid, 0.0),
                         SolveOptions(tolerance=1e-10))

    print(f"total power: {total_power(pmap, cfg, 0.0):.2f} W, "
          f"ambient {cfg.ambient_c} C")
    print(f"{'layer':>5} {'role':<22} {'mean C':>8} {'max C':>8}")
    for s in layer_summary(field, grid):
        print(f"{s.layer_index:>5} {s.role:<22} {s.mean:>8.2f} {s.max:>8.2f}")


if __name__ == "__main__":
    main()
