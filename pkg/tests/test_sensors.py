import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stackemu.sensors import (SensorNetwork, SensorSpec, UNOBSERVED,
                              hotspot_error, place_sensors_greedy,
                              placement_objective, quantize, read_sensors,
                              reconstruct_field, tile_center_candidates)
from stackemu.solver import TemperatureField
from stackemu.stack import discretize, preset_stack


@pytest.fixture
def grid():
    return discretize(preset_stack(2), 16, 8, 1)


def gaussian_field(grid, layer_ordinal, cx_mm, cy_mm, peak, sigma_mm=1.0,
                   base=25.0):
    """Synthetic field: Gaussian bump on one device layer, flat elsewhere."""
    values = np.full(grid.shape, base)
    x = grid.x_centers_m() * 1e3
    y = grid.y_centers_m() * 1e3
    bump = peak * np.exp(-((x[None, :] - cx_mm) ** 2
                           + (y[:, None] - cy_mm) ** 2) / (2 * sigma_mm**2))
    layer_index = grid.config.device_layer_indices[layer_ordinal]
    for iz in grid.layer_slabs(layer_index):
        values[iz] += bump
    return TemperatureField(values=values, grid=grid)


def test_quantize_rounding():
    assert quantize(30.12, 0.25) == pytest.approx(30.00)
    assert quantize(30.13, 0.25) == pytest.approx(30.25)
    assert quantize(30.125, 0.25) == pytest.approx(30.25)   # tie away from 0
    assert quantize(-30.125, 0.25) == pytest.approx(-30.25)
    assert quantize(7.3, 0.0) == 7.3


def test_noiseless_reading_is_voxel_temperature(grid):
    field = gaussian_field(grid, 0, 6.0, 3.0, 20.0)
    sensor = SensorSpec(layer=0, x_mm=6.0, y_mm=3.0, noise_sigma=0.0,
                        quantization_step=0.0)
    net = SensorNetwork(sensors=(sensor,))
    [reading] = read_sensors(net, field, grid, t=0.0)
    iz = grid.layer_slabs(grid.config.device_layer_indices[0])[0]
    ix = min(int(6.0e-3 / grid.dx_m), grid.nx - 1)
    iy = min(int(3.0e-3 / grid.dy_m), grid.ny - 1)
    assert reading == field.values[iz, iy, ix]


def test_quantization_applied(grid):
    field = gaussian_field(grid, 0, 0.0, 0.0, 0.0, base=30.12)
    sensor = SensorSpec(layer=0, x_mm=1.0, y_mm=1.0, noise_sigma=0.0,
                        quantization_step=0.25)
    net = SensorNetwork(sensors=(sensor,))
    assert read_sensors(net, field, grid, 0.0) == [30.00]


def test_readings_deterministic_per_seed_and_sample(grid):
    field = gaussian_field(grid, 0, 6.0, 3.0, 20.0)
    sensor = SensorSpec(layer=0, x_mm=6.0, y_mm=3.0, noise_sigma=1.0,
                        quantization_step=0.0, sample_period=1e-3)
    net = SensorNetwork(sensors=(sensor,), rng_seed=99)
    r1 = read_sensors(net, field, grid, 0.0015)
    r2 = read_sensors(net, field, grid, 0.0015)
    assert r1 == r2
    # different sample index -> (almost surely) different noise draw
    r3 = read_sensors(net, field, grid, 0.0025)
    assert r1 != r3
    # different seed -> different reading
    net2 = SensorNetwork(sensors=(sensor,), rng_seed=100)
    assert read_sensors(net2, field, grid, 0.0015) != r1


def test_duplicate_sites_rejected():
    s = SensorSpec(layer=0, x_mm=1.0, y_mm=1.0)
    with pytest.raises(ValueError, match="same site"):
        SensorNetwork(sensors=(s, s))


def test_out_of_die_site_rejected(grid):
    field = gaussian_field(grid, 0, 6.0, 3.0, 20.0)
    net = SensorNetwork(sensors=(SensorSpec(layer=0, x_mm=50.0, y_mm=1.0),))
    with pytest.raises(ValueError, match="outside"):
        read_sensors(net, field, grid, 0.0)


def test_reconstruct_unobserved_layer(grid):
    net = SensorNetwork(sensors=(SensorSpec(layer=0, x_mm=1.0, y_mm=1.0),))
    rec = reconstruct_field(net, [31.0], n_device_layers=2)
    assert rec.per_layer_max[0] == 31.0
    assert rec.per_layer_max[1] is UNOBSERVED
    assert rec.hotspot_estimate == 31.0


def test_reconstruct_underestimates_true_max(grid):
    field = gaussian_field(grid, 0, 6.0, 3.0, 20.0)
    for d in (0.0, 1.0, 2.0, 3.0):
        err = hotspot_error([(0, 6.0 + d, 3.0)], [field], grid)
        assert err[0] >= -1e-12
    # error grows with sensor offset from the hotspot
    errs = [hotspot_error([(0, 6.0 + d, 3.0)], [field], grid)[0]
            for d in (0.0, 1.5, 3.0)]
    assert errs[0] < errs[1] < errs[2]


def test_hotspot_error_empty_placement_is_unobserved(grid):
    field = gaussian_field(grid, 0, 6.0, 3.0, 20.0)
    assert hotspot_error([], [field], grid) == (UNOBSERVED, UNOBSERVED)


def test_hotspot_error_uniform_field_zero(grid):
    flat = TemperatureField(values=np.full(grid.shape, 40.0), grid=grid)
    mean_e, max_e = hotspot_error([(0, 1.0, 1.0)], [flat], grid)
    assert mean_e == 0.0 and max_e == 0.0


def test_greedy_k1_picks_candidate_nearest_hotspot(grid):
    field = gaussian_field(grid, 0, 4.5, 2.2, 25.0)
    candidates = [(0, x, 2.2) for x in (0.5, 2.0, 4.4, 7.0, 10.0)]
    chosen = place_sensors_greedy(candidates, 1, [field], grid)
    assert chosen == [(0, 4.4, 2.2)]


def test_greedy_full_candidate_set_is_floor(grid):
    fields = [gaussian_field(grid, 0, 4.0, 2.0, 25.0),
              gaussian_field(grid, 0, 9.0, 4.0, 15.0)]
    candidates = [(0, x, y) for x in (2.0, 4.0, 9.0) for y in (2.0, 4.0)]
    all_obj = placement_objective(candidates, fields, grid)
    for k in (1, 2, 3):
        chosen = place_sensors_greedy(candidates, k, fields, grid)
        assert placement_objective(chosen, fields, grid) >= all_obj - 1e-12
    full = place_sensors_greedy(candidates, len(candidates), fields, grid)
    assert placement_objective(full, fields, grid) == pytest.approx(all_obj)


def test_greedy_objective_monotone_in_k(grid):
    rng = np.random.default_rng(4)
    fields = [gaussian_field(grid, 0, rng.uniform(1, 11), rng.uniform(1, 5),
                             rng.uniform(5, 30)) for _ in range(4)]
    candidates = tile_center_candidates(grid)[:16]
    prev = np.inf
    for k in range(1, 7):
        chosen = place_sensors_greedy(candidates, k, fields, grid)
        obj = placement_objective(chosen, fields, grid)
        assert obj <= prev + 1e-12
        prev = obj


def test_greedy_within_20pct_of_exhaustive(grid):
    """Brute-force oracle over all C(12, 3) subsets."""
    rng = np.random.default_rng(8)
    fields = [gaussian_field(grid, 0, rng.uniform(1, 11), rng.uniform(1, 5),
                             rng.uniform(5, 30), sigma_mm=rng.uniform(0.5, 2))
              for _ in range(5)]
    candidates = [(0, x, y) for x in (1.0, 3.0, 5.0, 7.0, 9.0, 11.0)
                  for y in (1.5, 4.5)]
    assert len(candidates) == 12
    for k in (1, 2, 3):
        greedy = place_sensors_greedy(candidates, k, fields, grid)
        greedy_obj = placement_objective(greedy, fields, grid)
        best = min(placement_objective(list(sub), fields, grid)
                   for sub in itertools.combinations(candidates, k))
        assert greedy_obj <= 1.2 * best + 1e-12


def test_greedy_deterministic(grid):
    fields = [gaussian_field(grid, 0, 5.0, 3.0, 20.0)]
    candidates = tile_center_candidates(grid)
    a = place_sensors_greedy(candidates, 4, fields, grid)
    b = place_sensors_greedy(candidates, 4, fields, grid)
    assert a == b


def test_greedy_input_validation(grid):
    field = gaussian_field(grid, 0, 5.0, 3.0, 20.0)
    with pytest.raises(ValueError):
        place_sensors_greedy([(0, 1.0, 1.0)], 0, [field], grid)
    with pytest.raises(ValueError):
        place_sensors_greedy([(0, 1.0, 1.0)], 1, [], grid)
    with pytest.raises(ValueError):
        place_sensors_greedy([(0, 1.0, 1.0)], 2, [field], grid)


@settings(max_examples=25, deadline=None)
@given(value=st.floats(-1e4, 1e4), step=st.sampled_from([0.1, 0.25, 0.5, 1.0]))
def test_quantize_nearest_multiple(value, step):
    q = quantize(value, step)
    assert abs(q - value) <= step / 2 + 1e-9
    assert abs(q / step - round(q / step)) < 1e-6
