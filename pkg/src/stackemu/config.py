"""YAML scenario configuration: schema-validated (unknown keys rejected)
and mapped one-to-one onto the domain types. Units are fixed: um, mm,
W/(m K), W/cm^2, deg C, seconds, ohms, farads."""

from __future__ import annotations

import importlib.resources
import json
import os
from dataclasses import fields as dc_fields

import jsonschema
import yaml

from .materials import DEFAULT_MATERIALS, Material
from .pdn import PdnParams
from .power import (Constant, Periodic, PowerMap, Step, BUILTIN_PRESETS,
                    load_trace_csv)
from .reliability import ReliabilityParams
from .scenario import (CoreSwapPolicy, GridSpec, Scenario, ThrottlePolicy,
                       TransientSpec)
from .sensors import SensorNetwork, SensorSpec, tile_center_candidates
from .solver import SolveOptions
from .stack import (LayerRole, LayerSpec, StackConfig, TsvFarmSpec,
                    preset_stack)


class ConfigError(ValueError):
    pass


def _schema() -> dict:
    ref = importlib.resources.files("stackemu") / "schema" / \
        "scenario.schema.json"
    return json.loads(ref.read_text())


def validate_document(doc: dict) -> None:
    try:
        jsonschema.validate(doc, _schema())
    except jsonschema.ValidationError as e:
        path = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {path}: {e.message}")


def _material(spec) -> Material:
    if isinstance(spec, str):
        if spec not in DEFAULT_MATERIALS:
            raise ConfigError(
                f"unknown material {spec!r}; known: "
                f"{sorted(DEFAULT_MATERIALS)}")
        return DEFAULT_MATERIALS[spec]
    return Material(**spec)


def _farm(spec: dict) -> TsvFarmSpec:
    spec = dict(spec)
    spec["fill_material"] = _material(spec["fill_material"])
    if "liner_material" in spec:
        spec["liner_material"] = _material(spec["liner_material"])
    return TsvFarmSpec(**spec)


def _layer(spec: dict) -> LayerSpec:
    spec = dict(spec)
    spec["role"] = LayerRole(spec["role"]) if spec["role"] in \
        [r.value for r in LayerRole] else LayerRole[spec["role"]]
    spec["material"] = _material(spec["material"])
    spec["tsv_farms"] = tuple(_farm(f) for f in spec.get("tsv_farms", ()))
    return LayerSpec(**spec)


def _stack(spec: dict) -> StackConfig:
    spec = dict(spec)
    preset = spec.pop("preset", None)
    layers = spec.pop("layers", None)
    if (preset is None) == (layers is None):
        raise ConfigError("stack needs exactly one of 'preset' or 'layers'")
    if preset is not None:
        config = preset_stack(preset)
        overrides = {k: v for k, v in spec.items()
                     if k in ("ambient_c", "heat_sink_h",
                              "package_resistance", "die_width_mm",
                              "die_length_mm")}
        if overrides:
            from dataclasses import replace
            config = replace(config, **overrides)
        return config
    spec["layers"] = tuple(_layer(l) for l in layers)
    return StackConfig(**spec)


def _profile(spec: dict, base_dir: str):
    kind = spec["kind"]
    if kind == "constant":
        return Constant(spec.get("p", 0.0))
    if kind == "step":
        return Step(spec["p0"], spec["p1"], spec["t_switch"])
    if kind == "periodic":
        return Periodic(spec["p_low"], spec["p_high"], spec["period"],
                        spec.get("duty", 0.5))
    if kind == "trace_csv":
        return load_trace_csv(os.path.join(base_dir, spec["path"]))
    raise ConfigError(f"unknown profile kind {kind!r}")


def _power(spec: dict | None, stack: StackConfig, base_dir: str) -> PowerMap:
    pmap = PowerMap.zeros(stack)
    if not spec:
        return pmap
    for a in spec.get("assignments", ()):
        layer = a["layer"]
        if layer >= pmap.n_device_layers:
            raise ConfigError(f"assignment references device layer {layer}, "
                              f"stack has {pmap.n_device_layers}")
        keys = {"preset", "uniform", "profile"} & a.keys()
        if len(keys) != 1:
            raise ConfigError("assignment needs exactly one of "
                              "'preset', 'uniform' or 'profile'")
        if "preset" in a:
            pmap = pmap.apply_preset(layer, BUILTIN_PRESETS[a["preset"]])
        elif "uniform" in a:
            pmap = pmap.set_uniform(layer, _profile(a["uniform"], base_dir))
        else:
            if "row" not in a or "col" not in a:
                raise ConfigError("per-tile assignment needs 'row' and 'col'")
            pmap = pmap.set_tile_power(layer, a["row"], a["col"],
                                       _profile(a["profile"], base_dir))
    return pmap


def _sensors(spec: dict | None, seed: int) -> SensorNetwork | None:
    if not spec:
        return None
    kwargs = {k: spec[k] for k in ("noise_sigma", "quantization_step",
                                   "sample_period") if k in spec}
    sensors = tuple(
        SensorSpec(layer=p["layer"], x_mm=p["x_mm"], y_mm=p["y_mm"], **kwargs)
        for p in spec.get("placements", ()))
    auto = spec.get("auto_place")
    return SensorNetwork(sensors=sensors, rng_seed=seed), auto


def _from_dataclass(cls, spec: dict | None):
    if spec is None or spec == "disabled":
        return None
    names = {f.name for f in dc_fields(cls)}
    bad = set(spec) - names
    if bad:
        raise ConfigError(f"unknown keys for {cls.__name__}: {sorted(bad)}")
    return cls(**spec)


def _policy(spec):
    if spec is None or spec == "none":
        return None, 10
    period = spec.get("period_steps", 10)
    if spec["kind"] == "throttle":
        return ThrottlePolicy(trigger_t=spec["trigger_t"],
                              release_t=spec["release_t"],
                              throttle_factor=spec.get("throttle_factor",
                                                       0.5)), period
    pairing = tuple((tuple(pair[0]), tuple(pair[1]))
                    for pair in spec.get("pairing", ()))
    return CoreSwapPolicy(trigger_t=spec["trigger_t"],
                          release_t=spec["release_t"],
                          pairing=pairing), period


def scenario_from_document(doc: dict, base_dir: str = ".") -> Scenario:
    validate_document(doc)
    seed = doc.get("seed", 0)
    stack = _stack(doc["stack"])
    grid = GridSpec(nx=doc["grid"]["nx"], ny=doc["grid"]["ny"],
                    sub_slabs_per_layer=doc["grid"].get(
                        "sub_slabs_per_layer", 1))
    power = _power(doc.get("power"), stack, base_dir)
    sensors_auto = _sensors(doc.get("sensors"), seed)
    sensors = auto = None
    if sensors_auto is not None:
        sensors, auto = sensors_auto

    transient = doc.get("transient")
    if transient == "steady-only":
        transient = None
    if transient is not None:
        transient = TransientSpec(**transient)

    policy, period = _policy(doc.get("policy"))

    scenario = Scenario(
        name=doc["name"],
        stack=stack,
        power=power,
        grid=grid,
        sensors=sensors,
        pdn=_from_dataclass(PdnParams, doc.get("pdn")),
        reliability=_from_dataclass(ReliabilityParams,
                                    doc.get("reliability")),
        solve=_from_dataclass(SolveOptions, doc.get("solve"))
        or SolveOptions(),
        transient=transient,
        policy=policy,
        policy_period=period,
        seed=seed)
    if auto:
        scenario = _auto_place(scenario, auto["k"], doc.get("sensors", {}))
    return scenario


def _auto_place(scenario: Scenario, k: int, sensor_spec: dict) -> Scenario:
    """Greedy-place k sensors on tile centers, trained on the scenario's
    own steady field."""
    from dataclasses import replace

    from .sensors import place_sensors_greedy
    from .solver import assemble, solve_steady
    from .power import power_density_field
    from .stack import discretize

    grid = discretize(scenario.stack, scenario.grid.nx, scenario.grid.ny,
                      scenario.grid.sub_slabs_per_layer)
    system = assemble(grid, scenario.stack)
    steady = solve_steady(system, power_density_field(scenario.power, grid,
                                                      0.0), scenario.solve)
    candidates = tile_center_candidates(grid)
    chosen = place_sensors_greedy(candidates, k, [steady], grid)
    kwargs = {kk: sensor_spec[kk] for kk in
              ("noise_sigma", "quantization_step", "sample_period")
              if kk in sensor_spec}
    sensors = tuple(SensorSpec(layer=l, x_mm=x, y_mm=y, **kwargs)
                    for l, x, y in chosen)
    network = SensorNetwork(sensors=sensors,
                            candidate_sites=tuple(candidates),
                            rng_seed=scenario.seed)
    return replace(scenario, sensors=network)


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return scenario_from_document(doc, base_dir=os.path.dirname(
        os.path.abspath(path)))
