"""Scenario runner: stack build -> power map -> solves -> sensors ->
PDN -> reliability, with run-time thermal-management policies in the
transient loop and deterministic, machine-diffable reports.

Policies act on sensor readings, never on ground-truth voxel
temperatures, so placement quality is visible in management outcomes.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .fields_io import field_to_csv, layer_to_pgm, plane_to_pgm
from .pdn import (PdnGrid, PdnParams, build_pdn, currents_from_power,
                  solve_ir_drop, worst_case_droop)
from .power import PowerMap, power_density_field, total_power
from .reliability import (ReliabilityParams, ReliabilityReport,
                          reliability_report)
from .sensors import (SensorNetwork, hotspot_error, placement_to_csv,
                      read_sensors)
from .solver import (LayerStats, SolveOptions, TemperatureField, assemble,
                     layer_summary, solve_steady, step_transient)
from .stack import StackConfig, discretize, validate_stack


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"scenario failed in stage {stage!r}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class ThrottlePolicy:
    trigger_t: float
    release_t: float
    throttle_factor: float

    def __post_init__(self):
        if not self.release_t < self.trigger_t:
            raise ValueError("release_T must be below trigger_T (hysteresis)")
        if not 0.0 < self.throttle_factor < 1.0:
            raise ValueError("throttle_factor must be in (0, 1)")


@dataclass(frozen=True)
class CoreSwapPolicy:
    trigger_t: float
    release_t: float
    # pairs of (device layer, row, col) tiles whose profiles get swapped
    pairing: tuple[tuple[tuple[int, int, int], tuple[int, int, int]], ...]

    def __post_init__(self):
        if not self.release_t < self.trigger_t:
            raise ValueError("release_T must be below trigger_T (hysteresis)")
        tiles = [t for pair in self.pairing for t in pair]
        if len(set(tiles)) != len(tiles):
            raise ValueError("swap pairs must be disjoint")


@dataclass(frozen=True)
class TransientSpec:
    t_end: float
    dt: float
    sample_stride: int = 1

    def __post_init__(self):
        if self.t_end <= 0 or self.dt <= 0:
            raise ValueError("t_end and dt must be positive")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")


@dataclass(frozen=True)
class GridSpec:
    nx: int = 32
    ny: int = 16
    sub_slabs_per_layer: int = 1


@dataclass(frozen=True)
class Scenario:
    name: str
    stack: StackConfig
    power: PowerMap
    grid: GridSpec = GridSpec()
    sensors: SensorNetwork | None = None
    pdn: PdnParams | None = None
    reliability: ReliabilityParams | None = None
    solve: SolveOptions = SolveOptions()
    transient: TransientSpec | None = None
    policy: ThrottlePolicy | CoreSwapPolicy | None = None
    policy_period: int = 10   # transient steps between policy evaluations
    seed: int = 0


@dataclass(frozen=True)
class PolicyEvent:
    t: float
    action: str          # "throttle" / "release" / "swap" / "swap_back"
    layer: int           # device ordinal (-1 for global coreswap events)
    sensor_index: int
    reading: float


@dataclass(frozen=True)
class PdnSummary:
    max_drop_per_plane: tuple[float, ...]
    droop_per_plane: tuple[float, ...]
    drop_map: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class ScenarioReport:
    scenario: Scenario = field(repr=False)
    steady_stats: tuple[LayerStats, ...]
    final_stats: tuple[LayerStats, ...] | None
    steady_field: TemperatureField = field(repr=False)
    final_field: TemperatureField | None = field(repr=False)
    sampled_fields: tuple[TemperatureField, ...] = field(repr=False)
    layer_traces: dict[int, list[float]] = field(repr=False)
    sensor_readings: list[float] | None
    sensor_hotspot_error: tuple[float | None, float | None] | None
    pdn_summary: PdnSummary | None
    reliability: ReliabilityReport | None
    events: tuple[PolicyEvent, ...]
    total_power_w: float
    config_hash: str
    seed: int


def scenario_hash(scenario: Scenario) -> str:
    return hashlib.sha256(repr(scenario).encode()).hexdigest()[:16]


def _layer_readings(network: SensorNetwork, readings: list[float]):
    """Max reading per device ordinal with the argmax sensor index."""
    per_layer: dict[int, tuple[float, int]] = {}
    for i, (sensor, r) in enumerate(zip(network.sensors, readings)):
        cur = per_layer.get(sensor.layer)
        if cur is None or r > cur[0]:
            per_layer[sensor.layer] = (r, i)
    return per_layer


class _PolicyState:
    """Hysteresis state machine evaluated on sensor readings."""

    def __init__(self, policy, base_map: PowerMap):
        self.policy = policy
        self.base_map = base_map
        self.throttled: set[int] = set()
        self.swapped = False
        self.events: list[PolicyEvent] = []

    def effective_map(self) -> PowerMap:
        pmap = self.base_map
        if isinstance(self.policy, ThrottlePolicy) and self.throttled:
            pmap = pmap.scaled({layer: self.policy.throttle_factor
                                for layer in self.throttled})
        elif isinstance(self.policy, CoreSwapPolicy) and self.swapped:
            for a, b in self.policy.pairing:
                pa = pmap.profile(*a)
                pb = pmap.profile(*b)
                pmap = pmap.set_tile_power(*a, pb).set_tile_power(*b, pa)
        return pmap

    def evaluate(self, t: float, network: SensorNetwork,
                 readings: list[float]):
        p = self.policy
        if isinstance(p, ThrottlePolicy):
            for layer, (reading, s_idx) in sorted(
                    _layer_readings(network, readings).items()):
                if layer not in self.throttled and reading >= p.trigger_t:
                    self.throttled.add(layer)
                    self.events.append(PolicyEvent(t, "throttle", layer,
                                                   s_idx, reading))
                elif layer in self.throttled and reading < p.release_t:
                    self.throttled.discard(layer)
                    self.events.append(PolicyEvent(t, "release", layer,
                                                   s_idx, reading))
        elif isinstance(p, CoreSwapPolicy):
            s_idx = int(np.argmax(readings))
            reading = readings[s_idx]
            if not self.swapped and reading >= p.trigger_t:
                self.swapped = True
                self.events.append(PolicyEvent(t, "swap", -1, s_idx, reading))
            elif self.swapped and reading < p.release_t:
                self.swapped = False
                self.events.append(PolicyEvent(t, "swap_back", -1, s_idx,
                                               reading))


def run_scenario(scenario: Scenario) -> ScenarioReport:
    try:
        violations = validate_stack(scenario.stack)
        if violations:
            raise ValueError(f"invalid stack: {violations}")
        grid = discretize(scenario.stack, scenario.grid.nx, scenario.grid.ny,
                          scenario.grid.sub_slabs_per_layer)
    except Exception as e:
        raise StageError("stack", e)

    try:
        system = assemble(grid, scenario.stack)
        source0 = power_density_field(scenario.power, grid, 0.0)
        steady = solve_steady(system, source0, scenario.solve)
        steady_stats = tuple(layer_summary(steady, grid))
    except Exception as e:
        raise StageError("steady-solve", e)

    # The scenario seed governs all stochastic behavior, including sensor noise.
    network = scenario.sensors
    if network is not None:
        network = SensorNetwork(sensors=network.sensors,
                                candidate_sites=network.candidate_sites,
                                rng_seed=scenario.seed)

    final_field = None
    final_stats = None
    sampled: list[TemperatureField] = []
    layer_traces: dict[int, list[float]] = {
        idx: [] for idx in grid.device_layer_indices}
    events: tuple[PolicyEvent, ...] = ()

    if scenario.transient is not None:
        try:
            tr = scenario.transient
            state = _PolicyState(scenario.policy, scenario.power) \
                if scenario.policy is not None else None
            if state is not None and network is None:
                raise ValueError("a DTM policy requires a sensor network")
            field_t = TemperatureField(
                values=np.full(grid.shape, scenario.stack.ambient_c),
                grid=grid, time=0.0)
            n_steps = int(np.ceil(tr.t_end / tr.dt))
            t = 0.0
            for step in range(n_steps):
                if state is not None and step % scenario.policy_period == 0:
                    readings = read_sensors(network, field_t, grid, t)
                    state.evaluate(t, network, readings)
                pmap = state.effective_map() if state is not None \
                    else scenario.power
                source = power_density_field(pmap, grid, t)
                field_t = step_transient(system, field_t, source, tr.dt,
                                         scenario.solve)
                t = field_t.time
                for stats in layer_summary(field_t, grid):
                    layer_traces[stats.layer_index].append(stats.max)
                if (step + 1) % tr.sample_stride == 0 or step == n_steps - 1:
                    sampled.append(field_t)
            final_field = field_t
            final_stats = tuple(layer_summary(final_field, grid))
            if state is not None:
                events = tuple(state.events)
        except StageError:
            raise
        except Exception as e:
            raise StageError("transient", e)

    readings = None
    hs_error = None
    if network is not None:
        try:
            observe_field = final_field if final_field is not None else steady
            t_read = observe_field.time or 0.0
            readings = read_sensors(network, observe_field, grid, t_read)
            eval_fields = list(sampled) if sampled else [steady]
            placement = [s.site for s in network.sensors]
            hs_error = hotspot_error(placement, eval_fields, grid)
        except Exception as e:
            raise StageError("sensors", e)

    pdn_summary = None
    if scenario.pdn is not None:
        try:
            pdn = build_pdn(scenario.stack, scenario.pdn)
            currents = currents_from_power(scenario.power, pdn, 0.0)
            drop = solve_ir_drop(pdn, currents, scenario.solve)
            idle = np.zeros_like(currents)
            droop = worst_case_droop(pdn, idle, currents, scenario.solve)
            pdn_summary = PdnSummary(
                max_drop_per_plane=tuple(
                    float(v) for v in drop.reshape(pdn.n_planes, -1).max(1)),
                droop_per_plane=tuple(float(v) for v in droop),
                drop_map=drop)
        except Exception as e:
            raise StageError("pdn", e)

    rel = None
    if scenario.reliability is not None:
        try:
            traces = {idx: tr for idx, tr in layer_traces.items() if tr}
            rel = reliability_report(list(steady_stats), traces, steady,
                                     grid, scenario.stack,
                                     scenario.reliability)
        except Exception as e:
            raise StageError("reliability", e)

    return ScenarioReport(
        scenario=scenario,
        steady_stats=steady_stats,
        final_stats=final_stats,
        steady_field=steady,
        final_field=final_field,
        sampled_fields=tuple(sampled),
        layer_traces=layer_traces,
        sensor_readings=readings,
        sensor_hotspot_error=hs_error,
        pdn_summary=pdn_summary,
        reliability=rel,
        events=events,
        total_power_w=total_power(scenario.power, scenario.stack, 0.0),
        config_hash=scenario_hash(scenario),
        seed=scenario.seed)


def _fmt(x: float) -> str:
    return repr(float(x))


def render_report(report: ScenarioReport) -> str:
    """Deterministic text report; byte-identical for identical
    (scenario, seed). Section order is stable."""
    lines = []
    lines.append("== provenance ==")
    lines.append(f"scenario: {report.scenario.name}")
    lines.append(f"config_hash: {report.config_hash}")
    lines.append(f"seed: {report.seed}")
    lines.append(f"version: {__version__}")
    lines.append("")
    lines.append("== power ==")
    lines.append(f"total_power_w: {_fmt(report.total_power_w)}")
    lines.append("")
    lines.append("== steady state ==")
    for s in report.steady_stats:
        lines.append(f"layer {s.layer_index} ({s.role}): "
                     f"mean={_fmt(s.mean)} max={_fmt(s.max)} "
                     f"min={_fmt(s.min)} hotspot={s.hotspot}")
    if report.final_stats is not None:
        lines.append("")
        lines.append("== transient final ==")
        for s in report.final_stats:
            lines.append(f"layer {s.layer_index} ({s.role}): "
                         f"mean={_fmt(s.mean)} max={_fmt(s.max)} "
                         f"min={_fmt(s.min)} hotspot={s.hotspot}")
    if report.sensor_readings is not None:
        lines.append("")
        lines.append("== sensors ==")
        net = report.scenario.sensors
        for sensor, r in zip(net.sensors, report.sensor_readings):
            lines.append(f"sensor layer={sensor.layer} "
                         f"x={_fmt(sensor.x_mm)} y={_fmt(sensor.y_mm)}: "
                         f"{_fmt(r)}")
        mean_e, max_e = report.sensor_hotspot_error
        if mean_e is None:
            lines.append("hotspot_error: unobserved")
        else:
            lines.append(f"hotspot_error: mean={_fmt(mean_e)} "
                         f"max={_fmt(max_e)}")
    if report.pdn_summary is not None:
        lines.append("")
        lines.append("== pdn ==")
        for p, (drop, droop) in enumerate(zip(
                report.pdn_summary.max_drop_per_plane,
                report.pdn_summary.droop_per_plane)):
            lines.append(f"plane {p}: max_drop_v={_fmt(drop)} "
                         f"droop_v={_fmt(droop)}")
    if report.reliability is not None:
        lines.append("")
        lines.append("== reliability ==")
        for lr in report.reliability.layers:
            lines.append(f"layer {lr.layer_index} ({lr.role}): "
                         f"max_t_c={_fmt(lr.max_t_c)} em_af={_fmt(lr.em_af)} "
                         f"cycling_damage={_fmt(lr.cycling_damage)}")
        lines.append(
            f"min_mttf_layer: {report.reliability.min_mttf_layer}")
        lines.append(
            f"stress_hotspots: {len(report.reliability.stress_hotspots)}")
        for h in report.reliability.stress_hotspots[:10]:
            lines.append(f"  voxel={h.voxel} score={_fmt(h.score)}")
    lines.append("")
    lines.append("== policy events ==")
    if not report.events:
        lines.append("(none)")
    for e in report.events:
        lines.append(f"t={_fmt(e.t)} action={e.action} layer={e.layer} "
                     f"sensor={e.sensor_index} reading={_fmt(e.reading)}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ComparisonRow:
    name: str
    per_layer_max: tuple[float, ...]
    max_pdn_drop: float | None
    min_mttf_layer: int | None


def compare_scenarios(scenarios: list[Scenario]) -> list[ComparisonRow]:
    """Run every scenario and return aligned rows sorted by name."""
    if len(scenarios) < 2:
        raise ValueError("need at least two scenarios to compare")
    rows = []
    for sc in scenarios:
        rep = run_scenario(sc)
        pdn_max = None
        if rep.pdn_summary is not None:
            pdn_max = max(rep.pdn_summary.max_drop_per_plane)
        mttf = rep.reliability.min_mttf_layer if rep.reliability else None
        rows.append(ComparisonRow(
            name=sc.name,
            per_layer_max=tuple(s.max for s in rep.steady_stats),
            max_pdn_drop=pdn_max,
            min_mttf_layer=mttf))
    return sorted(rows, key=lambda r: r.name)


def render_comparison(rows: list[ComparisonRow]) -> str:
    lines = ["scenario\tper_layer_max_c\tmax_pdn_drop_v\tmin_mttf_layer"]
    for r in rows:
        temps = ",".join(_fmt(t) for t in r.per_layer_max)
        drop = _fmt(r.max_pdn_drop) if r.max_pdn_drop is not None else "-"
        mttf = str(r.min_mttf_layer) if r.min_mttf_layer is not None else "-"
        lines.append(f"{r.name}\t{temps}\t{drop}\t{mttf}")
    return "\n".join(lines) + "\n"


class ExportError(OSError):
    pass


def export(report: ScenarioReport, fmt: str, prefix: str,
           force: bool = False) -> list[str]:
    """Write report artifacts with the given path prefix; refuses to
    overwrite existing files unless force is set. Returns written paths."""
    import os

    grid = report.steady_field.grid
    ambient = report.scenario.stack.ambient_c
    targets: list[tuple[str, callable]] = []

    if fmt == "text":
        targets.append((f"{prefix}_report.txt",
                        lambda p: _write_text(p, render_report(report))))
    elif fmt == "csv":
        targets.append((f"{prefix}_steady_field.csv",
                        lambda p: field_to_csv(report.steady_field, p)))
        if report.final_field is not None:
            targets.append((f"{prefix}_final_field.csv",
                            lambda p: field_to_csv(report.final_field, p)))
        if report.scenario.sensors is not None:
            placement = [s.site for s in report.scenario.sensors.sensors]
            targets.append((f"{prefix}_sensors.csv",
                            lambda p: placement_to_csv(placement, p)))
        if report.reliability is not None:
            targets.append((f"{prefix}_stress_hotspots.csv",
                            lambda p: _stress_csv(report, p)))
    elif fmt == "pgm":
        for layer_index in grid.device_layer_indices:
            targets.append((
                f"{prefix}_steady_L{layer_index}.pgm",
                lambda p, li=layer_index: layer_to_pgm(
                    report.steady_field, grid, li, p, ambient)))
        if report.pdn_summary is not None:
            for plane in range(report.pdn_summary.drop_map.shape[0]):
                targets.append((
                    f"{prefix}_pdn_drop_P{plane}.pgm",
                    lambda p, pl=plane: plane_to_pgm(
                        report.pdn_summary.drop_map[pl] * 1e3, p,
                        floor=0.0, unit="mV")))
    else:
        raise ValueError(f"unknown export format {fmt!r}")

    for path, _ in targets:
        if os.path.exists(path) and not force:
            raise ExportError(f"refusing to overwrite {path} without force")
    written = []
    for path, writer in targets:
        try:
            writer(path)
        except OSError as e:
            raise ExportError(f"failed writing {path}: {e}")
        written.append(path)
    return written


def _write_text(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def _stress_csv(report: ScenarioReport, path):
    import csv as _csv
    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["z", "y", "x", "score"])
        for h in report.reliability.stress_hotspots:
            writer.writerow([*h.voxel, repr(h.score)])
