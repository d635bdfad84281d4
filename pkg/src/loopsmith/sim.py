"""Desk-scale autonomic supervisor: plant, event manager, reconfiguration loop.

The plant is an explicit-Euler tank mass balance; the supervisor runs the
active control loop each step (estimate, decide, actuate) and, on a device
failure, replays the reasoning pipeline (translate, traverse, configure,
compose) over the updated knowledge base and swaps in the new loop.

Estimator numerics are keyed by estimator name: tank_mass integrates the
measured or estimated in/out flows, junction_mass and demand_mass solve the
node mass balance, link_energy maps a head difference to a flow through a
linear coefficient.  Sensor readings are synthesized noiselessly from the
plant truth, so every estimation tree tracks the true level exactly; the
acceptance suite pins that consistency at 1e-9.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from .configure import ControlLoopConfig, configure
from .diagnostics import LangError
from .domain import IndustrialDomain, Repository
from .estimation import (
    EstimationTree,
    EstimatorNode,
    SensingNode,
    StateEstimationGraph,
    StateNode,
    translate,
    traverse,
)
from .interp import SessionEnv, run_source
from .process import ProcessGraph, remove_device


class Signal(Enum):
    ON = "ON"
    OFF = "OFF"
    HOLD = "Hold"


@dataclass(frozen=True)
class PlantState:
    """Tank level plus the flows of the interval just integrated."""

    tank_level: float
    inflow: float = 0.0
    outflow: float = 0.0
    pump_on: bool = False
    time: int = 0


def plant_step(
    s: PlantState,
    demand: float,
    dt: float,
    area: float = 1.0,
    pump_rate: float = 2.0,
    capacity: float = 3.0,
) -> PlantState:
    """One Euler step of the tank mass balance, clamped to [0, capacity]."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if demand < 0 or pump_rate < 0:
        raise ValueError("flows must be nonnegative")
    inflow = pump_rate if s.pump_on else 0.0
    outflow = demand
    level = s.tank_level + dt * (inflow - outflow) / area
    level = min(max(level, 0.0), capacity)
    return PlantState(level, inflow, outflow, s.pump_on, s.time + 1)


def control_decision(level_estimate: float, low: float, high: float) -> Signal:
    """Bang-bang thresholding of the estimated level."""
    if low >= high:
        raise ValueError("low threshold must be below high threshold")
    if level_estimate < low:
        return Signal.ON
    if level_estimate > high:
        return Signal.OFF
    return Signal.HOLD


class SensorUnavailable(Exception):
    def __init__(self, sensor: str):
        self.sensor = sensor
        super().__init__(f"sensing point {sensor} is unavailable")


_INTEGRATORS = {"tank_mass"}
_MASS_BALANCE = {"junction_mass", "demand_mass"}
_HEAD_DIFFERENCE = {"link_energy"}


@dataclass
class LoopRuntime:
    """Numeric evaluation of one estimation tree against sensor readings."""

    tree: EstimationTree
    dt: float
    area: float
    energy_coeff: float = 1.0
    integrators: dict[EstimatorNode, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        graph = self.tree.graph
        assert graph is not None
        self.process = graph.process
        for est in self.tree.estimators:
            kind = est.estimator
            if kind not in _INTEGRATORS | _MASS_BALANCE | _HEAD_DIFFERENCE:
                raise LangError(f"no numeric semantics for estimator {kind!r}")

    def activate(self, readings: dict[str, float], last_known: float) -> None:
        """Seed integrators so the first estimate equals the current plant level.

        ``readings`` must still carry the previous interval's flows; the seed
        is last_known advanced by one mass-balance delta over those flows, so
        a freshly swapped-in loop lands exactly where the plant is now.
        """
        for est in self.tree.estimators:
            if est.estimator in _INTEGRATORS:
                inflow, outflow = self._integrator_inputs(est, readings)
                self.integrators[est] = last_known + self.dt * (inflow - outflow) / self.area

    def _integrator_inputs(self, est: EstimatorNode, readings: dict[str, float]) -> tuple[float, float]:
        inputs = self.tree.inputs_of(est)
        if len(inputs) != 2:
            raise LangError(f"integrator {est} needs in/out flow inputs, has {len(inputs)}")
        return (self._eval_state(inputs[0], readings), self._eval_state(inputs[1], readings))

    def estimate(self, readings: dict[str, float]) -> float:
        return self._eval_state(self.tree.root, readings)

    def commit(self, readings: dict[str, float]) -> None:
        """Advance integrators over the flows of the interval about to run."""
        advanced = {}
        for est in self.integrators:
            inflow, outflow = self._integrator_inputs(est, readings)
            advanced[est] = self.integrators[est] + self.dt * (inflow - outflow) / self.area
        self.integrators.update(advanced)

    # -- numeric evaluation over the tree -----------------------------------

    def _eval_state(self, state: StateNode, readings: dict[str, float]) -> float:
        provider = self.tree.provider(state)
        if isinstance(provider, SensingNode):
            if provider.sensor not in readings:
                raise SensorUnavailable(provider.sensor)
            return readings[provider.sensor]
        assert isinstance(provider, EstimatorNode)
        return self._eval_estimator(provider, state, readings)

    def _eval_estimator(self, est: EstimatorNode, output: StateNode,
                        readings: dict[str, float]) -> float:
        if est.estimator in _INTEGRATORS:
            return self.integrators[est]
        values = {s: self._eval_state(s, readings) for s in self.tree.inputs_of(est)}
        if est.estimator in _MASS_BALANCE:
            return self._mass_balance(est, output, values)
        upstream, downstream = self._link_ends(est.component)
        ordered = sorted(values, key=lambda s: 0 if s.component == upstream else 1)
        if len(ordered) != 2:
            raise LangError(f"{est} needs the two link-end heads, has {len(ordered)}")
        return self.energy_coeff * (values[ordered[0]] - values[ordered[1]])

    def _mass_balance(self, est: EstimatorNode, output: StateNode,
                      values: dict[StateNode, float]) -> float:
        """Solve the node's mass balance for the output flow.

        Upstream link flows enter the node, downstream link flows and the
        node's own demand leave it.
        """
        node = est.component
        up = down = own = 0.0
        for state, v in values.items():
            if state.component == node:
                own += v
            elif self._connected(state.component, node):
                up += v
            else:
                down += v
        if output.component == node:  # solving for the node's own demand
            return up - down
        if self._connected(output.component, node):  # an upstream link
            return down + own - up
        return up - own - down  # a downstream link

    def _connected(self, src: str, dst: str) -> bool:
        return (src, dst) in self.process.connections

    def _link_ends(self, link: str) -> tuple[str | None, str | None]:
        upstream = next((a for a, b in self.process.connections if b == link), None)
        downstream = next((b for a, b in self.process.connections if a == link), None)
        return upstream, downstream


def plant_truth(
    process: ProcessGraph,
    graph: StateEstimationGraph,
    root: StateNode,
    actuator: str,
    level: float,
    inflow: float,
    outflow: float,
    energy_coeff: float = 1.0,
) -> dict[str, float]:
    """Noiseless sensor readings synthesized from the plant state.

    Link components (classes carrying a preconfigured shape attribute) on the
    supply side of the tank carry the pump inflow, those on the delivery side
    the demand outflow; node components hold zero local demand except the
    terminal demand point.  Heads are zero except the tank level and the
    actuator's upstream neighbour, which is set so the energy estimator
    recovers the pump flow from the head difference.  Sensors on dead devices
    produce no reading.
    """
    tank = root.component
    upstream: set[str] = set()
    frontier = [tank]
    while frontier:
        node = frontier.pop()
        for a, b in process.connections:
            if b == node and a not in upstream and process.component_named(a) is not None:
                upstream.add(a)
                frontier.append(a)

    link_classes = set()
    domain = graph.domain
    for cls in domain.classes:
        if any(attr in graph.static_properties for attr in cls.attributes):
            link_classes.add(cls.name)

    pump_upstream = {a for a, b in process.connections if b == actuator}

    truth: dict[tuple[str, str], float] = {}
    for comp in process.components:
        if comp.name == tank:
            truth[(comp.name, root.property)] = level
            continue
        is_link = comp.class_name in link_classes
        if is_link:
            truth[(comp.name, "flow")] = inflow if comp.name in upstream else outflow
        else:
            truth[(comp.name, "flow")] = 0.0 if comp.name in upstream else outflow
            truth[(comp.name, "head")] = (
                inflow / energy_coeff if comp.name in pump_upstream else 0.0
            )

    readings: dict[str, float] = {}
    for sensor in process.sensors:
        device = process.device_named(sensor.device)
        if device is None or not device.alive:
            continue
        comp = process.sensor_component(sensor.name)
        if comp is None:
            continue
        value = truth.get((comp, sensor.property))
        if value is not None:
            readings[sensor.name] = value
    return readings


def estimate_level(
    tree: EstimationTree,
    plant: PlantState,
    last_known: float,
    *,
    dt: float,
    area: float = 1.0,
    energy_coeff: float = 1.0,
    actuator: str | None = None,
) -> float:
    """One-shot level estimate from a tree, the plant truth, and the last known level."""
    graph = tree.graph
    assert graph is not None
    if actuator is None:
        actuator = next(c.name for c in graph.process.components if c.is_actuator)
    readings = plant_truth(
        graph.process, graph, tree.root, actuator,
        plant.tank_level, plant.inflow, plant.outflow, energy_coeff,
    )
    runtime = LoopRuntime(tree, dt, area, energy_coeff)
    runtime.activate(readings, last_known)
    return runtime.estimate(readings)


# ---------------------------------------------------------------------------
# Scenarios.


@dataclass(frozen=True)
class Scenario:
    script_text: str
    script_name: str = "<bundled wdn example>"
    process_name: str = "simple"
    repository_name: str = "agents"
    root: str = "t.head"
    controller: str = "controller"
    actuator: str = "u"
    dt: float = 0.1
    steps: int = 500
    area: float = 1.0
    capacity: float = 3.0
    pump_rate: float = 2.0
    low: float = 0.5
    high: float = 2.0
    level0: float = 1.0
    demand: tuple[float, ...] = (1.0,)
    energy_coeff: float = 1.0
    tree_index: int = 1
    failures: tuple[tuple[int, str], ...] = ()

    def demand_at(self, step: int) -> float:
        return self.demand[min(step, len(self.demand) - 1)]


def bundled_script() -> str:
    return (
        importlib.resources.files("loopsmith")
        .joinpath("assets/wdn_example.lsc")
        .read_text(encoding="utf-8")
    )


def parse_scenario(text: str, base_dir: Path | None = None) -> Scenario:
    """Parse the key-value scenario format; unknown keys are errors."""
    floats = {"dt", "area", "capacity", "pump_rate", "low", "high", "level0", "energy_coeff"}
    names = {"root", "controller", "actuator", "process", "repository"}
    values: dict[str, object] = {}
    failures: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key = parts[0]
        try:
            if key == "fail":
                if len(parts) != 4 or parts[2] != "at":
                    raise ValueError("expected: fail <device> at <step>")
                failures.append((int(parts[3]), parts[1]))
            elif key == "demand":
                values["demand"] = tuple(float(v) for v in parts[1:])
                if not values["demand"]:
                    raise ValueError("demand needs at least one value")
            elif key in floats:
                values[key] = float(parts[1])
            elif key in ("steps", "tree"):
                values["tree_index" if key == "tree" else key] = int(parts[1])
            elif key in names:
                values["process_name" if key == "process" else
                       "repository_name" if key == "repository" else key] = parts[1]
            elif key == "script":
                path = Path(parts[1])
                if not path.is_absolute() and base_dir is not None:
                    path = base_dir / path
                values["script_text"] = path.read_text(encoding="utf-8")
                values["script_name"] = str(path)
            else:
                raise ValueError(f"unknown scenario key {key!r}")
        except (ValueError, IndexError, OSError) as exc:
            raise LangError(f"scenario line {lineno}: {exc}") from exc
    values.setdefault("script_text", bundled_script())
    values["failures"] = tuple(sorted(failures))
    return Scenario(**values)  # type: ignore[arg-type]


@dataclass(frozen=True)
class Event:
    step: int
    kind: str  # initial-configuration | failure | reconfiguration | control | fatal
    detail: str

    def render(self) -> str:
        return f"step {self.step:4d}  {self.kind}: {self.detail}"


@dataclass
class ScenarioResult:
    status: int
    events: tuple[Event, ...]
    trace: tuple[tuple[int, float, float], ...]  # (step, plant level, estimate)
    active_loop: ControlLoopConfig | None

    @property
    def reconfigurations(self) -> int:
        return sum(1 for e in self.events if e.kind == "reconfiguration")

    def render_log(self) -> str:
        return "\n".join(e.render() for e in self.events)

    def render_timeline(self) -> str:
        """Mermaid timeline of the notable events: configuration changes,
        failures, and pump signal flips (steady control chatter is elided)."""
        lines = ["timeline", "    title Autonomic supervisor events"]
        last_signal: str | None = None
        by_step: dict[int, list[str]] = {}
        for event in self.events:
            if event.kind == "control":
                signal = event.detail.rsplit("sent ", 1)[-1]
                if signal == last_signal:
                    continue
                last_signal = signal
                text = f"pump signal {signal}"
            else:
                text = f"{event.kind} {event.detail}"
            by_step.setdefault(event.step, []).append(text.replace(":", ";"))
        for step in sorted(by_step):
            join = " : ".join(by_step[step])
            lines.append(f"    step {step} : {join}")
        return "\n".join(lines) + "\n"


class _Supervisor:
    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        code, outputs, env = run_source(scenario.script_text, SessionEnv(quiet=True))
        if code != 0:
            raise LangError("scenario script failed:\n" + "\n".join(outputs))
        process = env.bindings.get(scenario.process_name)
        repository = env.bindings.get(scenario.repository_name)
        if not isinstance(process, ProcessGraph):
            raise LangError(f"scenario process {scenario.process_name!r} is not a process")
        if not isinstance(repository, Repository):
            raise LangError(f"scenario repository {scenario.repository_name!r} is not a repository")
        domain = env.bindings.get(process.domain_name)
        if not isinstance(domain, IndustrialDomain):
            raise LangError(f"domain {process.domain_name!r} is not bound by the scenario script")
        self.process = process
        self.repository = repository
        self.domain = domain
        self.events: list[Event] = []
        self.trace: list[tuple[int, float, float]] = []
        self.runtime: LoopRuntime | None = None
        self.loop: ControlLoopConfig | None = None
        self.last_known = scenario.level0
        self.last_signal = Signal.OFF

    def log(self, step: int, kind: str, detail: str) -> None:
        self.events.append(Event(step, kind, detail))

    def reconfigure(self, step: int, readings_plant: PlantState, initial: bool = False) -> None:
        sc = self.scenario
        graph = translate(self.process, self.domain)
        root = graph.node_named(sc.root)
        if root is None or not isinstance(root, StateNode):
            raise LangError(f"scenario root {sc.root!r} is not a state of the graph")
        forest = traverse(root, graph)
        if not forest:
            raise LangError(f"no estimation trees left for {sc.root}; control is unrecoverable")
        index = sc.tree_index if 1 <= sc.tree_index <= len(forest) else 1
        tree = forest[index - 1]
        self.loop = configure(tree, self.repository, sc.controller, sc.actuator, self.process)
        self.runtime = LoopRuntime(tree, sc.dt, sc.area, sc.energy_coeff)
        readings = self.readings(readings_plant)
        self.runtime.activate(readings, self.last_known)
        leaves = ", ".join(str(s) for s in tree.sensing_leaves)
        kind = "initial-configuration" if initial else "reconfiguration"
        self.log(step, kind,
                 f"tree {index} of {len(forest)} for {sc.root} (sensing: {leaves}); "
                 f"loop composed over {', '.join(self.loop.configuration.participants())}")

    def readings(self, plant: PlantState) -> dict[str, float]:
        sc = self.scenario
        assert self.runtime is not None
        return plant_truth(
            self.process, self.runtime.tree.graph, self.runtime.tree.root, sc.actuator,
            plant.tank_level, plant.inflow, plant.outflow, sc.energy_coeff,
        )

    def fail_device(self, step: int, device: str, plant: PlantState) -> None:
        self.process = remove_device(self.process, device)
        self.log(step, "failure", f"device {device} removed from the knowledge base")
        self.reconfigure(step, plant)

    def run(self) -> ScenarioResult:
        sc = self.scenario
        plant = PlantState(tank_level=sc.level0)
        failures: dict[int, list[str]] = {}
        for step, device in sc.failures:
            failures.setdefault(step, []).append(device)
        try:
            self.reconfigure(0, plant, initial=True)
        except LangError as exc:
            self.log(0, "fatal", str(exc))
            return ScenarioResult(1, tuple(self.events), tuple(self.trace), None)

        for step in range(sc.steps):
            try:
                for device in failures.get(step, ()):
                    self.fail_device(step, device, plant)
                assert self.runtime is not None
                for _ in range(len(self.process.devices) + 1):
                    try:
                        estimate = self.runtime.estimate(self.readings(plant))
                        break
                    except SensorUnavailable as exc:
                        sensor = self.process.sensor_named(exc.sensor)
                        if sensor is None:
                            raise LangError(f"sensing point {exc.sensor} vanished") from exc
                        self.fail_device(step, sensor.device, plant)
                else:
                    raise LangError("estimation keeps failing after removing dead devices")
            except LangError as exc:
                self.log(step, "fatal", str(exc))
                return ScenarioResult(1, tuple(self.events), tuple(self.trace), self.loop)

            self.trace.append((step, plant.tank_level, estimate))
            self.last_known = estimate
            decision = control_decision(estimate, sc.low, sc.high)
            signal = self.last_signal if decision is Signal.HOLD else decision
            self.last_signal = signal
            self.log(step, "control", f"estimate {estimate:.6f}, sent {signal.value}")
            plant = replace(plant, pump_on=(signal is Signal.ON))
            self.runtime.commit(self.readings(replace(
                plant,
                inflow=sc.pump_rate if plant.pump_on else 0.0,
                outflow=sc.demand_at(step),
            )))
            plant = plant_step(plant, sc.demand_at(step), sc.dt, sc.area, sc.pump_rate,
                               sc.capacity)
        return ScenarioResult(0, tuple(self.events), tuple(self.trace), self.loop)


def run_scenario(scenario: Scenario) -> ScenarioResult:
    """Run the supervisor over a scenario; never raises for in-scenario failures."""
    return _Supervisor(scenario).run()
