"""Industrial process knowledge graphs: devices, components, sensing points, wiring.

A process instantiates component classes of some domain, binds sensing points
and actuators to hardware devices, and records the physical connections.  The
event manager mutates it only through :func:`remove_device`, which returns a
fresh graph so older snapshots stay valid.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .diagnostics import Diagnostic, LangError, SourcePos, error
from .domain import ClassKind, IndustrialDomain


@dataclass(frozen=True)
class Device:
    name: str
    alive: bool = True
    pos: SourcePos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ComponentInstance:
    name: str
    class_name: str
    device: str | None = None
    is_actuator: bool = False
    pos: SourcePos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class SensingPoint:
    name: str
    property: str
    device: str
    pos: SourcePos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ProcessGraph:
    domain_name: str
    devices: tuple[Device, ...]
    components: tuple[ComponentInstance, ...]
    sensors: tuple[SensingPoint, ...]
    connections: tuple[tuple[str, str], ...]

    def device_named(self, name: str) -> Device | None:
        for d in self.devices:
            if d.name == name:
                return d
        return None

    def component_named(self, name: str) -> ComponentInstance | None:
        for c in self.components:
            if c.name == name:
                return c
        return None

    def sensor_named(self, name: str) -> SensingPoint | None:
        for s in self.sensors:
            if s.name == name:
                return s
        return None

    def sensor_component(self, sensor: str) -> str | None:
        """The component a sensing point is attached to (source of its connection)."""
        for src, dst in self.connections:
            if dst == sensor:
                return src
        return None


def validate_process(p: ProcessGraph, domain: IndustrialDomain) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    names: dict[str, SourcePos | None] = {}
    for dev in p.devices:
        if dev.name in names:
            out.append(error(f"duplicate name {dev.name!r}", dev.pos))
        names[dev.name] = dev.pos
    for comp in p.components:
        if comp.name in names:
            out.append(error(f"duplicate name {comp.name!r}", comp.pos))
        names[comp.name] = comp.pos
        cls = domain.class_named(comp.class_name)
        if cls is None:
            out.append(error(f"component {comp.name}: unknown class {comp.class_name!r}", comp.pos))
        elif comp.is_actuator and cls.kind is not ClassKind.ACTUATOR:
            out.append(error(
                f"component {comp.name}: class {cls.name} is not an actuator class", comp.pos))
        elif not comp.is_actuator and cls.kind is ClassKind.ACTUATOR:
            out.append(error(
                f"component {comp.name}: actuator class {cls.name} needs an 'actuator' "
                f"declaration with a device binding", comp.pos))
        if comp.is_actuator and comp.device is None:
            out.append(error(f"actuator {comp.name} has no device binding", comp.pos))
        if comp.device is not None and p.device_named(comp.device) is None:
            out.append(error(f"component {comp.name}: unknown device {comp.device!r}", comp.pos))
    for sensor in p.sensors:
        if sensor.name in names:
            out.append(error(f"duplicate name {sensor.name!r}", sensor.pos))
        names[sensor.name] = sensor.pos
        if domain.property_named(sensor.property) is None:
            out.append(error(f"sensor {sensor.name}: unknown property {sensor.property!r}",
                             sensor.pos))
        if p.device_named(sensor.device) is None:
            out.append(error(f"sensor {sensor.name}: unknown device {sensor.device!r}", sensor.pos))

    sensor_names = {s.name for s in p.sensors}
    component_names = {c.name for c in p.components}
    incident: dict[str, int] = {s: 0 for s in sensor_names}
    for src, dst in p.connections:
        for endpoint in (src, dst):
            if endpoint not in sensor_names and endpoint not in component_names:
                out.append(error(f"connection {src}->{dst}: unknown node {endpoint!r}"))
        if src in sensor_names:
            out.append(error(
                f"connection {src}->{dst}: a sensing point can only be a connection target"))
        elif dst in sensor_names and src in component_names:
            incident[dst] += 1
    for sensor in p.sensors:
        if incident.get(sensor.name, 0) != 1 and sensor.name in sensor_names:
            out.append(error(
                f"sensor {sensor.name} must be attached to exactly one component "
                f"(found {incident.get(sensor.name, 0)} connections)", sensor.pos))
    return out


def build_process(p: ProcessGraph, domain: IndustrialDomain) -> ProcessGraph:
    """Validate a parsed process against its domain; raises LangError on problems."""
    diags = validate_process(p, domain)
    if diags:
        raise LangError(diags)
    return p


def remove_device(p: ProcessGraph, device: str) -> ProcessGraph:
    """A new graph without the device, its sensing points, and their connections.

    Removing the device an actuator is bound to is fatal: the process can no
    longer be controlled at all, so the caller must not continue with the
    result.
    """
    if p.device_named(device) is None:
        raise LangError(f"unknown device {device!r}")
    for comp in p.components:
        if comp.is_actuator and comp.device == device:
            raise LangError(
                f"device {device} is bound to actuator {comp.name}; removing it would "
                f"leave the process uncontrollable"
            )
    dropped = {s.name for s in p.sensors if s.device == device}
    return replace(
        p,
        devices=tuple(d for d in p.devices if d.name != device),
        sensors=tuple(s for s in p.sensors if s.device != device),
        connections=tuple(
            (src, dst) for src, dst in p.connections
            if src not in dropped and dst not in dropped
        ),
    )
