"""Instantiate agent templates over an estimation tree into a control loop.

Every sensing leaf becomes a sensor agent named after its sensing point,
every estimator node an estimator agent named component.estimator, and the
controller and actuator close the loop.  Template placeholders are renamed
positionally: producers bind to the node's children in tree input order,
consumer1 to whoever consumes the node's output (the estimator above, or the
controller at the root).  The result is certified by composing it into a
global protocol; a configuration that does not compose is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass

from .diagnostics import LangError
from .domain import (
    AgentTemplate,
    AmbiguousTemplate,
    Repository,
    TemplateKind,
    TemplateNotFound,
    lookup_template,
    template_named,
)
from .estimation import EstimationTree, EstimatorNode, SensingNode, StateNode
from .process import ProcessGraph
from .protocols import (
    GlobalProtocol,
    LChoice,
    LocalProtocol,
    LPrefix,
    LRec,
    participants,
    rename_participants,
)
from .sessions import CompositionError, LocalConfiguration, compose


@dataclass(frozen=True)
class ControlLoopConfig:
    """A configured control loop: the agent configuration, who plays what, and
    the composed global protocol certifying liveness."""

    configuration: LocalConfiguration
    assignments: tuple[tuple[str, tuple[str, str]], ...]
    certified: GlobalProtocol | None = None

    def assignment_of(self, participant: str) -> tuple[str, str]:
        for name, binding in self.assignments:
            if name == participant:
                return binding
        raise KeyError(participant)


def _instantiate(template: AgentTemplate, producers: list[str], consumers: list[str],
                 agent: str) -> LocalProtocol:
    mapping: dict[str, str] = {}
    for i, name in enumerate(producers, start=1):
        mapping[f"producer{i}"] = name
    for i, name in enumerate(consumers, start=1):
        mapping[f"consumer{i}"] = name
    unbound = participants(template.protocol) - set(mapping)
    if unbound:
        raise LangError(
            f"template {template.name} for agent {agent}: placeholder "
            f"{sorted(unbound)[0]} has no binding (arity mismatch)"
        )
    return rename_participants(template.protocol, mapping)


def _choice_signature(p: LocalProtocol) -> tuple[str, tuple[str, ...]] | None:
    """The first enumeration (name, labels) a protocol sends or receives."""
    if isinstance(p, LChoice):
        return (p.enum, tuple(sorted(lbl for lbl, _ in p.branches)))
    if isinstance(p, LPrefix):
        return _choice_signature(p.cont)
    if isinstance(p, LRec):
        return _choice_signature(p.body)
    return None


def configure(
    tree: EstimationTree,
    repository: Repository,
    controller_template: str,
    actuator: str,
    process: ProcessGraph,
) -> ControlLoopConfig:
    """Build and certify the control loop configuration for an estimation tree."""
    comp = process.component_named(actuator)
    if comp is None or not comp.is_actuator:
        raise LangError(f"{actuator!r} is not an actuator instance of the process")
    assert comp.device is not None
    actuator_device = process.device_named(comp.device)
    if actuator_device is None or not actuator_device.alive:
        raise LangError(f"actuator {actuator} is bound to dead device {comp.device}")

    try:
        ctl = template_named(repository, controller_template)
    except (TemplateNotFound, AmbiguousTemplate) as exc:
        raise LangError(str(exc)) from exc
    if ctl.kind is not TemplateKind.CONTROL:
        raise LangError(f"template {controller_template} is not a control template")
    if ctl.subject != comp.class_name:
        raise LangError(
            f"controller template {ctl.name} drives class {ctl.subject!r}, but "
            f"{actuator} is a {comp.class_name}"
        )

    for leaf in tree.sensing_leaves:
        sensor = process.sensor_named(leaf.sensor)
        if sensor is None:
            raise LangError(f"sensing point {leaf.sensor} is not part of the process")
        device = process.device_named(sensor.device)
        if device is None or not device.alive:
            raise LangError(f"sensing point {leaf.sensor} is on dead device {sensor.device}")

    controller_name = ctl.name
    root_provider = tree.provider(tree.root)

    def participant_of(node: SensingNode | EstimatorNode) -> str:
        return str(node)

    def consumer_of(state: StateNode) -> str:
        """Who consumes a resolved state: the estimator above it, or the controller."""
        if state == tree.root:
            return controller_name
        for child, parent in tree.edges:
            if child == state and isinstance(parent, EstimatorNode):
                return participant_of(parent)
        raise LangError(f"state {state} has no consumer in the tree")

    roles: list[tuple[str, LocalProtocol]] = []
    assignments: list[tuple[str, tuple[str, str]]] = []

    try:
        for leaf in tree.sensing_leaves:
            sensor = process.sensor_named(leaf.sensor)
            assert sensor is not None
            template = lookup_template(repository, TemplateKind.SENSE, sensor.property)
            target = consumer_of(_measured_state(tree, leaf))
            roles.append((leaf.sensor, _instantiate(template, [], [target], leaf.sensor)))
            assignments.append((leaf.sensor, (template.name, sensor.device)))

        for est in tree.estimators:
            template = lookup_template(repository, TemplateKind.ESTIMATE, est.estimator)
            inputs = tree.inputs_of(est)
            if template.input_arity != len(inputs):
                raise LangError(
                    f"estimator template {template.name} takes {template.input_arity} "
                    f"producers but {est} has {len(inputs)} tree inputs"
                )
            producers = [participant_of(tree.provider(s)) for s in inputs]
            consumer = consumer_of(tree.output_of(est))
            name = participant_of(est)
            roles.append((name, _instantiate(template, producers, [consumer], name)))
            assignments.append((name, (template.name, str(est))))

        act_template = lookup_template(repository, TemplateKind.ACTUATE, comp.class_name)
    except (TemplateNotFound, AmbiguousTemplate) as exc:
        raise LangError(str(exc)) from exc

    ctl_sig = _choice_signature(ctl.protocol)
    act_sig = _choice_signature(act_template.protocol)
    if ctl_sig != act_sig:
        raise LangError(
            f"controller template {ctl.name} and actuate template {act_template.name} "
            f"disagree on the signal enumeration: {ctl_sig} vs {act_sig}"
        )

    roles.append(
        (controller_name,
         _instantiate(ctl, [participant_of(root_provider)], [actuator], controller_name))
    )
    assignments.append((controller_name, (ctl.name, comp.device)))
    roles.append((actuator, _instantiate(act_template, [controller_name], [], actuator)))
    assignments.append((actuator, (act_template.name, comp.device)))

    configuration = LocalConfiguration(tuple(roles))
    try:
        certificate = compose(configuration)
    except CompositionError as exc:
        raise LangError(f"configured loop does not compose: {exc.render()}") from exc
    return ControlLoopConfig(configuration, tuple(assignments), certificate)


def _measured_state(tree: EstimationTree, leaf: SensingNode) -> StateNode:
    for child, parent in tree.edges:
        if child == leaf and isinstance(parent, StateNode):
            return parent
    raise LangError(f"sensing point {leaf.sensor} measures no state in the tree")
