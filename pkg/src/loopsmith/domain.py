"""Industrial-domain ontology schema: properties, estimators, classes, rules, agents.

A domain declares what exists in some industrial field (properties that can be
measured, estimator functions, component classes with their attributes) plus
the translation rules that later turn a concrete process graph into a state
estimation graph.  The agent repository holds protocol templates over
placeholder participants (producer1.., consumer1..) which the configurator
instantiates into a concrete control loop.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .diagnostics import Diagnostic, SourcePos, error
from .protocols import (
    LChoice,
    LocalProtocol,
    LPrefix,
    LRec,
    is_closed,
    participants,
)

_PLACEHOLDER_RE = re.compile(r"(producer|consumer)([1-9][0-9]*)\Z")


@dataclass(frozen=True)
class PropertyDef:
    """A physical property; enumeration properties carry their labels."""

    name: str
    labels: tuple[str, ...] = ()
    pos: SourcePos | None = field(default=None, compare=False, repr=False)

    @property
    def is_enum(self) -> bool:
        return bool(self.labels)


@dataclass(frozen=True)
class EstimatorDef:
    name: str
    pos: SourcePos | None = field(default=None, compare=False, repr=False)


class ClassKind(Enum):
    PHYSICAL = "physical"
    ACTUATOR = "actuator"


@dataclass(frozen=True)
class ComponentClass:
    """A component class: named attributes (properties and estimators) plus the
    intra-class estimation edges between them."""

    name: str
    kind: ClassKind
    attributes: tuple[str, ...]
    intra_edges: tuple[tuple[str, str], ...] = ()
    pos: SourcePos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class TranslationRule:
    """Estimation edges contributed by a connection between two component classes.

    Edge endpoints are (class role, attribute) pairs where the role names the
    source or target class of the rule.
    """

    source_class: str
    target_class: str
    edges: tuple[tuple[tuple[str, str], tuple[str, str]], ...]
    pos: SourcePos | None = field(default=None, compare=False, repr=False)


class TemplateKind(Enum):
    ESTIMATE = "estimate"
    SENSE = "sense"
    CONTROL = "control"
    ACTUATE = "actuate"


@dataclass(frozen=True)
class AgentTemplate:
    """A named protocol template for one agent kind, tied to a domain subject.

    The subject is an estimator name for estimate templates, a property name
    for sense templates, and an actuator class name for control and actuate
    templates.  Protocol participants are placeholders (producerN/consumerN);
    input and output arity are the distinct placeholder counts.
    """

    kind: TemplateKind
    subject: str
    name: str
    protocol: LocalProtocol
    pos: SourcePos | None = field(default=None, compare=False, repr=False)

    def placeholders(self) -> tuple[str, ...]:
        return tuple(sorted(participants(self.protocol)))

    @property
    def input_arity(self) -> int:
        return sum(1 for p in self.placeholders() if p.startswith("producer"))

    @property
    def output_arity(self) -> int:
        return sum(1 for p in self.placeholders() if p.startswith("consumer"))


@dataclass(frozen=True)
class IndustrialDomain:
    properties: tuple[PropertyDef, ...]
    model: tuple[EstimatorDef, ...]
    classes: tuple[ComponentClass, ...]
    rules: tuple[TranslationRule, ...]

    def property_named(self, name: str) -> PropertyDef | None:
        for p in self.properties:
            if p.name == name:
                return p
        return None

    def estimator_named(self, name: str) -> EstimatorDef | None:
        for e in self.model:
            if e.name == name:
                return e
        return None

    def class_named(self, name: str) -> ComponentClass | None:
        for c in self.classes:
            if c.name == name:
                return c
        return None

    def rule_for(self, src_class: str, dst_class: str) -> TranslationRule | None:
        """Rule lookup for a connection, trying the written direction then the swap."""
        for a, b in ((src_class, dst_class), (dst_class, src_class)):
            for rule in self.rules:
                if rule.source_class == a and rule.target_class == b:
                    return rule
        return None

    def preconfigured_properties(self) -> frozenset[str]:
        """Properties that only ever feed estimators and are never estimated.

        These behave as preconfigured constants (component shapes): tree
        traversal neither expands them nor requires them to be measured.
        """
        used: set[str] = set()
        outputs: set[str] = set()
        prop_names = {p.name for p in self.properties}
        for cls in self.classes:
            for attr in cls.attributes:
                if attr in prop_names:
                    used.add(attr)
            for src, dst in cls.intra_edges:
                if dst in prop_names:
                    outputs.add(dst)
        for rule in self.rules:
            for (_, _), (_, dst_attr) in rule.edges:
                if dst_attr in prop_names:
                    outputs.add(dst_attr)
        return frozenset(used - outputs)


@dataclass(frozen=True)
class Repository:
    name: str
    templates: tuple[AgentTemplate, ...]
    pos: SourcePos | None = field(default=None, compare=False, repr=False)


class TemplateNotFound(LookupError):
    pass


class AmbiguousTemplate(LookupError):
    pass


def lookup_template(r: Repository, kind: TemplateKind, subject: str) -> AgentTemplate:
    """The unique template with this kind and subject."""
    hits = [t for t in r.templates if t.kind is kind and t.subject == subject]
    if not hits:
        raise TemplateNotFound(f"no {kind.value} template for {subject!r} in repository {r.name}")
    if len(hits) > 1:
        names = ", ".join(t.name for t in hits)
        raise AmbiguousTemplate(
            f"repository {r.name} has {len(hits)} {kind.value} templates for {subject!r}: {names}"
        )
    return hits[0]


def template_named(r: Repository, name: str) -> AgentTemplate:
    hits = [t for t in r.templates if t.name == name]
    if not hits:
        raise TemplateNotFound(f"no template named {name!r} in repository {r.name}")
    if len(hits) > 1:
        raise AmbiguousTemplate(f"template name {name!r} is bound {len(hits)} times in {r.name}")
    return hits[0]


def _check_edge_kinds(
    pairs: tuple[tuple[str, str], ...],
    kind_of: dict[str, str],
    where: str,
    pos: SourcePos | None,
    out: list[Diagnostic],
) -> None:
    # Every estimation edge must connect a property with an estimator.
    for src, dst in pairs:
        ks, kd = kind_of.get(src), kind_of.get(dst)
        if ks is None or kd is None:
            continue  # unresolved endpoints are reported separately
        if {ks, kd} != {"property", "estimator"}:
            out.append(error(f"{where}: edge {src} -> {dst} connects {ks} to {kd}", pos))


def validate_domain(d: IndustrialDomain) -> list[Diagnostic]:
    """Structural validation; an empty list means the domain is well-formed."""
    out: list[Diagnostic] = []
    prop_names = [p.name for p in d.properties]
    est_names = [e.name for e in d.model]
    for group, names in (("property", prop_names), ("estimator", est_names),
                         ("class", [c.name for c in d.classes])):
        for name in names:
            if names.count(name) > 1:
                out.append(error(f"duplicate {group} name {name!r}"))
                break
    for p in d.properties:
        if len(set(p.labels)) != len(p.labels):
            out.append(error(f"property {p.name}: enumeration labels must be distinct", p.pos))
    overlap = set(prop_names) & set(est_names)
    for name in sorted(overlap):
        out.append(error(f"{name!r} is declared both as a property and as an estimator"))

    for cls in d.classes:
        kind_of: dict[str, str] = {}
        for attr in cls.attributes:
            if attr in prop_names:
                kind_of[attr] = "property"
            elif attr in est_names:
                kind_of[attr] = "estimator"
            else:
                out.append(error(f"class {cls.name}: unknown attribute {attr!r}", cls.pos))
        for src, dst in cls.intra_edges:
            for endpoint in (src, dst):
                if endpoint not in cls.attributes:
                    out.append(error(
                        f"class {cls.name}: edge endpoint {endpoint!r} is not an attribute",
                        cls.pos,
                    ))
        _check_edge_kinds(cls.intra_edges, kind_of, f"class {cls.name}", cls.pos, out)

    for rule in d.rules:
        role_class = {}
        for role_name, cls_name in ((rule.source_class, rule.source_class),
                                    (rule.target_class, rule.target_class)):
            cls = d.class_named(cls_name)
            if cls is None:
                out.append(error(f"translation {rule.source_class} -> {rule.target_class}: "
                                 f"unknown class {cls_name!r}", rule.pos))
            else:
                role_class[role_name] = cls
        kind_of = {}
        flat_pairs = []
        for (src_role, src_attr), (dst_role, dst_attr) in rule.edges:
            for role, attr in ((src_role, src_attr), (dst_role, dst_attr)):
                cls = role_class.get(role)
                if role not in (rule.source_class, rule.target_class):
                    out.append(error(
                        f"translation {rule.source_class} -> {rule.target_class}: "
                        f"qualifier {role!r} names neither side", rule.pos))
                    continue
                if cls is not None and attr not in cls.attributes:
                    out.append(error(
                        f"translation {rule.source_class} -> {rule.target_class}: "
                        f"{role}.{attr} is not an attribute of class {role}", rule.pos))
                key = f"{role}.{attr}"
                if attr in prop_names:
                    kind_of[key] = "property"
                elif attr in est_names:
                    kind_of[key] = "estimator"
            flat_pairs.append((f"{src_role}.{src_attr}", f"{dst_role}.{dst_attr}"))
        _check_edge_kinds(tuple(flat_pairs), kind_of,
                          f"translation {rule.source_class} -> {rule.target_class}",
                          rule.pos, out)
    return out


def _template_payload_diagnostics(t: AgentTemplate, d: IndustrialDomain) -> list[Diagnostic]:
    out: list[Diagnostic] = []

    def walk(proto: LocalProtocol) -> None:
        if isinstance(proto, LPrefix):
            prop = d.property_named(proto.action.payload)
            if prop is None:
                out.append(error(
                    f"template {t.name}: payload {proto.action.payload!r} is not a declared property",
                    t.pos,
                ))
            elif prop.is_enum:
                out.append(error(
                    f"template {t.name}: enumeration {prop.name!r} must be sent as a choice",
                    t.pos,
                ))
            walk(proto.cont)
        elif isinstance(proto, LChoice):
            prop = d.property_named(proto.enum)
            if prop is None or not prop.is_enum:
                out.append(error(
                    f"template {t.name}: {proto.enum!r} is not a declared enumeration property",
                    t.pos,
                ))
            else:
                for lbl, _ in proto.branches:
                    if lbl not in prop.labels:
                        out.append(error(
                            f"template {t.name}: {lbl!r} is not a label of enumeration {prop.name}",
                            t.pos,
                        ))
            for _, cont in proto.branches:
                walk(cont)
        elif isinstance(proto, LRec):
            walk(proto.body)

    walk(t.protocol)
    return out


def validate_repository(r: Repository, d: IndustrialDomain) -> list[Diagnostic]:
    """Check template subjects, placeholder discipline, and payloads against a domain."""
    out: list[Diagnostic] = []
    names = [t.name for t in r.templates]
    for name in set(names):
        if names.count(name) > 1:
            out.append(error(f"repository {r.name}: template name {name!r} bound twice"))

    for t in r.templates:
        if t.kind is TemplateKind.ESTIMATE and d.estimator_named(t.subject) is None:
            out.append(error(f"template {t.name}: unknown estimator {t.subject!r}", t.pos))
        elif t.kind is TemplateKind.SENSE and d.property_named(t.subject) is None:
            out.append(error(f"template {t.name}: unknown property {t.subject!r}", t.pos))
        elif t.kind in (TemplateKind.CONTROL, TemplateKind.ACTUATE):
            cls = d.class_named(t.subject)
            if cls is None or cls.kind is not ClassKind.ACTUATOR:
                out.append(error(
                    f"template {t.name}: {t.subject!r} is not an actuator class", t.pos))
        if not is_closed(t.protocol):
            out.append(error(f"template {t.name}: protocol has unbound loop labels", t.pos))
        for placeholder in participants(t.protocol):
            if not _PLACEHOLDER_RE.match(placeholder):
                out.append(error(
                    f"template {t.name}: participant {placeholder!r} is not a "
                    f"producerN/consumerN placeholder", t.pos))
        out.extend(_template_payload_diagnostics(t, d))
    return out
