"""Pretty-printing of values back into surface syntax.

Printing is the inverse of parsing up to whitespace: for every protocol,
configuration, domain, repository, and process value, parsing the printed
text yields a structurally equal value.
"""

from __future__ import annotations

from itertools import groupby

from .domain import (
    AgentTemplate,
    ClassKind,
    ComponentClass,
    IndustrialDomain,
    PropertyDef,
    Repository,
    TranslationRule,
)
from .process import ProcessGraph
from .protocols import (
    GChoice,
    GEnd,
    GlobalProtocol,
    GPass,
    GRec,
    GVar,
    LChoice,
    LEnd,
    LocalProtocol,
    LPrefix,
    LRec,
    LVar,
)
from .sessions import LocalConfiguration


def print_local(p: LocalProtocol) -> str:
    if isinstance(p, LEnd):
        return "end"
    if isinstance(p, LVar):
        return p.label
    if isinstance(p, LPrefix):
        a = p.action
        return f"{a.peer}{a.direction.value}{a.payload}. {print_local(p.cont)}"
    if isinstance(p, LChoice):
        head = f"{p.peer}{p.direction.value}{p.enum}"
        branches = " or ".join(
            f"{{ {lbl}: {print_local(cont)} }}" for lbl, cont in p.branches
        )
        return f"{head} {branches}"
    if isinstance(p, LRec):
        return f"{p.label}. {print_local(p.body)}"
    raise TypeError(f"not a local protocol: {p!r}")


def print_global(g: GlobalProtocol) -> str:
    if isinstance(g, GEnd):
        return "end"
    if isinstance(g, GVar):
        return g.label
    if isinstance(g, GPass):
        return f"{g.sender}->{g.receiver}:{g.payload}. {print_global(g.cont)}"
    if isinstance(g, GChoice):
        head = f"{g.sender}->{g.receiver}:{g.enum}"
        branches = " or ".join(
            f"{{ {lbl}: {print_global(cont)} }}" for lbl, cont in g.branches
        )
        return f"{head} {branches}"
    if isinstance(g, GRec):
        return f"{g.label}. {print_global(g.body)}"
    raise TypeError(f"not a global protocol: {g!r}")


def print_local_configuration(c: LocalConfiguration) -> str:
    if not c.roles:
        return "local { }"
    width = max(len(p) for p, _ in c.roles)
    lines = [f"  {p.ljust(width)} = {print_local(proto)}" for p, proto in c.roles]
    return "local {\n" + "\n".join(lines) + "\n}"


def print_global_configuration(g: GlobalProtocol) -> str:
    return f"global {print_global(g)}"


def _print_property_item(p: PropertyDef) -> str:
    if p.labels:
        return f"{p.name} {{{', '.join(p.labels)}}}"
    return p.name


def _print_class(c: ComponentClass) -> str:
    kw = "physical" if c.kind is ClassKind.PHYSICAL else "actuator"
    head = f"  {kw} {c.name}({', '.join(c.attributes)})"
    if not c.intra_edges:
        return head
    edges = ", ".join(f"{a} -> {b}" for a, b in c.intra_edges)
    return f"{head}:\n    {edges}"


def _print_rule(r: TranslationRule) -> str:
    edges = ",\n    ".join(
        f"{sr}.{sa} -> {dr}.{da}" for (sr, sa), (dr, da) in r.edges
    )
    return f"  translation {r.source_class} -> {r.target_class}:\n    {edges}"


def print_domain(d: IndustrialDomain) -> str:
    parts = []
    if d.properties:
        parts.append("  property " + ", ".join(_print_property_item(p) for p in d.properties))
    if d.model:
        parts.append("  model " + ", ".join(e.name for e in d.model))
    parts.extend(_print_class(c) for c in d.classes)
    parts.extend(_print_rule(r) for r in d.rules)
    if not parts:
        return "domain { }"
    return "domain {\n" + "\n\n".join(parts) + "\n}"


def _print_template(t: AgentTemplate) -> str:
    return f"  {t.kind.value} {t.subject} using {t.name} =\n    {print_local(t.protocol)}"


def print_repository(r: Repository) -> str:
    if not r.templates:
        return f"repository {r.name} {{ }}"
    body = "\n\n".join(_print_template(t) for t in r.templates)
    return f"repository {r.name} {{\n{body}\n}}"


def print_process(p: ProcessGraph) -> str:
    lines = []
    if p.devices:
        lines.append("  device " + ", ".join(d.name for d in p.devices))
    for is_act, group in groupby(p.components, key=lambda c: c.is_actuator):
        for cls_name, cls_group in groupby(group, key=lambda c: c.class_name):
            names = ", ".join(
                c.name if c.device is None else f"{c.name}@{c.device}" for c in cls_group
            )
            kw = "actuator" if is_act else "physical"
            lines.append(f"  {kw} {names} {cls_name}")
    for prop, group in groupby(p.sensors, key=lambda s: s.property):
        names = ", ".join(f"{s.name}@{s.device}" for s in group)
        lines.append(f"  sensor {names} {prop}")
    if p.connections:
        lines.append("  conn " + ", ".join(f"{a}->{b}" for a, b in p.connections))
    if not lines:
        return f"process {p.domain_name} {{ }}"
    return f"process {p.domain_name} {{\n" + "\n".join(lines) + "\n}"
