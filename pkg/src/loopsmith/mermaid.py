"""Mermaid rendering of graphs, trees, configurations, and choreographies.

Node identifiers are derived from the value itself (dots become underscores),
so repeated runs over the same value emit identical text.
"""

from __future__ import annotations

from .configure import ControlLoopConfig
from .estimation import EstimationTree, EstimatorNode, SensingNode, StateEstimationGraph, StateNode
from .protocols import GChoice, GEnd, GlobalProtocol, GPass, GRec, GVar
from .sessions import LocalConfiguration

_CLASS_DEFS = (
    "    classDef state fill:#dbe9ff,stroke:#2a4d7f;",
    "    classDef estimator fill:#ffe7c2,stroke:#8a5a00;",
    "    classDef sensing fill:#d9f2d9,stroke:#1e6b1e;",
)


def _node_id(node) -> str:
    return str(node).replace(".", "_")


def _node_line(node) -> str:
    nid = _node_id(node)
    label = str(node)
    if isinstance(node, StateNode):
        return f"    {nid}[{label}]:::state"
    if isinstance(node, EstimatorNode):
        return f"    {nid}[[{label}]]:::estimator"
    if isinstance(node, SensingNode):
        return f"    {nid}(({label})):::sensing"
    return f"    {nid}[{label}]"


def _flowchart(nodes, edges) -> str:
    lines = ["flowchart TD"]
    lines.extend(_CLASS_DEFS)
    lines.extend(_node_line(n) for n in nodes)
    lines.extend(f"    {_node_id(a)} --> {_node_id(b)}" for a, b in edges)
    return "\n".join(lines) + "\n"


def graph_to_mermaid(g: StateEstimationGraph) -> str:
    return _flowchart(g.nodes, g.edges)


def tree_to_mermaid(t: EstimationTree) -> str:
    return _flowchart(t.nodes, t.edges)


def config_to_mermaid(c: LocalConfiguration) -> str:
    lines = ["sequenceDiagram"]
    lines.extend(f"    participant {_node_id(p)} as {p}" for p in c.participants())
    return "\n".join(lines) + "\n"


def global_to_mermaid(g: GlobalProtocol) -> str:
    """A sequence diagram of the choreography; loops and choices become blocks."""
    lines = ["sequenceDiagram"]
    from .protocols import global_participants

    for p in global_participants(g):
        lines.append(f"    participant {_node_id(p)} as {p}")

    def walk(term: GlobalProtocol, indent: str) -> None:
        if isinstance(term, (GEnd, GVar)):
            return
        if isinstance(term, GPass):
            lines.append(f"{indent}{_node_id(term.sender)}->>{_node_id(term.receiver)}: "
                         f"{term.payload}")
            walk(term.cont, indent)
            return
        if isinstance(term, GChoice):
            first = True
            for label, cont in term.branches:
                kw = "alt" if first else "else"
                first = False
                lines.append(f"{indent}{kw} {term.enum} = {label}")
                lines.append(f"{indent}    {_node_id(term.sender)}->>"
                             f"{_node_id(term.receiver)}: {label}")
                walk(cont, indent + "    ")
            lines.append(f"{indent}end")
            return
        if isinstance(term, GRec):
            lines.append(f"{indent}loop {term.label}")
            walk(term.body, indent + "    ")
            lines.append(f"{indent}end")
            return
        raise TypeError(f"not a global protocol: {term!r}")

    walk(g, "    ")
    return "\n".join(lines) + "\n"


def to_mermaid(value) -> str:
    if isinstance(value, StateEstimationGraph):
        return graph_to_mermaid(value)
    if isinstance(value, EstimationTree):
        return tree_to_mermaid(value)
    if isinstance(value, LocalConfiguration):
        return config_to_mermaid(value)
    if isinstance(value, GlobalProtocol):
        return global_to_mermaid(value)
    if isinstance(value, ControlLoopConfig):
        if value.certified is not None:
            return global_to_mermaid(value.certified)
        return config_to_mermaid(value.configuration)
    raise TypeError(f"no diagram form for {type(value).__name__}")
