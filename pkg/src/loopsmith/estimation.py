"""State-estimation graphs and estimation-tree enumeration.

Translation instantiates each component's class subgraph, interlinks the
subgraphs along process connections via the domain's translation rules, and
attaches sensing points to the states they measure.  Traversal then
enumerates every estimation tree able to measure or estimate a target state:
a tree resolves its root either directly through a sensing point or through
an estimator whose dynamic inputs are in turn resolvable, never revisiting a
node on the current path and never sharing a node between branches.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

from .diagnostics import LangError, error
from .domain import IndustrialDomain
from .process import ProcessGraph


@dataclass(frozen=True)
class StateNode:
    component: str
    property: str

    def __str__(self) -> str:
        return f"{self.component}.{self.property}"


@dataclass(frozen=True)
class EstimatorNode:
    component: str
    estimator: str

    def __str__(self) -> str:
        return f"{self.component}.{self.estimator}"


@dataclass(frozen=True)
class SensingNode:
    sensor: str

    def __str__(self) -> str:
        return self.sensor


SEGNode = StateNode | EstimatorNode | SensingNode

Edge = tuple[SEGNode, SEGNode]


@dataclass(frozen=True, eq=False)
class StateEstimationGraph:
    """Directed graph over state, estimator, and sensing nodes.

    Edge order is the instantiation order (intra-class edges per component,
    then rule edges per connection, then sensing edges) and fixes the
    deterministic enumeration order of estimation trees.
    """

    nodes: tuple[SEGNode, ...]
    edges: tuple[Edge, ...]
    static_properties: frozenset[str]
    process: ProcessGraph = field(repr=False)
    domain: IndustrialDomain = field(repr=False)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StateEstimationGraph):
            return NotImplemented
        return self.nodes == other.nodes and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.nodes, self.edges))

    @cached_property
    def _in(self) -> dict[SEGNode, tuple[SEGNode, ...]]:
        table: dict[SEGNode, list[SEGNode]] = {n: [] for n in self.nodes}
        for src, dst in self.edges:
            table[dst].append(src)
        return {n: tuple(v) for n, v in table.items()}

    def in_nodes(self, node: SEGNode) -> tuple[SEGNode, ...]:
        return self._in.get(node, ())

    def node_named(self, name: str) -> SEGNode | None:
        for n in self.nodes:
            if str(n) == name:
                return n
        return None

    def is_static(self, node: SEGNode) -> bool:
        return isinstance(node, StateNode) and node.property in self.static_properties


def translate(p: ProcessGraph, d: IndustrialDomain) -> StateEstimationGraph:
    """Build the state estimation graph of a validated process.

    Raises LangError when two connected components' classes have no
    translation rule in either direction.
    """
    nodes: list[SEGNode] = []
    edges: list[Edge] = []
    seen_edges: set[Edge] = set()

    def add_edge(e: Edge) -> None:
        if e not in seen_edges:
            seen_edges.add(e)
            edges.append(e)

    attr_nodes: dict[tuple[str, str], SEGNode] = {}
    prop_names = {pd.name for pd in d.properties}
    for comp in p.components:
        cls = d.class_named(comp.class_name)
        if cls is None:
            raise LangError(f"component {comp.name}: unknown class {comp.class_name!r}")
        for attr in cls.attributes:
            node: SEGNode
            if attr in prop_names:
                node = StateNode(comp.name, attr)
            else:
                node = EstimatorNode(comp.name, attr)
            attr_nodes[(comp.name, attr)] = node
            nodes.append(node)
    for sensor in p.sensors:
        nodes.append(SensingNode(sensor.name))

    # Intra-class estimation edges, one instantiation per component.
    for comp in p.components:
        cls = d.class_named(comp.class_name)
        assert cls is not None
        for src, dst in cls.intra_edges:
            add_edge((attr_nodes[(comp.name, src)], attr_nodes[(comp.name, dst)]))

    # Rule edges per connection between components; connections are stored as
    # written but matched in both directions against the rule table.
    sensor_names = {s.name for s in p.sensors}
    diagnostics = []
    for src, dst in p.connections:
        if src in sensor_names or dst in sensor_names:
            continue
        src_comp = p.component_named(src)
        dst_comp = p.component_named(dst)
        if src_comp is None or dst_comp is None:
            raise LangError(f"connection {src}->{dst}: unknown component")
        rule = d.rule_for(src_comp.class_name, dst_comp.class_name)
        if rule is None:
            diagnostics.append(error(
                f"no translation rule for connected classes "
                f"({src_comp.class_name}, {dst_comp.class_name}) on connection {src}->{dst}"
            ))
            continue
        if rule.source_class == rule.target_class:
            raise LangError(
                f"translation rule {rule.source_class} -> {rule.target_class}: "
                f"rules between a class and itself are ambiguous")
        if rule.source_class == src_comp.class_name and rule.target_class == dst_comp.class_name:
            role_instance = {rule.source_class: src_comp.name, rule.target_class: dst_comp.name}
        else:  # matched in the swapped direction
            role_instance = {rule.source_class: dst_comp.name, rule.target_class: src_comp.name}
        for (r1, a1), (r2, a2) in rule.edges:
            add_edge((attr_nodes[(role_instance[r1], a1)], attr_nodes[(role_instance[r2], a2)]))

    # Sensing edges: a sensing point measures the attached component's state
    # for the sensor's property.
    for src, dst in p.connections:
        if dst not in sensor_names:
            continue
        sensor = p.sensor_named(dst)
        assert sensor is not None
        key = (src, sensor.property)
        if key not in attr_nodes:
            diagnostics.append(error(
                f"sensor {sensor.name} measures {sensor.property!r} but component {src} "
                f"has no such state"))
            continue
        add_edge((SensingNode(sensor.name), attr_nodes[key]))

    if diagnostics:
        raise LangError(diagnostics)
    return StateEstimationGraph(
        nodes=tuple(nodes),
        edges=tuple(edges),
        static_properties=d.preconfigured_properties(),
        process=p,
        domain=d,
    )


@dataclass(frozen=True, eq=False)
class EstimationTree:
    """One way to measure or estimate the root state.

    Edges are (child, parent) pairs oriented toward the root, in the DFS
    emission order of the enumeration.  ``preset_inputs`` records the static
    (shape-like) estimator inputs that agents satisfy by preconfiguration
    rather than by measurement.
    """

    root: StateNode
    edges: tuple[Edge, ...]
    preset_inputs: tuple[tuple[EstimatorNode, StateNode], ...] = ()
    graph: StateEstimationGraph | None = field(default=None, repr=False)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EstimationTree):
            return NotImplemented
        return self.root == other.root and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.root, self.edges))

    @cached_property
    def nodes(self) -> tuple[SEGNode, ...]:
        seen: list[SEGNode] = [self.root]
        for child, parent in self.edges:
            for n in (parent, child):
                if n not in seen:
                    seen.append(n)
        return tuple(seen)

    def canonical(self) -> tuple[StateNode, frozenset[Edge]]:
        """Order-insensitive identity, used to compare against oracle enumerations."""
        return (self.root, frozenset(self.edges))

    def provider(self, state: StateNode) -> SEGNode:
        """The sensing point or estimator that resolves this state in the tree."""
        for child, parent in self.edges:
            if parent == state:
                return child
        raise KeyError(str(state))

    def inputs_of(self, est: EstimatorNode) -> tuple[StateNode, ...]:
        """Dynamic input states of an estimator, in tree input order."""
        return tuple(child for child, parent in self.edges
                     if parent == est and isinstance(child, StateNode))

    @cached_property
    def sensing_leaves(self) -> tuple[SensingNode, ...]:
        return tuple(child for child, _ in self.edges if isinstance(child, SensingNode))

    @cached_property
    def estimators(self) -> tuple[EstimatorNode, ...]:
        """Estimator nodes in bottom-up (post-order) order."""
        out: list[EstimatorNode] = []

        def visit(state: StateNode) -> None:
            prov = self.provider(state)
            if isinstance(prov, EstimatorNode):
                for child in self.inputs_of(prov):
                    visit(child)
                out.append(prov)

        visit(self.root)
        return tuple(out)

    def output_of(self, est: EstimatorNode) -> StateNode:
        for child, parent in self.edges:
            if child == est:
                assert isinstance(parent, StateNode)
                return parent
        raise KeyError(str(est))


@dataclass(frozen=True)
class _Resolution:
    edges: tuple[Edge, ...]
    nodes: frozenset[SEGNode]
    presets: tuple[tuple[EstimatorNode, StateNode], ...]


def _resolutions(
    state: StateNode,
    g: StateEstimationGraph,
    path: frozenset[SEGNode],
    depth: int,
    depth_cap: int,
) -> list[_Resolution]:
    """All subtrees resolving one state, sensing options first."""
    sensing = [n for n in g.in_nodes(state) if isinstance(n, SensingNode)]
    estimators = [n for n in g.in_nodes(state) if isinstance(n, EstimatorNode)]
    out: list[_Resolution] = []
    for s in sensing:
        out.append(_Resolution(((s, state),), frozenset({s, state}), ()))
    if depth >= depth_cap:
        return out
    for est in estimators:
        if est in path:
            continue
        # The state being resolved is the estimator's output; with
        # bidirectional mass edges it also shows up among the in-edges and
        # must not be counted as an input of its own estimation.
        inputs = [n for n in g.in_nodes(est) if isinstance(n, StateNode) and n != state]
        dynamic = [n for n in inputs if not g.is_static(n)]
        if any(n in path for n in dynamic):
            continue
        presets = tuple((est, n) for n in inputs if g.is_static(n))
        sub_path = path | {est}
        per_input = [
            _resolutions(n, g, sub_path | {n}, depth + 1, depth_cap) for n in dynamic
        ]
        if any(not options for options in per_input):
            continue
        for combo in product(*per_input):
            merged: set[SEGNode] = {est, state}
            disjoint = True
            for res in combo:
                if merged & res.nodes:
                    disjoint = False
                    break
                merged |= res.nodes
            if not disjoint:
                continue
            edges: list[Edge] = [(est, state)]
            all_presets = list(presets)
            for inp, res in zip(dynamic, combo):
                edges.append((inp, est))
                edges.extend(res.edges)
                all_presets.extend(res.presets)
            out.append(_Resolution(tuple(edges), frozenset(merged), tuple(all_presets)))
    return out


def traverse(root: StateNode, g: StateEstimationGraph, depth_cap: int = 16) -> list[EstimationTree]:
    """Enumerate every estimation tree rooted at the target state.

    Output order is deterministic: direct-sensing resolutions first, then
    estimator resolutions in edge declaration order, with estimator inputs
    explored depth-first (the last input varies fastest).  Returns an empty
    list when the state is unresolvable.
    """
    if root not in g.nodes:
        raise LangError(f"state {root} is not a node of the estimation graph")
    results = _resolutions(root, g, frozenset({root}), 0, depth_cap)
    return [
        EstimationTree(root=root, edges=res.edges, preset_inputs=res.presets, graph=g)
        for res in results
    ]
