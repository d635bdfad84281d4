"""Session environment and command evaluation for the REPL and script runner."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from . import mermaid, printer
from .configure import ControlLoopConfig, configure
from .diagnostics import LangError, error
from .domain import IndustrialDomain, Repository, validate_domain, validate_repository
from .estimation import EstimationTree, StateEstimationGraph, StateNode, translate, traverse
from .parser import (
    Bind,
    Command,
    Diagram,
    Eval,
    Expr,
    Literal,
    NameRef,
    OpExpr,
    Show,
    parse_program,
)
from .process import ProcessGraph, build_process, remove_device
from .protocols import GlobalProtocol, global_participants
from .sessions import CompositionError, LocalConfiguration, ProjectionError, compose, project


@dataclass(frozen=True)
class TreeForest:
    """The ordered result of a traverse command; indexed 1-based from scripts."""

    root: StateNode
    trees: tuple[EstimationTree, ...]

    def __len__(self) -> int:
        return len(self.trees)


Value = object  # domain | repository | process | graph | forest | tree | config | global | loop


@dataclass
class SessionEnv:
    bindings: dict[str, Value] = field(default_factory=dict)
    active_domain: IndustrialDomain | None = None
    state_budget: int = 100_000
    mermaid_dir: Path | None = None
    quiet: bool = False

    def lookup(self, name: str, pos=None) -> Value:
        if name not in self.bindings:
            raise LangError(error(f"name {name!r} is not bound", pos))
        return self.bindings[name]


def describe(value: Value) -> str:
    if isinstance(value, IndustrialDomain):
        return (f"domain ({len(value.properties)} properties, {len(value.model)} estimators, "
                f"{len(value.classes)} classes, {len(value.rules)} translation rules)")
    if isinstance(value, Repository):
        return f"repository {value.name} ({len(value.templates)} templates)"
    if isinstance(value, ProcessGraph):
        return (f"process over domain {value.domain_name} ({len(value.devices)} devices, "
                f"{len(value.components)} components, {len(value.sensors)} sensors, "
                f"{len(value.connections)} connections)")
    if isinstance(value, StateEstimationGraph):
        return f"state estimation graph ({len(value.nodes)} nodes, {len(value.edges)} edges)"
    if isinstance(value, TreeForest):
        return f"{len(value.trees)} estimation trees rooted at {value.root}"
    if isinstance(value, EstimationTree):
        leaves = ", ".join(str(s) for s in value.sensing_leaves)
        return f"estimation tree for {value.root} (sensing: {leaves or 'none'})"
    if isinstance(value, LocalConfiguration):
        return f"local configuration ({len(value.roles)} roles)"
    if isinstance(value, GlobalProtocol):
        return f"global protocol over {{{', '.join(global_participants(value))}}}"
    if isinstance(value, ControlLoopConfig):
        roles = ", ".join(value.configuration.participants())
        return f"control loop configuration ({roles}); composed and live"
    return str(value)


def render(value: Value) -> str:
    """Full surface syntax of a value, used by the show command."""
    if isinstance(value, IndustrialDomain):
        return printer.print_domain(value)
    if isinstance(value, Repository):
        return printer.print_repository(value)
    if isinstance(value, ProcessGraph):
        return printer.print_process(value)
    if isinstance(value, LocalConfiguration):
        return printer.print_local_configuration(value)
    if isinstance(value, ControlLoopConfig):
        return printer.print_local_configuration(value.configuration)
    if isinstance(value, GlobalProtocol):
        return printer.print_global_configuration(value)
    if isinstance(value, StateEstimationGraph):
        lines = [f"{src} -> {dst}" for src, dst in value.edges]
        return "\n".join(lines)
    if isinstance(value, TreeForest):
        out = []
        for k, tree in enumerate(value.trees, start=1):
            out.append(f"trees[{k}]: " + describe(tree))
        return "\n".join(out) or f"no estimation trees rooted at {value.root}"
    if isinstance(value, EstimationTree):
        return "\n".join(f"{src} -> {dst}" for src, dst in value.edges)
    return str(value)


def _as_configuration(value: Value, what: str) -> LocalConfiguration:
    if isinstance(value, ControlLoopConfig):
        return value.configuration
    if isinstance(value, LocalConfiguration):
        return value
    raise LangError(f"{what} expects a local configuration, got {describe(value)}")


def eval_expr(expr: Expr, env: SessionEnv) -> Value:
    if isinstance(expr, NameRef):
        value = env.lookup(expr.name, expr.pos)
        if expr.index is None:
            return value
        if not isinstance(value, TreeForest):
            raise LangError(error(f"{expr.name} is not indexable (it is {describe(value)})",
                                  expr.pos))
        if not 1 <= expr.index <= len(value.trees):
            raise LangError(error(
                f"{expr.name}[{expr.index}] is out of range; the forest has "
                f"{len(value.trees)} trees", expr.pos))
        return value.trees[expr.index - 1]

    if isinstance(expr, Literal):
        value = expr.value
        if isinstance(value, IndustrialDomain):
            diags = validate_domain(value)
            if diags:
                raise LangError(diags)
            env.active_domain = value
            return value
        if isinstance(value, Repository):
            if env.active_domain is None:
                raise LangError(error(
                    "a repository needs an active domain; declare the domain first", expr.pos))
            diags = validate_repository(value, env.active_domain)
            if diags:
                raise LangError(diags)
            return value
        if isinstance(value, ProcessGraph):
            domain = env.lookup(value.domain_name, expr.pos)
            if not isinstance(domain, IndustrialDomain):
                raise LangError(error(f"{value.domain_name!r} is not a domain", expr.pos))
            return build_process(value, domain)
        return value

    assert isinstance(expr, OpExpr)
    if expr.op == "translate":
        process = eval_expr(expr.args[0], env)
        if not isinstance(process, ProcessGraph):
            raise LangError(error(f"translate expects a process, got {describe(process)}",
                                  expr.pos))
        domain = env.lookup(process.domain_name, expr.pos)
        if not isinstance(domain, IndustrialDomain):
            raise LangError(error(f"{process.domain_name!r} is not a domain", expr.pos))
        return translate(process, domain)

    if expr.op == "traverse":
        root_name, sub = expr.args
        graph = eval_expr(sub, env)
        if not isinstance(graph, StateEstimationGraph):
            raise LangError(error(
                f"traverse expects a state estimation graph, got {describe(graph)}", expr.pos))
        node = graph.node_named(root_name)
        if node is None or not isinstance(node, StateNode):
            raise LangError(error(f"{root_name!r} is not a state node of the graph", expr.pos))
        return TreeForest(node, tuple(traverse(node, graph)))

    if expr.op == "configure":
        tree_expr, repo_expr, controller, actuator = expr.args
        tree = eval_expr(tree_expr, env)
        if isinstance(tree, TreeForest):
            raise LangError(error(
                "configure needs one tree; index the forest, e.g. trees[1]", expr.pos))
        if not isinstance(tree, EstimationTree):
            raise LangError(error(f"configure expects an estimation tree, got {describe(tree)}",
                                  expr.pos))
        repo = eval_expr(repo_expr, env)
        if not isinstance(repo, Repository):
            raise LangError(error(f"configure expects a repository, got {describe(repo)}",
                                  expr.pos))
        assert tree.graph is not None
        return configure(tree, repo, controller, actuator, tree.graph.process)

    if expr.op == "compose":
        config = _as_configuration(eval_expr(expr.args[0], env), "compose")
        try:
            return compose(config)
        except CompositionError as exc:
            # composition is the liveness certificate; on failure, tell the
            # user whether the configuration is nevertheless live (the
            # declaration-order strategy is incomplete) or genuinely broken
            from .sessions import is_live

            verdict = is_live(config, env.state_budget)
            raise LangError(error(
                f"{exc.render()}; budgeted liveness check: {verdict.outcome.value}",
                expr.pos,
            )) from exc

    if expr.op == "project":
        value = eval_expr(expr.args[0], env)
        if not isinstance(value, GlobalProtocol):
            raise LangError(error(f"project expects a global protocol, got {describe(value)}",
                                  expr.pos))
        try:
            return project(value)
        except ProjectionError as exc:
            raise LangError(error(f"projection failed for role {exc.role}: {exc}", expr.pos))

    if expr.op == "remove_device":
        process = eval_expr(expr.args[0], env)
        if not isinstance(process, ProcessGraph):
            raise LangError(error(f"remove_device expects a process, got {describe(process)}",
                                  expr.pos))
        return remove_device(process, expr.args[1])

    raise LangError(error(f"unknown operation {expr.op!r}", expr.pos))


def eval_command(cmd: Command, env: SessionEnv) -> str:
    """Evaluate one command, returning its printable output (may be empty)."""
    if isinstance(cmd, Bind):
        value = eval_expr(cmd.expr, env)
        env.bindings[cmd.name] = value
        return f"{cmd.name} : {describe(value)}"
    if isinstance(cmd, Show):
        return render(eval_expr(cmd.expr, env))
    if isinstance(cmd, Diagram):
        value = eval_expr(cmd.expr, env)
        text = mermaid.to_mermaid(value)
        if cmd.path is None:
            return text
        target = Path(cmd.path)
        if not target.is_absolute() and env.mermaid_dir is not None:
            target = env.mermaid_dir / target
        if env.quiet:
            return f"diagram suppressed ({target})"
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")
        return f"diagram written to {target}"
    assert isinstance(cmd, Eval)
    return describe(eval_expr(cmd.expr, env))


def run_source(
    text: str,
    env: SessionEnv | None = None,
    filename: str | None = None,
) -> tuple[int, list[str], SessionEnv]:
    """Parse and evaluate a script; stops at the first failing command.

    Returns (exit code, output lines, final environment).  Exit code 1 means
    diagnostics were reported.
    """
    env = env if env is not None else SessionEnv()
    outputs: list[str] = []
    try:
        commands = parse_program(text, filename)
    except LangError as exc:
        return 1, [d.render() for d in exc.diagnostics], env
    for cmd in commands:
        try:
            out = eval_command(cmd, env)
            if out and not env.quiet:
                outputs.append(out)
        except LangError as exc:
            outputs.extend(d.render() for d in exc.diagnostics)
            return 1, outputs, env
    return 0, outputs, env
