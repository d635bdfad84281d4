"""Lexer and recursive-descent parser for the surface language.

Qualified identifiers (``t.tank_mass``) are single tokens of dotted segments
with no internal whitespace; a dot followed by whitespace is the sequencing
dot.  That one tokenization rule is what disambiguates a loop binder
(``loop. ...``) from a qualified peer in an action.  Comments run from ``#``
to end of line.  Everything else is whitespace-insensitive.
"""

from __future__ import annotations

from dataclasses import dataclass

from .diagnostics import LangError, SourcePos, error
from .domain import (
    AgentTemplate,
    ClassKind,
    ComponentClass,
    EstimatorDef,
    IndustrialDomain,
    PropertyDef,
    Repository,
    TemplateKind,
    TranslationRule,
)
from .process import ComponentInstance, Device, ProcessGraph, SensingPoint
from .protocols import (
    Action,
    Direction,
    END,
    GChoice,
    GEND,
    GlobalProtocol,
    GPass,
    GRec,
    GVar,
    LChoice,
    LocalProtocol,
    LPrefix,
    LRec,
    LVar,
    free_labels,
)
from .sessions import LocalConfiguration

KEYWORDS = {
    "end", "or", "local", "global", "domain", "repository", "process",
    "device", "physical", "actuator", "sensor", "conn",
    "property", "model", "translation",
    "estimate", "sense", "control", "actuate", "using",
    "translate", "traverse", "configure", "compose", "project",
    "show", "diagram", "remove_device",
}


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident' | 'kw' | 'int' | 'string' | 'sym' | 'eof'
    value: str
    pos: SourcePos


class UnexpectedEOF(LangError):
    """Input ended mid-construct; the REPL uses this to keep buffering."""


def _is_ident_start(c: str) -> bool:
    return c.isalpha() or c == "_"


def _is_ident_char(c: str) -> bool:
    return c.isalnum() or c == "_"


def tokenize(text: str, filename: str | None = None) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def pos() -> SourcePos:
        return SourcePos(line, col, filename)

    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c.isspace():
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_pos = pos()
        if _is_ident_start(c):
            j = i
            while j < n and _is_ident_char(text[j]):
                j += 1
            # extend across dots only when a segment begins immediately after
            while j < n and text[j] == "." and j + 1 < n and _is_ident_start(text[j + 1]):
                j += 1
                while j < n and _is_ident_char(text[j]):
                    j += 1
            word = text[i:j]
            kind = "kw" if "." not in word and word in KEYWORDS else "ident"
            tokens.append(Token(kind, word, start_pos))
            col += j - i
            i = j
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token("int", text[i:j], start_pos))
            col += j - i
            i = j
            continue
        if c == '"':
            j = i + 1
            while j < n and text[j] not in ('"', "\n"):
                j += 1
            if j >= n or text[j] != '"':
                raise LangError(error("unterminated string", start_pos))
            tokens.append(Token("string", text[i + 1:j], start_pos))
            col += j + 1 - i
            i = j + 1
            continue
        two = text[i:i + 2]
        if two in (":=", "->"):
            tokens.append(Token("sym", two, start_pos))
            i += 2
            col += 2
            continue
        if c in "{}()[],:=!?@.":
            tokens.append(Token("sym", c, start_pos))
            i += 1
            col += 1
            continue
        raise LangError(error(f"unexpected character {c!r}", start_pos))
    tokens.append(Token("eof", "", pos()))
    return tokens


# --------------------------------------------------------------------------
# Expression and command nodes produced by the parser.


@dataclass(frozen=True)
class NameRef:
    name: str
    index: int | None
    pos: SourcePos


@dataclass(frozen=True)
class Literal:
    """An inline value: domain, repository, process, local config, or global."""

    value: object
    pos: SourcePos


@dataclass(frozen=True)
class OpExpr:
    """A reasoning operation applied to sub-expressions."""

    op: str  # translate | traverse | configure | compose | project | remove_device
    args: tuple[object, ...]
    pos: SourcePos


Expr = NameRef | Literal | OpExpr


@dataclass(frozen=True)
class Bind:
    name: str
    expr: Expr
    pos: SourcePos


@dataclass(frozen=True)
class Show:
    expr: Expr
    pos: SourcePos


@dataclass(frozen=True)
class Diagram:
    expr: Expr
    path: str | None
    pos: SourcePos


@dataclass(frozen=True)
class Eval:
    expr: Expr
    pos: SourcePos


Command = Bind | Show | Diagram | Eval


class Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    # -- token plumbing ----------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def at(self, kind: str, value: str | None = None) -> bool:
        t = self.peek()
        return t.kind == kind and (value is None or t.value == value)

    def advance(self) -> Token:
        t = self.tokens[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def fail(self, message: str) -> LangError:
        t = self.peek()
        if t.kind == "eof":
            return UnexpectedEOF(error(f"{message}, but input ended", t.pos))
        shown = t.value or t.kind
        return LangError(error(f"{message}, found {shown!r}", t.pos))

    def expect(self, kind: str, value: str | None = None, what: str | None = None) -> Token:
        if self.at(kind, value):
            return self.advance()
        raise self.fail(f"expected {what or value or kind}")

    def ident(self, what: str = "identifier") -> Token:
        if self.at("ident"):
            return self.advance()
        raise self.fail(f"expected {what}")

    # -- programs ----------------------------------------------------------

    def parse_program(self) -> list[Command]:
        commands: list[Command] = []
        while not self.at("eof"):
            commands.append(self.parse_command())
        return commands

    def parse_command(self) -> Command:
        t = self.peek()
        if t.kind == "ident" and self.peek(1).kind == "sym" and self.peek(1).value == ":=":
            name = self.advance().value
            self.advance()
            return Bind(name, self.parse_expr(), t.pos)
        if self.at("kw", "show"):
            self.advance()
            return Show(self.parse_expr(), t.pos)
        if self.at("kw", "diagram"):
            self.advance()
            expr = self.parse_expr()
            path = self.advance().value if self.at("string") else None
            return Diagram(expr, path, t.pos)
        return Eval(self.parse_expr(), t.pos)

    # -- expressions -------------------------------------------------------

    def parse_expr(self) -> Expr:
        t = self.peek()
        if t.kind == "kw":
            if t.value == "local":
                return self.parse_local_config()
            if t.value == "global":
                self.advance()
                return Literal(self._closed_protocol(self.parse_global(), t.pos), t.pos)
            if t.value == "domain":
                return self.parse_domain()
            if t.value == "repository":
                return self.parse_repository()
            if t.value == "process":
                return self.parse_process()
            if t.value in ("translate", "compose", "project"):
                self.advance()
                return OpExpr(t.value, (self.parse_expr(),), t.pos)
            if t.value == "traverse":
                self.advance()
                root = self.ident("a qualified state such as t.head").value
                return OpExpr("traverse", (root, self.parse_expr()), t.pos)
            if t.value == "configure":
                self.advance()
                tree = self.parse_expr()
                repo = self.parse_expr()
                controller = self.ident("a controller template name").value
                actuator = self.ident("an actuator instance name").value
                return OpExpr("configure", (tree, repo, controller, actuator), t.pos)
            if t.value == "remove_device":
                self.advance()
                proc = self.parse_expr()
                device = self.ident("a device name").value
                return OpExpr("remove_device", (proc, device), t.pos)
            raise self.fail("expected an expression")
        if t.kind == "ident":
            self.advance()
            index: int | None = None
            if self.at("sym", "["):
                self.advance()
                index = int(self.expect("int", what="an index").value)
                self.expect("sym", "]")
            return NameRef(t.value, index, t.pos)
        raise self.fail("expected an expression")

    # -- protocols ---------------------------------------------------------

    def parse_local(self) -> LocalProtocol:
        t = self.peek()
        if self.at("kw", "end"):
            self.advance()
            return END
        if t.kind != "ident":
            raise self.fail("expected a local protocol")
        nxt = self.peek(1)
        if nxt.kind == "sym" and nxt.value in ("!", "?"):
            peer = self.advance().value
            direction = Direction.SEND if self.advance().value == "!" else Direction.RECEIVE
            payload = self.ident("a message type").value
            if self.at("sym", "{"):
                branches = self.parse_branches(self.parse_local)
                return LChoice(direction, peer, payload, branches)
            self.expect("sym", ".", what="'.' or '{' after the action")
            return LPrefix(Action(direction, peer, payload), self.parse_local())
        if nxt.kind == "sym" and nxt.value == ".":
            label = self.advance().value
            self.advance()
            body = self.parse_local()
            try:
                return LRec(label, body)
            except ValueError as exc:
                raise LangError(error(str(exc), t.pos)) from exc
        self.advance()
        return LVar(t.value)

    def parse_global(self) -> GlobalProtocol:
        t = self.peek()
        if self.at("kw", "end"):
            self.advance()
            return GEND
        if t.kind != "ident":
            raise self.fail("expected a global protocol")
        nxt = self.peek(1)
        if nxt.kind == "sym" and nxt.value == "->":
            sender = self.advance().value
            self.advance()
            receiver = self.ident("a receiver").value
            self.expect("sym", ":")
            payload = self.ident("a message type").value
            pos = t.pos
            try:
                if self.at("sym", "{"):
                    branches = self.parse_branches(self.parse_global)
                    return GChoice(sender, receiver, payload, branches)
                self.expect("sym", ".", what="'.' or '{' after the message pass")
                return GPass(sender, receiver, payload, self.parse_global())
            except ValueError as exc:
                raise LangError(error(str(exc), pos)) from exc
        if nxt.kind == "sym" and nxt.value == ".":
            label = self.advance().value
            self.advance()
            body = self.parse_global()
            try:
                return GRec(label, body)
            except ValueError as exc:
                raise LangError(error(str(exc), t.pos)) from exc
        self.advance()
        return GVar(t.value)

    def parse_branches(self, sub):
        branches = []
        first = self.peek()
        while True:
            self.expect("sym", "{")
            label = self.ident("a branch label").value
            self.expect("sym", ":")
            cont = sub()
            self.expect("sym", "}")
            branches.append((label, cont))
            if self.at("kw", "or"):
                self.advance()
                continue
            break
        labels = [lbl for lbl, _ in branches]
        if len(set(labels)) != len(labels):
            raise LangError(error("choice branch labels must be distinct", first.pos))
        return tuple(branches)

    def _closed_protocol(self, proto, pos: SourcePos):
        unbound = free_labels(proto)
        if unbound:
            raise LangError(error(f"loop label {sorted(unbound)[0]!r} is not bound", pos))
        return proto

    # -- inline configurations ----------------------------------------------

    def parse_local_config(self) -> Literal:
        start = self.expect("kw", "local")
        self.expect("sym", "{")
        roles: list[tuple[str, LocalProtocol]] = []
        while not self.at("sym", "}"):
            name_tok = self.ident("a participant name")
            self.expect("sym", "=")
            proto = self._closed_protocol(self.parse_local(), name_tok.pos)
            if any(name_tok.value == p for p, _ in roles):
                raise LangError(error(f"participant {name_tok.value!r} bound twice", name_tok.pos))
            roles.append((name_tok.value, proto))
        self.expect("sym", "}")
        return Literal(LocalConfiguration(tuple(roles)), start.pos)

    # -- domains -------------------------------------------------------------

    def parse_domain(self) -> Literal:
        start = self.expect("kw", "domain")
        self.expect("sym", "{")
        properties: list[PropertyDef] = []
        model: list[EstimatorDef] = []
        classes: list[ComponentClass] = []
        rules: list[TranslationRule] = []
        while not self.at("sym", "}"):
            t = self.peek()
            if self.at("kw", "property"):
                self.advance()
                properties.extend(self.parse_property_entries())
            elif self.at("kw", "model"):
                self.advance()
                model.append(EstimatorDef(self.ident("an estimator name").value, pos=t.pos))
                while self.at("sym", ","):
                    self.advance()
                    model.append(EstimatorDef(self.ident("an estimator name").value, pos=t.pos))
            elif self.at("kw", "physical") or self.at("kw", "actuator"):
                kind = ClassKind.PHYSICAL if self.advance().value == "physical" else ClassKind.ACTUATOR
                classes.append(self.parse_class(kind, t.pos))
            elif self.at("kw", "translation"):
                self.advance()
                rules.append(self.parse_translation(t.pos))
            else:
                raise self.fail("expected a domain declaration")
        self.expect("sym", "}")
        return Literal(
            IndustrialDomain(tuple(properties), tuple(model), tuple(classes), tuple(rules)),
            start.pos,
        )

    def parse_property_entries(self) -> list[PropertyDef]:
        entries = [self.parse_property_entry()]
        while self.at("sym", ","):
            self.advance()
            entries.append(self.parse_property_entry())
        return entries

    def parse_property_entry(self) -> PropertyDef:
        name_tok = self.ident("a property name")
        labels: tuple[str, ...] = ()
        if self.at("sym", "{"):
            self.advance()
            parts = [self.ident("an enumeration label").value]
            while self.at("sym", ","):
                self.advance()
                parts.append(self.ident("an enumeration label").value)
            self.expect("sym", "}")
            labels = tuple(parts)
        return PropertyDef(name_tok.value, labels, pos=name_tok.pos)

    def parse_class(self, kind: ClassKind, pos: SourcePos) -> ComponentClass:
        name = self.ident("a class name").value
        self.expect("sym", "(")
        attrs = [self.ident("an attribute").value]
        while self.at("sym", ","):
            self.advance()
            attrs.append(self.ident("an attribute").value)
        self.expect("sym", ")")
        edges: list[tuple[str, str]] = []
        if self.at("sym", ":"):
            self.advance()
            edges.append(self.parse_plain_edge())
            while self.at("sym", ","):
                self.advance()
                edges.append(self.parse_plain_edge())
        return ComponentClass(name, kind, tuple(attrs), tuple(edges), pos=pos)

    def parse_plain_edge(self) -> tuple[str, str]:
        src = self.ident("an attribute").value
        self.expect("sym", "->")
        dst = self.ident("an attribute").value
        return (src, dst)

    def parse_translation(self, pos: SourcePos) -> TranslationRule:
        src = self.ident("a class name").value
        self.expect("sym", "->")
        dst = self.ident("a class name").value
        self.expect("sym", ":")
        edges = [self.parse_qualified_edge()]
        while self.at("sym", ","):
            self.advance()
            edges.append(self.parse_qualified_edge())
        return TranslationRule(src, dst, tuple(edges), pos=pos)

    def parse_qualified_edge(self):
        return (self.parse_qualified(), self.parse_qualified_target())

    def parse_qualified(self) -> tuple[str, str]:
        t = self.ident("a class.attribute reference")
        parts = t.value.split(".")
        if len(parts) != 2:
            raise LangError(error(f"expected class.attribute, found {t.value!r}", t.pos))
        return (parts[0], parts[1])

    def parse_qualified_target(self) -> tuple[str, str]:
        self.expect("sym", "->")
        return self.parse_qualified()

    # -- repositories ----------------------------------------------------------

    def parse_repository(self) -> Literal:
        start = self.expect("kw", "repository")
        name = self.ident("a repository name").value
        self.expect("sym", "{")
        templates: list[AgentTemplate] = []
        while not self.at("sym", "}"):
            t = self.peek()
            kinds = {
                "estimate": TemplateKind.ESTIMATE,
                "sense": TemplateKind.SENSE,
                "control": TemplateKind.CONTROL,
                "actuate": TemplateKind.ACTUATE,
            }
            if t.kind == "kw" and t.value in kinds:
                self.advance()
                subject = self.ident("a subject name").value
                self.expect("kw", "using")
                tmpl_name = self.ident("a template name").value
                self.expect("sym", "=")
                proto = self._closed_protocol(self.parse_local(), t.pos)
                templates.append(
                    AgentTemplate(kinds[t.value], subject, tmpl_name, proto, pos=t.pos)
                )
            else:
                raise self.fail("expected estimate, sense, control, or actuate")
        self.expect("sym", "}")
        return Literal(Repository(name, tuple(templates), pos=start.pos), start.pos)

    # -- processes ---------------------------------------------------------------

    def parse_process(self) -> Literal:
        start = self.expect("kw", "process")
        domain_name = self.ident("a domain name").value
        self.expect("sym", "{")
        devices: list[Device] = []
        components: list[ComponentInstance] = []
        sensors: list[SensingPoint] = []
        connections: list[tuple[str, str]] = []
        while not self.at("sym", "}"):
            t = self.peek()
            if self.at("kw", "device"):
                self.advance()
                devices.append(Device(self.ident("a device name").value, pos=t.pos))
                while self.at("sym", ","):
                    self.advance()
                    devices.append(Device(self.ident("a device name").value, pos=t.pos))
            elif self.at("kw", "physical") or self.at("kw", "actuator"):
                is_actuator = self.advance().value == "actuator"
                entries = [self.parse_instance(t.pos)]
                while self.at("sym", ","):
                    self.advance()
                    entries.append(self.parse_instance(t.pos))
                class_name = self.ident("a class name").value
                for name, device in entries:
                    components.append(
                        ComponentInstance(name, class_name, device, is_actuator, pos=t.pos)
                    )
            elif self.at("kw", "sensor"):
                self.advance()
                entries = [self.parse_sensor_entry()]
                while self.at("sym", ","):
                    self.advance()
                    entries.append(self.parse_sensor_entry())
                prop = self.ident("a property name").value
                for name, device in entries:
                    sensors.append(SensingPoint(name, prop, device, pos=t.pos))
            elif self.at("kw", "conn"):
                self.advance()
                connections.append(self.parse_conn_entry())
                while self.at("sym", ","):
                    self.advance()
                    connections.append(self.parse_conn_entry())
            else:
                raise self.fail("expected device, physical, actuator, sensor, or conn")
        self.expect("sym", "}")
        return Literal(
            ProcessGraph(domain_name, tuple(devices), tuple(components), tuple(sensors),
                         tuple(connections)),
            start.pos,
        )

    def parse_instance(self, pos: SourcePos) -> tuple[str, str | None]:
        name = self.ident("a component name").value
        device = None
        if self.at("sym", "@"):
            self.advance()
            device = self.ident("a device name").value
        return (name, device)

    def parse_sensor_entry(self) -> tuple[str, str]:
        name = self.ident("a sensor name").value
        self.expect("sym", "@", what="'@device' on the sensor")
        device = self.ident("a device name").value
        return (name, device)

    def parse_conn_entry(self) -> tuple[str, str]:
        src = self.ident("a node name").value
        self.expect("sym", "->")
        dst = self.ident("a node name").value
        return (src, dst)


def parse_program(text: str, filename: str | None = None) -> list[Command]:
    """Parse a script into commands; raises LangError with positioned diagnostics."""
    return Parser(tokenize(text, filename)).parse_program()


def parse_expression(text: str, filename: str | None = None) -> Expr:
    parser = Parser(tokenize(text, filename))
    expr = parser.parse_expr()
    if not parser.at("eof"):
        raise parser.fail("unexpected trailing input")
    return expr
