"""Behavioural-type terms: local and global protocols and their syntactic operations.

Local protocols describe one agent's send/receive behaviour as a term; global
protocols describe a whole choreography of message passes.  Both are immutable
trees, compared structurally, so they can be shared freely and used as keys in
the state-exploration caches of the session engine.

A choice is restricted at construction to the only form the composition rules
can handle: one peer, one direction, and pairwise-distinct branch labels drawn
from a named enumeration.  Recursion must be guarded (`loop t. t` is rejected),
which keeps every operation here total and terminating.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)*\Z")


def is_identifier(name: str) -> bool:
    """True for non-empty dotted identifiers such as ``u`` or ``t.tank_mass``."""
    return bool(_IDENT_RE.match(name))


class Direction(Enum):
    SEND = "!"
    RECEIVE = "?"


@dataclass(frozen=True)
class Action:
    """One observable step of a single agent: send or receive a payload to/from a peer."""

    direction: Direction
    peer: str
    payload: str

    def __str__(self) -> str:
        return f"{self.peer}{self.direction.value}{self.payload}"

    def dual(self, own_name: str) -> Action:
        """The matching action on the other side of the synchronisation."""
        flipped = Direction.RECEIVE if self.direction is Direction.SEND else Direction.SEND
        return Action(flipped, own_name, self.payload)


def send(peer: str, payload: str) -> Action:
    return Action(Direction.SEND, peer, payload)


def receive(peer: str, payload: str) -> Action:
    return Action(Direction.RECEIVE, peer, payload)


class LocalProtocol:
    """Base class of local protocol terms; see the concrete variants below."""

    __slots__ = ()


@dataclass(frozen=True)
class LEnd(LocalProtocol):
    def __repr__(self) -> str:
        return "LEnd()"


END = LEnd()


@dataclass(frozen=True)
class LVar(LocalProtocol):
    label: str


@dataclass(frozen=True)
class LPrefix(LocalProtocol):
    action: Action
    cont: LocalProtocol


@dataclass(frozen=True)
class LChoice(LocalProtocol):
    """Branching over the labels of one enumeration, with a single peer and direction.

    ``enum`` is the surface enumeration name (``signal`` in ``u!signal {ON: ..}``);
    the branch labels are the message types actually exchanged.
    """

    direction: Direction
    peer: str
    enum: str
    branches: tuple[tuple[str, LocalProtocol], ...]

    def __post_init__(self) -> None:
        if not self.branches:
            raise ValueError("choice must have at least one branch")
        labels = [lbl for lbl, _ in self.branches]
        if len(set(labels)) != len(labels):
            raise ValueError(f"choice branch labels must be distinct: {labels}")

    def branch_actions(self) -> tuple[Action, ...]:
        return tuple(Action(self.direction, self.peer, lbl) for lbl, _ in self.branches)


@dataclass(frozen=True)
class LRec(LocalProtocol):
    label: str
    body: LocalProtocol

    def __post_init__(self) -> None:
        if not _guarded(self.body, self.label):
            raise ValueError(f"unguarded recursion on label {self.label!r}")


def _guarded(term: LocalProtocol | GlobalProtocol, label: str, under_action: bool = False) -> bool:
    # A free occurrence of the label must sit beneath at least one action.
    if isinstance(term, (LVar, GVar)):
        return term.label != label or under_action
    if isinstance(term, (LEnd, GEnd)):
        return True
    if isinstance(term, LPrefix):
        return _guarded(term.cont, label, True)
    if isinstance(term, GPass):
        return _guarded(term.cont, label, True)
    if isinstance(term, (LChoice, GChoice)):
        return all(_guarded(cont, label, True) for _, cont in term.branches)
    if isinstance(term, (LRec, GRec)):
        if term.label == label:  # inner binder shadows
            return True
        return _guarded(term.body, label, under_action)
    raise TypeError(f"not a protocol term: {term!r}")


class GlobalProtocol:
    """Base class of global protocol (choreography) terms."""

    __slots__ = ()


@dataclass(frozen=True)
class GEnd(GlobalProtocol):
    def __repr__(self) -> str:
        return "GEnd()"


GEND = GEnd()


@dataclass(frozen=True)
class GVar(GlobalProtocol):
    label: str


@dataclass(frozen=True)
class GPass(GlobalProtocol):
    sender: str
    receiver: str
    payload: str
    cont: GlobalProtocol

    def __post_init__(self) -> None:
        if self.sender == self.receiver:
            raise ValueError(f"self-communication: {self.sender}")


@dataclass(frozen=True)
class GChoice(GlobalProtocol):
    sender: str
    receiver: str
    enum: str
    branches: tuple[tuple[str, GlobalProtocol], ...]

    def __post_init__(self) -> None:
        if self.sender == self.receiver:
            raise ValueError(f"self-communication: {self.sender}")
        if not self.branches:
            raise ValueError("choice must have at least one branch")
        labels = [lbl for lbl, _ in self.branches]
        if len(set(labels)) != len(labels):
            raise ValueError(f"choice branch labels must be distinct: {labels}")


@dataclass(frozen=True)
class GRec(GlobalProtocol):
    label: str
    body: GlobalProtocol

    def __post_init__(self) -> None:
        if not _guarded(self.body, self.label):
            raise ValueError(f"unguarded recursion on label {self.label!r}")


# ---------------------------------------------------------------------------
# Syntactic operations on local protocols.
#
# size and participants use explicit work lists so they stay safe on very long
# prefix chains (the composition complexity checks build chains of size 2**10).


def participants(p: LocalProtocol) -> frozenset[str]:
    """Peers appearing in any action of ``p``; End and labels contribute nothing."""
    out: set[str] = set()
    stack: list[LocalProtocol] = [p]
    while stack:
        t = stack.pop()
        if isinstance(t, LPrefix):
            out.add(t.action.peer)
            stack.append(t.cont)
        elif isinstance(t, LChoice):
            out.add(t.peer)
            stack.extend(cont for _, cont in t.branches)
        elif isinstance(t, LRec):
            stack.append(t.body)
    return frozenset(out)


def size(p: LocalProtocol) -> int:
    """Syntactic size: End and labels count 1, actions add 1, recursion is transparent."""
    total = 0
    stack: list[LocalProtocol] = [p]
    while stack:
        t = stack.pop()
        if isinstance(t, (LEnd, LVar)):
            total += 1
        elif isinstance(t, LPrefix):
            total += 1
            stack.append(t.cont)
        elif isinstance(t, LChoice):
            total += len(t.branches)
            stack.extend(cont for _, cont in t.branches)
        elif isinstance(t, LRec):
            stack.append(t.body)
        else:
            raise TypeError(f"not a local protocol: {t!r}")
    return total


def substitute(target: LocalProtocol, replacement: LocalProtocol, label: str) -> LocalProtocol:
    """Replace free occurrences of the loop label in ``target`` with ``replacement``.

    An inner ``loop`` binding the same label shadows: its body is left untouched.
    """
    if isinstance(target, LEnd):
        return target
    if isinstance(target, LVar):
        return replacement if target.label == label else target
    if isinstance(target, LPrefix):
        return LPrefix(target.action, substitute(target.cont, replacement, label))
    if isinstance(target, LChoice):
        branches = tuple((lbl, substitute(cont, replacement, label)) for lbl, cont in target.branches)
        return LChoice(target.direction, target.peer, target.enum, branches)
    if isinstance(target, LRec):
        if target.label == label:
            return target
        return LRec(target.label, substitute(target.body, replacement, label))
    raise TypeError(f"not a local protocol: {target!r}")


def local_step(p: LocalProtocol, a: Action) -> tuple[LocalProtocol, ...]:
    """All continuations reachable by observing ``a`` once (empty when none exist).

    Prefixes match exactly, a choice steps through any branch whose action
    equals ``a``, and recursion unfolds once before being examined.
    """
    if isinstance(p, (LEnd, LVar)):
        return ()
    if isinstance(p, LPrefix):
        return (p.cont,) if p.action == a else ()
    if isinstance(p, LChoice):
        if a.direction is not p.direction or a.peer != p.peer:
            return ()
        results = []
        for lbl, cont in p.branches:
            if lbl == a.payload and cont not in results:
                results.append(cont)
        return tuple(results)
    if isinstance(p, LRec):
        return local_step(substitute(p.body, p, p.label), a)
    raise TypeError(f"not a local protocol: {p!r}")


def head_actions(p: LocalProtocol) -> tuple[Action, ...]:
    """The actions ``p`` can observe right now, in branch order."""
    if isinstance(p, (LEnd, LVar)):
        return ()
    if isinstance(p, LPrefix):
        return (p.action,)
    if isinstance(p, LChoice):
        return p.branch_actions()
    if isinstance(p, LRec):
        return head_actions(p.body)
    raise TypeError(f"not a local protocol: {p!r}")


def free_labels(p: LocalProtocol | GlobalProtocol) -> frozenset[str]:
    out: set[str] = set()

    def walk(t: LocalProtocol | GlobalProtocol, bound: frozenset[str]) -> None:
        if isinstance(t, (LVar, GVar)):
            if t.label not in bound:
                out.add(t.label)
        elif isinstance(t, LPrefix):
            walk(t.cont, bound)
        elif isinstance(t, GPass):
            walk(t.cont, bound)
        elif isinstance(t, (LChoice, GChoice)):
            for _, cont in t.branches:
                walk(cont, bound)
        elif isinstance(t, (LRec, GRec)):
            walk(t.body, bound | {t.label})

    walk(p, frozenset())
    return frozenset(out)


def is_closed(p: LocalProtocol | GlobalProtocol) -> bool:
    """True when every loop label is bound by an enclosing loop."""
    return not free_labels(p)


def global_participants(g: GlobalProtocol) -> tuple[str, ...]:
    """Participants of a global protocol, ordered by first appearance."""
    seen: list[str] = []

    def walk(t: GlobalProtocol) -> None:
        if isinstance(t, GPass):
            for r in (t.sender, t.receiver):
                if r not in seen:
                    seen.append(r)
            walk(t.cont)
        elif isinstance(t, GChoice):
            for r in (t.sender, t.receiver):
                if r not in seen:
                    seen.append(r)
            for _, cont in t.branches:
                walk(cont)
        elif isinstance(t, GRec):
            walk(t.body)

    walk(g)
    return tuple(seen)


def prefix_chain(actions: list[Action], tail: LocalProtocol = END) -> LocalProtocol:
    """Fold a list of actions into a prefix chain without deep recursion."""
    p = tail
    for a in reversed(actions):
        p = LPrefix(a, p)
    return p


def rename_participants(p: LocalProtocol, mapping: dict[str, str]) -> LocalProtocol:
    """Rename action peers; participants not in the mapping are untouched."""
    if isinstance(p, (LEnd, LVar)):
        return p
    if isinstance(p, LPrefix):
        act = p.action
        return LPrefix(
            Action(act.direction, mapping.get(act.peer, act.peer), act.payload),
            rename_participants(p.cont, mapping),
        )
    if isinstance(p, LChoice):
        return LChoice(
            p.direction,
            mapping.get(p.peer, p.peer),
            p.enum,
            tuple((lbl, rename_participants(cont, mapping)) for lbl, cont in p.branches),
        )
    if isinstance(p, LRec):
        return LRec(p.label, rename_participants(p.body, mapping))
    raise TypeError(f"not a local protocol: {p!r}")


def sort_branches(p: LocalProtocol | GlobalProtocol):
    """The same protocol with every choice's branches sorted by label.

    Protocol equality is structural and branch order is significant; this
    canonical form supports the weaker comparison needed when two sources
    write the same choice in different branch orders (branch labels are
    pairwise distinct, so sorting is a congruence).
    """
    if isinstance(p, (LEnd, LVar, GEnd, GVar)):
        return p
    if isinstance(p, LPrefix):
        return LPrefix(p.action, sort_branches(p.cont))
    if isinstance(p, GPass):
        return GPass(p.sender, p.receiver, p.payload, sort_branches(p.cont))
    if isinstance(p, LChoice):
        branches = tuple(sorted(((lbl, sort_branches(c)) for lbl, c in p.branches)))
        return LChoice(p.direction, p.peer, p.enum, branches)
    if isinstance(p, GChoice):
        branches = tuple(sorted(((lbl, sort_branches(c)) for lbl, c in p.branches)))
        return GChoice(p.sender, p.receiver, p.enum, branches)
    if isinstance(p, LRec):
        return LRec(p.label, sort_branches(p.body))
    if isinstance(p, GRec):
        return GRec(p.label, sort_branches(p.body))
    raise TypeError(f"not a protocol term: {p!r}")
