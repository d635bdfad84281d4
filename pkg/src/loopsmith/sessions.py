"""Configurations of interacting agents: synchronisation, liveness, composition.

A local configuration maps participants to local protocols.  Participants
synchronise over dual send/receive actions, which induces a finite transition
graph (recursion is never unfolded into the state key, so guarded protocols
revisit loop states instead of growing).  On top of that graph sit the
budgeted deadlock-freedom and liveness checks.

``compose`` and ``project`` implement the projection/composition relation:
five syntactic rules relating a configuration to the global protocol it
enacts.  Composition succeeding is the cheap liveness certificate; the
exhaustive checks exist to validate it at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .protocols import (
    END,
    Direction,
    GChoice,
    GEnd,
    GEND,
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
    global_participants,
    head_actions,
    local_step,
    receive,
    send,
    size,
)


@dataclass(frozen=True)
class CommAction:
    """A message pass: sender hands one payload to receiver."""

    sender: str
    receiver: str
    payload: str

    def __post_init__(self) -> None:
        if self.sender == self.receiver:
            raise ValueError(f"self-communication: {self.sender}")

    def __str__(self) -> str:
        return f"{self.sender}->{self.receiver}:{self.payload}"


@dataclass(frozen=True)
class LocalConfiguration:
    """A finite map from participants to local protocols, in declaration order.

    The order matters twice: composition scans for the earliest ready sender,
    and printing reproduces the source layout.  Equality includes the order.
    """

    roles: tuple[tuple[str, LocalProtocol], ...]

    def __post_init__(self) -> None:
        names = [p for p, _ in self.roles]
        if len(set(names)) != len(names):
            dup = next(n for n in names if names.count(n) > 1)
            raise ValueError(f"participant bound twice: {dup}")

    @staticmethod
    def of(pairs: Iterable[tuple[str, LocalProtocol]]) -> LocalConfiguration:
        return LocalConfiguration(tuple(pairs))

    def participants(self) -> tuple[str, ...]:
        return tuple(p for p, _ in self.roles)

    def __contains__(self, participant: str) -> bool:
        return any(p == participant for p, _ in self.roles)

    def __getitem__(self, participant: str) -> LocalProtocol:
        for p, proto in self.roles:
            if p == participant:
                return proto
        raise KeyError(participant)

    def items(self) -> tuple[tuple[str, LocalProtocol], ...]:
        return self.roles

    def rebind(self, updates: dict[str, LocalProtocol]) -> LocalConfiguration:
        """A copy with some participants rebound; order and domain unchanged."""
        unknown = set(updates) - set(self.participants())
        if unknown:
            raise KeyError(sorted(unknown)[0])
        return LocalConfiguration(
            tuple((p, updates.get(p, proto)) for p, proto in self.roles)
        )

    def merge(self, other: LocalConfiguration) -> LocalConfiguration:
        """Union of configurations; defined only on disjoint domains."""
        overlap = set(self.participants()) & set(other.participants())
        if overlap:
            raise ValueError(f"domains overlap on {sorted(overlap)}")
        return LocalConfiguration(self.roles + other.roles)


def active_participants(c: LocalConfiguration) -> tuple[str, ...]:
    """Participants not bound to the inactive protocol, in declaration order."""
    return tuple(p for p, proto in c.items() if not isinstance(proto, LEnd))


def rename_configuration(c: LocalConfiguration, mapping: dict[str, str]) -> LocalConfiguration:
    """Rename participants consistently in binders and in every protocol."""
    from .protocols import rename_participants

    return LocalConfiguration(tuple(
        (mapping.get(p, p), rename_participants(proto, mapping)) for p, proto in c.items()
    ))


def configs_equal_up_to_branch_order(a: LocalConfiguration, b: LocalConfiguration) -> bool:
    """Equality after sorting every choice's branches by label.

    Needed to compare two sources that write one choice in different branch
    orders; everywhere else configuration equality stays strict.
    """
    from .protocols import sort_branches

    if a.participants() != b.participants():
        return False
    return all(sort_branches(pa) == sort_branches(pb)
               for (_, pa), (_, pb) in zip(a.items(), b.items()))


def config_size(c: LocalConfiguration) -> int:
    return sum(size(proto) for _, proto in c.items())


def enabled(c: LocalConfiguration) -> tuple[CommAction, ...]:
    """Every synchronisation the configuration can perform right now.

    Computed by pairing each participant's available send actions with a
    matching receive at the peer; ordered by sender declaration, then branch
    order.
    """
    out: list[CommAction] = []
    for p, proto in c.items():
        for act in head_actions(proto):
            if act.direction is not Direction.SEND:
                continue
            q = act.peer
            if q not in c or q == p:
                continue
            if receive(p, act.payload) in head_actions(c[q]):
                cand = CommAction(p, q, act.payload)
                if cand not in out:
                    out.append(cand)
    return tuple(out)


def comm_step(c: LocalConfiguration, a: CommAction) -> LocalConfiguration | None:
    """Synchronise sender and receiver over ``a``; None when impossible.

    Both continuations are rebound, every other binding is untouched, so the
    domain of the configuration is preserved.
    """
    if a.sender not in c or a.receiver not in c:
        return None
    sent = local_step(c[a.sender], send(a.receiver, a.payload))
    received = local_step(c[a.receiver], receive(a.sender, a.payload))
    if not sent or not received:
        return None
    return c.rebind({a.sender: sent[0], a.receiver: received[0]})


class Outcome(Enum):
    HOLDS = "holds"
    FAILS = "fails"
    BUDGET_EXCEEDED = "budget_exceeded"


@dataclass(frozen=True)
class CheckResult:
    outcome: Outcome
    states_explored: int = 0
    counterexample: tuple[CommAction, ...] | None = None
    stuck_participant: str | None = None


@dataclass
class _StateGraph:
    states: list[LocalConfiguration]
    edges: list[list[tuple[CommAction, int]]]
    parents: list[tuple[int, CommAction] | None]
    truncated: bool


def _explore(c: LocalConfiguration, state_budget: int) -> _StateGraph:
    index: dict[LocalConfiguration, int] = {c: 0}
    states = [c]
    edges: list[list[tuple[CommAction, int]]] = [[]]
    parents: list[tuple[int, CommAction] | None] = [None]
    frontier = [0]
    truncated = False
    while frontier:
        nid = frontier.pop(0)
        state = states[nid]
        for act in enabled(state):
            succ = comm_step(state, act)
            assert succ is not None
            if succ in index:
                edges[nid].append((act, index[succ]))
                continue
            if len(states) >= state_budget:
                truncated = True
                continue
            index[succ] = len(states)
            states.append(succ)
            edges.append([])
            parents.append((nid, act))
            edges[nid].append((act, len(states) - 1))
            frontier.append(len(states) - 1)
    return _StateGraph(states, edges, parents, truncated)


def _path_to(graph: _StateGraph, nid: int) -> tuple[CommAction, ...]:
    path: list[CommAction] = []
    at = nid
    while graph.parents[at] is not None:
        parent, act = graph.parents[at]  # type: ignore[misc]
        path.append(act)
        at = parent
    return tuple(reversed(path))


def is_deadlock_free(c: LocalConfiguration, state_budget: int = 100_000) -> CheckResult:
    """Every reachable configuration can step or has only inactive participants."""
    graph = _explore(c, state_budget)
    for nid, state in enumerate(graph.states):
        if not graph.edges[nid] and active_participants(state):
            if graph.truncated:
                break  # the stuck state may be an artifact of truncation
            return CheckResult(Outcome.FAILS, len(graph.states), _path_to(graph, nid))
    if graph.truncated:
        return CheckResult(Outcome.BUDGET_EXCEEDED, len(graph.states))
    return CheckResult(Outcome.HOLDS, len(graph.states))


def is_live(c: LocalConfiguration, state_budget: int = 100_000) -> CheckResult:
    """At every reachable configuration, every active participant can eventually act.

    Implemented per participant over the memoised state graph: a state
    satisfies the participant's clause when it can reach (forwards) some state
    with an enabled action involving that participant.
    """
    graph = _explore(c, state_budget)
    if graph.truncated:
        return CheckResult(Outcome.BUDGET_EXCEEDED, len(graph.states))
    n = len(graph.states)
    reverse: list[list[int]] = [[] for _ in range(n)]
    for nid, outs in enumerate(graph.edges):
        for _, succ in outs:
            reverse[succ].append(nid)

    for participant in c.participants():
        involved = [
            nid
            for nid, outs in enumerate(graph.edges)
            if any(act.sender == participant or act.receiver == participant for act, _ in outs)
        ]
        can_reach = [False] * n
        stack = list(involved)
        for nid in involved:
            can_reach[nid] = True
        while stack:
            nid = stack.pop()
            for pred in reverse[nid]:
                if not can_reach[pred]:
                    can_reach[pred] = True
                    stack.append(pred)
        for nid, state in enumerate(graph.states):
            if participant in active_participants(state) and not can_reach[nid]:
                return CheckResult(
                    Outcome.FAILS, n, _path_to(graph, nid), stuck_participant=participant
                )
    return CheckResult(Outcome.HOLDS, n)


# ---------------------------------------------------------------------------
# Projection / composition.


class CompositionError(Exception):
    """Composition got stuck: carries the failing rule and the stuck sub-configuration."""

    def __init__(self, rule: str, message: str, config: LocalConfiguration,
                 participants: tuple[str, ...] = ()):
        self.rule = rule
        self.config = config
        self.participants = participants
        super().__init__(message)

    def render(self) -> str:
        who = f" (participants {', '.join(self.participants)})" if self.participants else ""
        return f"composition failed at rule {self.rule}{who}: {self}"


class ProjectionError(Exception):
    """A global protocol is not projectable onto some role."""

    def __init__(self, role: str, message: str):
        self.role = role
        super().__init__(message)


def _ready_pair(c: LocalConfiguration) -> tuple[str, str, LocalProtocol, LocalProtocol] | None:
    """First (sender, receiver) whose heads are exactly dual, scanning declaration order."""
    for p, proto in c.items():
        if isinstance(proto, LPrefix) and proto.action.direction is Direction.SEND:
            q = proto.action.peer
            if q not in c or q == p:
                continue
            qproto = c[q]
            if (
                isinstance(qproto, LPrefix)
                and qproto.action == receive(p, proto.action.payload)
            ):
                return p, q, proto, qproto
        elif isinstance(proto, LChoice) and proto.direction is Direction.SEND:
            q = proto.peer
            if q not in c or q == p:
                continue
            qproto = c[q]
            if (
                isinstance(qproto, LChoice)
                and qproto.direction is Direction.RECEIVE
                and qproto.peer == p
                and qproto.enum == proto.enum
                and {lbl for lbl, _ in qproto.branches} == {lbl for lbl, _ in proto.branches}
            ):
                return p, q, proto, qproto
    return None


def compose(c: LocalConfiguration) -> GlobalProtocol:
    """Compose the configuration into the global protocol it enacts.

    Deterministic: whenever several pairs could synchronise, the sender
    earliest in declaration order wins, and loop entry happens only when no
    message pass is ready and every active role fronts the same loop label.
    Raises CompositionError with the stuck sub-configuration otherwise.
    """
    g, _ = compose_with_steps(c)
    return g


def compose_with_steps(c: LocalConfiguration) -> tuple[GlobalProtocol, int]:
    """Like :func:`compose` but also reports the number of rule applications."""
    steps = 0

    def run(config: LocalConfiguration) -> GlobalProtocol:
        nonlocal steps
        # The linear spine (message passes and loop entries) is built
        # iteratively so arbitrarily long prefix chains cannot overflow the
        # interpreter stack; only choice branches recurse.
        frames: list[tuple[str, ...]] = []
        result: GlobalProtocol
        while True:
            items = config.items()
            if all(isinstance(proto, LEnd) for _, proto in items):
                steps += max(len(items), 1)
                result = GEND
                break
            if all(isinstance(proto, LVar) for _, proto in items):
                labels = {proto.label for _, proto in items}  # type: ignore[union-attr]
                if len(labels) != 1:
                    raise CompositionError(
                        "var", f"mixed loop labels {sorted(labels)}", config
                    )
                steps += len(items)
                result = GVar(labels.pop())
                break

            pair = _ready_pair(config)
            if pair is not None:
                p, q, pproto, qproto = pair
                if isinstance(pproto, LPrefix):
                    assert isinstance(qproto, LPrefix)
                    steps += 2
                    frames.append(("pass", p, q, pproto.action.payload))
                    config = config.rebind({p: pproto.cont, q: qproto.cont})
                    continue
                assert isinstance(pproto, LChoice) and isinstance(qproto, LChoice)
                steps += 2 * len(pproto.branches)
                recv = dict(qproto.branches)
                branches = tuple(
                    (lbl, run(config.rebind({p: cont, q: recv[lbl]})))
                    for lbl, cont in pproto.branches
                )
                result = GChoice(p, q, pproto.enum, branches)
                break

            live = [(p, proto) for p, proto in items if not isinstance(proto, LEnd)]
            if live and all(isinstance(proto, LRec) for _, proto in live):
                labels = {proto.label for _, proto in live}  # type: ignore[union-attr]
                if len(labels) != 1:
                    raise CompositionError(
                        "recursion",
                        f"mixed loop labels {sorted(labels)}",
                        config,
                        tuple(p for p, _ in live),
                    )
                label = labels.pop()
                steps += 1
                frames.append(("rec", label))
                config = LocalConfiguration(
                    tuple(
                        (p, LVar(label) if isinstance(proto, LEnd) else proto.body)  # type: ignore[union-attr]
                        for p, proto in items
                    )
                )
                continue

            raise CompositionError(
                "message-pass",
                "no dual send/receive pair is ready",
                config,
                tuple(p for p, _ in live),
            )

        for frame in reversed(frames):
            if frame[0] == "pass":
                _, p, q, payload = frame
                result = GPass(p, q, payload, result)
            else:
                result = GRec(frame[1], result)
        return result

    return run(c), steps


def project(g: GlobalProtocol, roles: Sequence[str] | None = None) -> LocalConfiguration:
    """Project a global protocol onto each role, yielding a local configuration.

    ``roles`` must cover every participant of ``g``; extra roles come out
    bound to End.  When omitted, the participants of ``g`` are used in order
    of first appearance.
    """
    wanted = tuple(roles) if roles is not None else global_participants(g)
    missing = set(global_participants(g)) - set(wanted)
    if missing:
        raise ValueError(f"roles must cover participants of the protocol, missing {sorted(missing)}")

    def proj(term: GlobalProtocol, r: str) -> LocalProtocol:
        if isinstance(term, GEnd):
            return END
        if isinstance(term, GVar):
            return LVar(term.label)
        if isinstance(term, GPass):
            cont = proj(term.cont, r)
            if r == term.sender:
                return LPrefix(send(term.receiver, term.payload), cont)
            if r == term.receiver:
                return LPrefix(receive(term.sender, term.payload), cont)
            return cont
        if isinstance(term, GChoice):
            if r == term.sender:
                return LChoice(
                    Direction.SEND, term.receiver, term.enum,
                    tuple((lbl, proj(cont, r)) for lbl, cont in term.branches),
                )
            if r == term.receiver:
                return LChoice(
                    Direction.RECEIVE, term.sender, term.enum,
                    tuple((lbl, proj(cont, r)) for lbl, cont in term.branches),
                )
            projections = [proj(cont, r) for _, cont in term.branches]
            first = projections[0]
            if any(p != first for p in projections[1:]):
                raise ProjectionError(
                    r,
                    f"branches of the {term.enum} choice between {term.sender} and "
                    f"{term.receiver} project differently onto {r}",
                )
            return first
        if isinstance(term, GRec):
            body = proj(term.body, r)
            if body == LVar(term.label):
                return END
            try:
                return LRec(term.label, body)
            except ValueError as exc:
                raise ProjectionError(r, f"loop {term.label} is unguarded for {r}: {exc}") from exc
        raise TypeError(f"not a global protocol: {term!r}")

    return LocalConfiguration(tuple((r, proj(g, r)) for r in wanted))
