"""Independent estimation-tree oracle: exhaustive subset enumeration.

Instead of recursive path-pruned construction, enumerate every subset of
sensing and estimator nodes, then exhaustively assign a resolver from the
subset to each state the root pulls in, and keep the assignments that close
into a valid tree using every chosen node exactly.  Slow and simple on
purpose; disagreements with the engine's traversal are bugs.
"""

from __future__ import annotations

from itertools import combinations

import loopsmith as ls
from loopsmith.estimation import EstimatorNode, SensingNode, StateNode


def brute_force_trees(root: StateNode, g: ls.StateEstimationGraph):
    """Set of (root, frozenset(edges)) for every valid estimation tree."""
    resolvers = [n for n in g.nodes if isinstance(n, (SensingNode, EstimatorNode))]
    found = set()
    for r in range(1, len(resolvers) + 1):
        for subset in combinations(resolvers, r):
            for edges in _assignments(root, frozenset(subset), g):
                found.add((root, edges))
    return found


def _assignments(root: StateNode, chosen: frozenset, g: ls.StateEstimationGraph):
    """Every valid tree over exactly this resolver set."""
    sensing_chosen = frozenset(n for n in chosen if isinstance(n, SensingNode))
    est_chosen = chosen - sensing_chosen
    results: list[frozenset] = []

    def rec(pending, states_seen, edges, used_est, used_sense):
        if not pending:
            if used_sense == sensing_chosen and used_est == est_chosen \
                    and _is_tree(root, edges):
                if edges not in results:
                    results.append(edges)
            return
        state, rest = pending[0], pending[1:]
        for resolver in g.in_nodes(state):
            if resolver not in chosen:
                continue
            if isinstance(resolver, SensingNode):
                rec(rest, states_seen, edges | {(resolver, state)},
                    used_est, used_sense | {resolver})
                continue
            if resolver in used_est:
                continue  # one output per estimator
            inputs = [
                n for n in g.in_nodes(resolver)
                if isinstance(n, StateNode) and n != state and not g.is_static(n)
            ]
            if any(n in states_seen for n in inputs):
                continue  # each state enters the tree once
            rec(
                rest + tuple(inputs),
                states_seen | frozenset(inputs),
                edges | {(resolver, state)} | {(n, resolver) for n in inputs},
                used_est | {resolver},
                used_sense,
            )

    rec((root,), frozenset({root}), frozenset(), frozenset(), frozenset())
    return results


def _is_tree(root: StateNode, edges: frozenset) -> bool:
    parents: dict = {}
    for child, parent in edges:
        if child in parents:
            return False  # two consumers for one node
        parents[child] = parent
    for node in parents:
        seen = set()
        at = node
        while at in parents:
            if at in seen:
                return False
            seen.add(at)
            at = parents[at]
        if at != root:
            return False
    return True
