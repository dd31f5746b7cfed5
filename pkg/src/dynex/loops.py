"""Feedback-loop enumeration and polarity classification on signed digraphs.

A feedback cycle is balancing when it carries an odd number of negative
links and reinforcing otherwise; that parity rule is the definition under
test throughout this module. Cycle enumeration is a bounded variant of the
anchored depth-first search behind Johnson-style elementary-circuit
algorithms: cycles are searched from each node in increasing order using only
nodes that sort at or after the anchor, which yields every elementary cycle
exactly once and already rotation-normalized (the lexicographically smallest
node first).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

from .errors import ConfigError
from .model import SignedDigraph


class Polarity(enum.Enum):
    BALANCING = "balancing"
    REINFORCING = "reinforcing"


@dataclass(frozen=True)
class Cycle:
    """An elementary cycle, stored rotation-normalized.

    ``nodes`` are distinct and start at the lexicographically smallest member;
    ``edge_signs[i]`` is the sign of the edge nodes[i] -> nodes[(i+1) % n].
    """

    nodes: tuple[str, ...]
    edge_signs: tuple[int, ...]

    def __post_init__(self):
        if len(self.nodes) != len(self.edge_signs) or not self.nodes:
            raise ConfigError("cycle needs one edge sign per node")
        if len(set(self.nodes)) != len(self.nodes):
            raise ConfigError("cycle nodes must be distinct")
        if min(self.nodes) != self.nodes[0]:
            raise ConfigError("cycle must start at its lexicographically smallest node")


def classify(cycle: Cycle) -> Polarity:
    """Balancing iff the cycle carries an odd number of negative links."""
    negatives = sum(1 for s in cycle.edge_signs if s < 0)
    return Polarity.BALANCING if negatives % 2 == 1 else Polarity.REINFORCING


@dataclass(frozen=True)
class LoopReport:
    """Enumerated cycles with polarities; ``truncated`` flags skipped long cycles."""

    cycles: tuple[tuple[Cycle, Polarity], ...]
    truncated: bool = False

    def by_polarity(self, polarity: Polarity) -> tuple[Cycle, ...]:
        return tuple(c for c, p in self.cycles if p is polarity)


def _search(adj, nodes, max_len, budget=None):
    """Yield rotation-normalized cycles of length <= max_len.

    Anchored DFS: for each start node (ascending), explore only nodes sorted
    strictly after it, so each elementary cycle appears exactly once, anchored
    at its smallest node. ``budget`` stops the search once that many cycles
    have been produced (used by the truncation probe).
    """
    produced = 0
    for start in nodes:
        # path holds (node, sign of edge leading into it); start has no lead-in
        path = [start]
        signs: list[int] = []
        on_path = {start}
        stack = [iter(adj.get(start, ()))]
        while stack:
            advanced = False
            for nxt, sign in stack[-1]:
                if nxt == start:
                    yield tuple(path), tuple(signs + [sign])
                    produced += 1
                    if budget is not None and produced >= budget:
                        return
                    continue
                if nxt < start or nxt in on_path:
                    continue
                if len(path) < max_len:
                    path.append(nxt)
                    signs.append(sign)
                    on_path.add(nxt)
                    stack.append(iter(adj.get(nxt, ())))
                    advanced = True
                    break
            if not advanced:
                stack.pop()
                if len(path) > 1:
                    on_path.discard(path.pop())
                    signs.pop()
                else:
                    path.pop()


def enumerate_cycles(g: SignedDigraph, max_len: int = 12) -> LoopReport:
    """Every elementary cycle of length at most ``max_len``, exactly once.

    Output is sorted lexicographically by node sequence, which also makes the
    report deterministic. The ``truncated`` flag is exact for graphs with
    fewer than 20 nodes (an unbounded recount, aborted as soon as it exceeds
    the bounded count, detects skipped cycles); for larger graphs it is set
    conservatively whenever ``max_len`` is below the node count.
    """
    if max_len < 1:
        raise ConfigError(f"max_len must be at least 1, got {max_len}")
    adj = g.successors()
    nodes = sorted(g.nodes)
    found = [
        (Cycle(path, signs))
        for path, signs in _search(adj, nodes, max_len)
    ]
    found.sort(key=lambda c: c.nodes)
    report = tuple((c, classify(c)) for c in found)

    if len(nodes) < 20:
        truncated = False
        if max_len < len(nodes):
            count = sum(1 for _ in _search(adj, nodes, len(nodes), budget=len(found) + 1))
            truncated = count > len(found)
    else:
        truncated = max_len < len(nodes)
    return LoopReport(report, truncated)


@dataclass(frozen=True)
class NamedLoop:
    """A feedback loop the model is expected to contain.

    ``witness_nodes`` is a subsequence of variable ids that must appear, in
    cyclic order, within some enumerated cycle of the expected polarity.
    Matching by subsequence rather than by the exact node set tolerates
    intermediate variables the quantified model adds.
    """

    label: str
    expected_polarity: Polarity
    witness_nodes: tuple[str, ...]

    def __post_init__(self):
        if not self.witness_nodes:
            raise ConfigError(f"named loop {self.label} needs witness nodes")


class MatchStatus(enum.Enum):
    FOUND = "found"
    MISSING = "missing"
    POLARITY_MISMATCH = "polarity_mismatch"


@dataclass(frozen=True)
class LoopMatch:
    label: str
    status: MatchStatus
    cycle: Cycle | None = None


@dataclass(frozen=True)
class MatchReport:
    matches: tuple[LoopMatch, ...]

    @property
    def all_found(self) -> bool:
        return all(m.status is MatchStatus.FOUND for m in self.matches)

    def __getitem__(self, label: str) -> LoopMatch:
        for m in self.matches:
            if m.label == label:
                return m
        raise KeyError(label)


def _contains_in_cyclic_order(cycle: Cycle, witness: Sequence[str]) -> bool:
    nodes = cycle.nodes
    if not set(witness) <= set(nodes):
        return False
    start = nodes.index(witness[0])
    rotated = nodes[start:] + nodes[:start]
    pos = 0
    for node in rotated:
        if node == witness[pos]:
            pos += 1
            if pos == len(witness):
                return True
    return False


def match_named_loops(report: LoopReport, expected: Sequence[NamedLoop]) -> MatchReport:
    """Check each named loop against the enumerated cycles.

    A loop is FOUND when some cycle contains its witness nodes in cyclic
    order and has the expected polarity, POLARITY_MISMATCH when witnesses
    only appear in cycles of the other polarity, MISSING otherwise.
    """
    matches = []
    for loop in expected:
        hit = None
        wrong = None
        for cycle, polarity in report.cycles:
            if _contains_in_cyclic_order(cycle, loop.witness_nodes):
                if polarity is loop.expected_polarity:
                    hit = cycle
                    break
                wrong = cycle
        if hit is not None:
            matches.append(LoopMatch(loop.label, MatchStatus.FOUND, hit))
        elif wrong is not None:
            matches.append(LoopMatch(loop.label, MatchStatus.POLARITY_MISMATCH, wrong))
        else:
            matches.append(LoopMatch(loop.label, MatchStatus.MISSING))
    return MatchReport(tuple(matches))
