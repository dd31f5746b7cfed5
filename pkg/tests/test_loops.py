import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynex.errors import ConfigError
from dynex.loops import (
    Cycle,
    MatchStatus,
    NamedLoop,
    Polarity,
    classify,
    enumerate_cycles,
    match_named_loops,
)
from dynex.model import SignedDigraph


def graph(*edges):
    nodes = frozenset(n for a, b, _ in edges for n in (a, b))
    return SignedDigraph(nodes, tuple(edges))


def brute_force_cycles(g: SignedDigraph):
    """Oracle: try every node subset and every ordering; keep closed walks.

    Exponential, fine up to ~8 nodes. Returns rotation-normalized node tuples.
    """
    sign = {(a, b): s for a, b, s in g.edges}
    found = set()
    nodes = sorted(g.nodes)
    for size in range(1, len(nodes) + 1):
        for subset in itertools.combinations(nodes, size):
            first = subset[0]
            for rest in itertools.permutations(subset[1:]):
                path = (first,) + rest
                pairs = list(zip(path, path[1:] + (first,)))
                if all(p in sign for p in pairs):
                    found.add(path)
    return found


def test_two_node_balancing():
    g = graph(("a", "b", 1), ("b", "a", -1))
    report = enumerate_cycles(g, max_len=5)
    assert len(report.cycles) == 1
    cycle, polarity = report.cycles[0]
    assert cycle.nodes == ("a", "b")
    assert polarity is Polarity.BALANCING


def test_self_loop_reinforcing():
    g = graph(("a", "a", 1))
    report = enumerate_cycles(g, max_len=3)
    [(cycle, polarity)] = report.cycles
    assert cycle.nodes == ("a",)
    assert polarity is Polarity.REINFORCING


def test_complete_graph_on_four_nodes_has_twenty_cycles():
    edges = tuple((a, b, 1) for a in "abcd" for b in "abcd" if a != b)
    g = graph(*edges)
    report = enumerate_cycles(g, max_len=4)
    assert len(report.cycles) == 20  # 6 of length 2, 8 of length 3, 6 of length 4
    assert {c.nodes for c, _ in report.cycles} == brute_force_cycles(g)
    assert not report.truncated


def test_classify_parity():
    assert classify(Cycle(("a", "b"), (1, 1))) is Polarity.REINFORCING
    assert classify(Cycle(("a", "b"), (1, -1))) is Polarity.BALANCING
    assert classify(Cycle(("a", "b", "c"), (-1, -1, -1))) is Polarity.BALANCING


@settings(max_examples=60, deadline=None)
@given(signs=st.lists(st.sampled_from((-1, 1)), min_size=1, max_size=8), flip=st.data())
def test_classify_flips_with_one_sign(signs, flip):
    nodes = tuple(f"n{i}" for i in range(len(signs)))
    cycle = Cycle(nodes, tuple(signs))
    i = flip.draw(st.integers(0, len(signs) - 1))
    flipped = list(signs)
    flipped[i] = -flipped[i]
    assert classify(cycle) is not classify(Cycle(nodes, tuple(flipped)))


def random_digraph(rng: random.Random, max_nodes=8):
    n = rng.randint(1, max_nodes)
    names = [f"n{i}" for i in range(n)]
    edges = []
    for a in names:
        for b in names:
            if rng.random() < 0.3:
                edges.append((a, b, rng.choice((-1, 1))))
    nodes = frozenset(names) | frozenset(x for a, b, _ in edges for x in (a, b))
    return SignedDigraph(frozenset(names), tuple(edges))


@pytest.mark.parametrize("seed", range(12))
def test_enumeration_matches_brute_force(seed):
    rng = random.Random(seed)
    g = random_digraph(rng)
    report = enumerate_cycles(g, max_len=len(g.nodes))
    assert {c.nodes for c, _ in report.cycles} == brute_force_cycles(g)
    assert not report.truncated


def test_enumeration_deterministic_and_sorted():
    rng = random.Random(42)
    g = random_digraph(rng)
    a = enumerate_cycles(g, max_len=8)
    b = enumerate_cycles(g, max_len=8)
    assert a == b
    sequences = [c.nodes for c, _ in a.cycles]
    assert sequences == sorted(sequences)


def test_truncation_flag_exact_below_twenty_nodes():
    # a 3-cycle plus a 2-cycle: bounding at 2 skips the triangle
    g = graph(("a", "b", 1), ("b", "c", 1), ("c", "a", 1), ("b", "a", -1))
    full = enumerate_cycles(g, max_len=3)
    assert not full.truncated
    bounded = enumerate_cycles(g, max_len=2)
    assert bounded.truncated
    assert len(bounded.cycles) < len(full.cycles)


def test_max_len_validation():
    with pytest.raises(ConfigError):
        enumerate_cycles(graph(("a", "a", 1)), max_len=0)


def test_cycle_invariants():
    with pytest.raises(ConfigError):
        Cycle(("b", "a"), (1, 1))  # not rotation-normalized
    with pytest.raises(ConfigError):
        Cycle(("a", "a"), (1, 1))  # repeated node


def test_match_named_loops_statuses():
    g = graph(("a", "b", 1), ("b", "a", -1), ("c", "c", 1))
    report = enumerate_cycles(g, max_len=4)
    expected = (
        NamedLoop("L1", Polarity.BALANCING, ("a", "b")),
        NamedLoop("L2", Polarity.REINFORCING, ("a", "b")),
        NamedLoop("L3", Polarity.REINFORCING, ("c",)),
        NamedLoop("L4", Polarity.BALANCING, ("a", "missing")),
    )
    match = match_named_loops(report, expected)
    assert match["L1"].status is MatchStatus.FOUND
    assert match["L2"].status is MatchStatus.POLARITY_MISMATCH
    assert match["L3"].status is MatchStatus.FOUND
    assert match["L4"].status is MatchStatus.MISSING
    assert not match.all_found


def test_match_empty_expected_is_empty():
    report = enumerate_cycles(graph(("a", "a", 1)), max_len=2)
    assert match_named_loops(report, ()).matches == ()


def test_witness_requires_cyclic_order():
    g = graph(("a", "b", 1), ("b", "c", 1), ("c", "a", 1))
    report = enumerate_cycles(g, max_len=3)
    ordered = NamedLoop("ok", Polarity.REINFORCING, ("b", "c", "a"))
    out_of_order = NamedLoop("rev", Polarity.REINFORCING, ("b", "a", "c"))
    match = match_named_loops(report, (ordered, out_of_order))
    assert match["ok"].status is MatchStatus.FOUND
    assert match["rev"].status is MatchStatus.MISSING
