import networkx as nx
import numpy as np

from fixtures import random_generic
from vgpdiag.graph import (all_components, bfs_eccentricities, build_graph, build_graph_dense,
                           enumerate_cycles, fundamental_generators, graph_diameter)
from vgpdiag.models import heisenberg_ladder
from vgpdiag.numerics import seeded_rng
from vgpdiag.pauli import to_dense
from vgpdiag.pmr import pmr_decompose


def _nx_graph(g):
    G = nx.Graph()
    G.add_nodes_from(g.component)
    for z in g.component:
        for nb, _, _ in g.adjacency[z]:
            G.add_edge(z, nb)
    return G


def test_components_match_networkx():
    rng = seeded_rng(0)
    for _ in range(10):
        h = random_generic(4, rng, 4)
        p = pmr_decompose(h)
        comps = all_components(lambda r: build_graph(p, r), 4)
        mat = to_dense(h)
        G = nx.Graph()
        G.add_nodes_from(range(16))
        G.add_edges_from((a, b) for a, b in zip(*np.nonzero(mat)) if a != b)
        ours = sorted(sorted(g.component) for g in comps)
        theirs = sorted(sorted(c) for c in nx.connected_components(G))
        assert ours == theirs


def test_dense_and_pmr_graphs_agree():
    h = random_generic(4, seeded_rng(1), 6)
    p = pmr_decompose(h)
    a = build_graph(p, 0)
    b = build_graph_dense(to_dense(h), 0)
    assert sorted(a.component) == sorted(b.component)


def test_chordless_cycles_match_networkx():
    rng = seeded_rng(2)
    for _ in range(8):
        h = random_generic(4, rng, 5)
        p = pmr_decompose(h)
        for g in all_components(lambda r: build_graph(p, r), 4):
            G = _nx_graph(g)
            ours = {frozenset(_cycle_states(g, c)) for c in enumerate_cycles(g, 16) if c.q >= 3}
            theirs = {frozenset(c) for c in nx.chordless_cycles(G) if len(c) >= 3}
            assert ours == theirs


def _cycle_states(g, c):
    states, z = [c.start], c.start
    for j in c.indices[:-1]:
        z ^= g.masks[j]
        states.append(z)
    return states


def test_diameter_matches_bfs_and_networkx():
    p = pmr_decompose(heisenberg_ladder(6))
    for g in all_components(lambda r: build_graph(p, r), 6):
        d = graph_diameter(g)
        assert d == max(bfs_eccentricities(g).values())
        if len(g.component) > 1:
            assert d == nx.diameter(_nx_graph(g))


def test_generators_close_to_identity():
    p = pmr_decompose(heisenberg_ladder(8))
    for gen in fundamental_generators(p, 6):
        acc = 0
        for j in gen:
            acc ^= p.masks[j]
        assert acc == 0
