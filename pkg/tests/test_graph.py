import io

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import to_graph
from rwc.graph import (
    GraphFormatError,
    bfs_distances,
    connected_components,
    diameter,
    from_edges,
    label_to_index,
    largest_connected_component,
    load_edge_list,
    max_degree_node,
    random_neighbor,
    stationary_distribution,
    write_label_map,
)


def test_load_skips_comments_loops_and_duplicates():
    text = b"# header\n\n10\t20\n20 10\n20 30\n30 30\n"
    g = load_edge_list(text)
    assert (g.n, g.m) == (3, 2)
    assert g.labels.tolist() == [10, 20, 30]
    assert g.stats.comments == 1
    assert g.stats.self_loops == 1
    assert g.stats.duplicates == 1
    assert g.neighbors(1).tolist() == [0, 2]


def test_load_from_path_and_text_stream(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("1 2\n2 3\n")
    assert load_edge_list(path).m == 2
    assert load_edge_list(io.StringIO("1 2\n")).m == 1


@pytest.mark.parametrize(
    "text, line",
    [(b"1 2\n1 2 3\n", 2), (b"1 x\n", 1), (b"0 1\n-1 2\n", 2), (b"5\n", 1)],
)
def test_malformed_lines_report_line_number(text, line):
    with pytest.raises(GraphFormatError) as err:
        load_edge_list(text)
    assert err.value.line == line
    assert f"line {line}" in str(err.value)


def test_empty_input_rejected():
    with pytest.raises(GraphFormatError):
        load_edge_list(b"# nothing\n")


def test_lcc_keeps_largest_and_relabels():
    g = from_edges(np.array([[100, 101], [5, 6], [6, 7], [7, 5], [8, 9]]))
    sub, index_map = largest_connected_component(g)
    assert sub.n == 3 and sub.m == 3
    assert sub.labels.tolist() == [5, 6, 7]
    assert g.labels[index_map].tolist() == [5, 6, 7]


def test_lcc_tie_goes_to_smallest_label():
    g = from_edges(np.array([[50, 51], [3, 4]]))
    sub, _ = largest_connected_component(g)
    assert sub.labels.tolist() == [3, 4]


def test_label_map_csv(p3):
    buf = io.StringIO()
    write_label_map(p3, buf)
    assert buf.getvalue() == "original,dense\n0,0\n1,1\n2,2\n"


def test_queries(p3, k3):
    assert np.allclose(stationary_distribution(p3), [0.25, 0.5, 0.25])
    assert max_degree_node(p3) == 1
    assert max_degree_node(k3) == 0  # ties go to the smallest index
    assert label_to_index(p3, 2) == 2
    with pytest.raises(KeyError):
        label_to_index(p3, 99)
    rng = np.random.default_rng(0)
    assert {random_neighbor(p3, 1, rng) for _ in range(50)} == {0, 2}


def test_bipartite_flag(p3, k3, c4):
    assert p3.is_bipartite and c4.is_bipartite
    assert not k3.is_bipartite


def test_arrays_are_read_only(p3):
    with pytest.raises(ValueError):
        p3.indices[0] = 5


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 30), st.integers(0, 30)), min_size=1, max_size=80))
def test_matches_networkx(pairs):
    G = nx.Graph()
    G.add_edges_from((a, b) for a, b in pairs if a != b)
    g = from_edges(np.array(pairs))
    assert g.m == G.number_of_edges()
    for u in range(g.n):
        label = int(g.labels[u])
        expected = sorted(G.neighbors(label)) if label in G else []
        assert g.labels[g.neighbors(u)].tolist() == expected
    comp = connected_components(g)
    # components agree with networkx on every pair of nodes
    for a in range(g.n):
        for b in range(a + 1, min(g.n, a + 5)):
            la, lb = int(g.labels[a]), int(g.labels[b])
            same = la in G and lb in G and nx.has_path(G, la, lb)
            assert (comp[a] == comp[b]) == same


@pytest.mark.parametrize("seed", range(8))
def test_diameter_exact_against_networkx(seed):
    G = nx.connected_watts_strogatz_graph(60 + 10 * seed, 4, 0.2, seed=seed)
    g = to_graph(G)
    value, exact = diameter(g)
    assert exact and value == nx.diameter(G)
    src = int(np.argmax(g.degrees))
    lengths = nx.single_source_shortest_path_length(G, int(g.labels[src]))
    dist = bfs_distances(g, src)
    assert all(dist[u] == lengths[int(g.labels[u])] for u in range(g.n))


def test_budgeted_diameter_is_an_upper_bound():
    G = nx.barabasi_albert_graph(400, 2, seed=1)
    g = to_graph(G)
    value, exact = diameter(g, max_bfs=2)
    assert value >= nx.diameter(G)
    assert not exact or value == nx.diameter(G)
