import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphpulse.graph import (
    EdgeNotFound,
    GraphFormatError,
    GlobalGraph,
    from_edge_tuples,
    make_partition,
    owner,
    partition_block,
    symmetrize,
)
from graphpulse.runtime import Metrics


def test_csr_construction_keeps_input_order():
    g = from_edge_tuples(3, [(0, 1, 2), (0, 2, 5), (1, 2, 1)])
    assert g.n == 3 and g.m == 3
    assert g.offsets == [0, 2, 3, 3]
    assert g.targets == [1, 2, 2]
    assert g.weights == [2, 5, 1]


def test_empty_graph():
    g = from_edge_tuples(4, [])
    assert g.offsets == [0, 0, 0, 0, 0]
    assert g.m == 0


def test_validate_rejects_bad_offsets():
    g = GlobalGraph(n=2, m=1, offsets=[0, 2, 1], targets=[1], weights=[0])
    with pytest.raises(GraphFormatError):
        g.validate()


def test_validate_rejects_out_of_range_target():
    with pytest.raises(GraphFormatError):
        from_edge_tuples(2, [(0, 5, 1)])


def test_validate_rejects_negative_weight():
    g = GlobalGraph(n=2, m=1, offsets=[0, 1, 1], targets=[1], weights=[-3])
    with pytest.raises(GraphFormatError):
        g.validate()


def test_partition_block_ranges():
    part = make_partition(10, 3)
    assert part.owned_range == ((0, 4), (4, 7), (7, 10))


def test_partition_single_rank_is_identity(toy_graph):
    pg = partition_block(toy_graph, 1)
    lc = pg.locals[0]
    assert lc.offsets == toy_graph.offsets
    assert lc.targets == toy_graph.targets
    assert lc.weights == toy_graph.weights


def test_partition_rejects_oversized_world(toy_graph):
    with pytest.raises(GraphFormatError):
        partition_block(toy_graph, 4)


def test_owner_block_arithmetic():
    part = make_partition(10, 3)
    assert owner(5, part) == 1
    assert owner(0, part) == 0
    for v in range(10):
        lo, hi = part.owned_range[owner(v, part)]
        assert lo <= v < hi


@pytest.mark.parametrize("world_size", [1, 2, 3, 5, 8])
def test_reassembly_reproduces_global_csr(ur100, world_size):
    pg = partition_block(ur100, world_size)
    back = pg.reassemble()
    assert back.offsets == ur100.offsets
    assert back.targets == ur100.targets
    assert back.weights == ur100.weights


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(min_value=1, max_value=40),
    edges=st.lists(
        st.tuples(st.integers(0, 39), st.integers(0, 39), st.integers(0, 100)), max_size=120
    ),
    world_size=st.integers(min_value=1, max_value=8),
)
def test_partition_reassembly_property(n, edges, world_size):
    edges = [(u % n, v % n, w) for u, v, w in edges]
    g = from_edge_tuples(n, edges)
    if world_size > n:
        world_size = n
    back = partition_block(g, world_size).reassemble()
    assert (back.offsets, back.targets, back.weights) == (g.offsets, g.targets, g.weights)


def test_partition_sizes_balanced():
    for n in (7, 16, 100, 101):
        for r in (1, 2, 3, 5, 8):
            if r > n:
                continue
            part = make_partition(n, r)
            sizes = [hi - lo for lo, hi in part.owned_range]
            assert max(sizes) - min(sizes) <= 1
            assert sum(sizes) == n


def _adjacency_fixture():
    # single vertex with adjacency [3, 5, 9]
    g = from_edge_tuples(10, [(0, 3, 7), (0, 5, 8), (0, 9, 9)])
    return partition_block(g, 1).locals[0]


def test_get_edge_linear_search_counts_slots():
    lc = _adjacency_fixture()
    m = Metrics()
    v, pos = lc.edge_search(0, 9, m)
    assert pos == 2 and m.edge_search_steps == 3
    m = Metrics()
    _, pos = lc.edge_search(0, 3, m)
    assert pos == 0 and m.edge_search_steps == 1


def test_get_edge_not_found_charges_degree():
    lc = _adjacency_fixture()
    m = Metrics()
    with pytest.raises(EdgeNotFound):
        lc.edge_search(0, 4, m)
    assert m.edge_search_steps == 3


def test_get_edge_i_positional():
    lc = _adjacency_fixture()
    m = Metrics()
    handle = lc.edge_at(0, 1, m)
    assert lc.edge_other(0, handle) == 5
    assert m.edge_search_steps == 1
    with pytest.raises(GraphFormatError):
        lc.edge_at(0, 3, m)


def test_positional_iteration_matches_csr_order():
    lc = _adjacency_fixture()
    endpoints = [lc.edge_other(0, lc.edge_at(0, i)) for i in range(3)]
    assert endpoints == [3, 5, 9]


def test_search_and_positional_agree_on_every_vertex(ur100):
    lc = partition_block(ur100, 1).locals[0]
    for v in range(ur100.n):
        deg = lc.degree(v)
        positional = [lc.edge_other(v, lc.edge_at(v, i)) for i in range(deg)]
        searched = sorted(lc.edge_other(v, lc.edge_search(v, nbr)) for nbr in set(positional))
        assert sorted(set(positional)) == searched
        assert positional == ur100.neighbors(v)


def test_search_step_identity_full_sweep(ur100):
    """Searching every neighbor in CSR order costs deg*(deg+1)/2; positional costs deg."""
    lc = partition_block(ur100, 1).locals[0]
    m_search = Metrics()
    m_pos = Metrics()
    for v in range(ur100.n):
        for i, nbr in enumerate(ur100.neighbors(v)):
            lc.edge_search(v, nbr, m_search)
            lc.edge_at(v, i, m_pos)
    degs = [ur100.degree(v) for v in range(ur100.n)]
    assert m_search.edge_search_steps == sum(d * (d + 1) // 2 for d in degs)
    assert m_pos.edge_search_steps == sum(degs)


def test_every_local_vertex_is_owned_by_its_rank(ur100):
    for world_size in (1, 2, 3, 5, 8):
        pg = partition_block(ur100, world_size)
        for lc in pg.locals:
            for local_idx in range(lc.hi - lc.lo):
                assert pg.owner(lc.lo + local_idx) == lc.rank


def test_symmetrize_doubles_edges(toy_graph):
    s = symmetrize(toy_graph)
    assert s.m == 2 * toy_graph.m
    assert sorted(s.edges()) == sorted(list(toy_graph.edges()) + [(v, u, w) for u, v, w in toy_graph.edges()])
