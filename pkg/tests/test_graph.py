import numpy as np
import pytest

from sglmm.graph import (
    build_lattice,
    graph_from_edges,
    laplacian,
    read_coords,
    read_edge_list,
    write_coords,
    write_edge_list,
)


def bfs_component_count(n, edges):
    """Independent component count by plain graph traversal."""
    adj = [[] for _ in range(n)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = [False] * n
    count = 0
    for start in range(n):
        if seen[start]:
            continue
        count += 1
        stack = [start]
        seen[start] = True
        while stack:
            v = stack.pop()
            for u in adj[v]:
                if not seen[u]:
                    seen[u] = True
                    stack.append(u)
    return count


def test_lattice_2x2():
    g = build_lattice(2, 2)
    assert g.n == 4
    assert g.n_edges == 4


def test_lattice_30x30():
    g = build_lattice(30, 30)
    assert g.n == 900
    assert g.n_edges == 1740  # 30*29 + 30*29


def test_lattice_single_row_is_path():
    g = build_lattice(1, 5)
    assert g.n == 5
    assert g.n_edges == 4
    # single row maps the y coordinate to 0.5
    assert np.allclose(g.coords[:, 1], 0.5)
    assert np.allclose(g.coords[:, 0], np.linspace(0, 1, 5))


def test_lattice_coordinates_unit_square():
    g = build_lattice(4, 7)
    assert g.coords.min() == 0.0 and g.coords.max() == 1.0
    # vertex (r, c) -> (c/(cols-1), r/(rows-1))
    r, c = 2, 5
    assert g.coords[r * 7 + c, 0] == pytest.approx(5 / 6)
    assert g.coords[r * 7 + c, 1] == pytest.approx(2 / 3)


def test_lattice_rejects_bad_dims():
    with pytest.raises(ValueError):
        build_lattice(0, 3)


def test_graph_from_edges_valid():
    g = graph_from_edges(2, [(0, 1)])
    assert g.n == 2
    assert g.edges == ((0, 1),)


def test_graph_from_edges_rejects_self_loop():
    with pytest.raises(ValueError, match=r"self-loop \(0, 0\)"):
        graph_from_edges(3, [(0, 0)])


def test_graph_from_edges_rejects_duplicate_unordered():
    with pytest.raises(ValueError, match=r"duplicate edge \(1, 0\)"):
        graph_from_edges(3, [(0, 1), (1, 0)])


def test_graph_from_edges_rejects_out_of_range():
    with pytest.raises(ValueError, match=r"\(0, 3\)"):
        graph_from_edges(3, [(0, 3)])


def test_single_edge_laplacian():
    g = graph_from_edges(2, [(0, 1)])
    Q = laplacian(g).dense()
    assert np.array_equal(Q, [[1.0, -1.0], [-1.0, 1.0]])


def test_laplacian_row_sums_zero_exactly():
    rng = np.random.default_rng(0)
    for _ in range(5):
        n = int(rng.integers(2, 40))
        possible = [(i, j) for i in range(n) for j in range(i + 1, n)]
        take = rng.random(len(possible)) < 0.3
        edges = [e for e, t in zip(possible, take) if t]
        g = graph_from_edges(n, edges)
        Q = laplacian(g).dense()
        assert np.all(Q.sum(axis=1) == 0.0)
        assert np.array_equal(Q, Q.T)


def test_adjacency_symmetric_binary_zero_diagonal():
    g = build_lattice(5, 6)
    A = g.dense_adjacency()
    assert np.array_equal(A, A.T)
    assert set(np.unique(A)) <= {0.0, 1.0}
    assert np.all(np.diag(A) == 0)
    Q = laplacian(g).dense()
    assert np.array_equal(Q, np.diag(A.sum(axis=1)) - A)


def test_laplacian_rank_30x30():
    g = build_lattice(30, 30)
    pm = laplacian(g)
    # oracle: rank = n - number of connected components found by traversal
    assert pm.rank == 900 - bfs_component_count(g.n, g.edges)
    assert pm.rank == 899


def test_laplacian_rank_disconnected():
    # two components: a triangle and an isolated edge
    g = graph_from_edges(5, [(0, 1), (1, 2), (0, 2), (3, 4)])
    assert laplacian(g).rank == 3
    assert bfs_component_count(5, g.edges) == 2


def test_laplacian_psd_small_graphs():
    rng = np.random.default_rng(42)
    for _ in range(10):
        n = int(rng.integers(2, 100))
        possible = [(i, j) for i in range(n) for j in range(i + 1, n)]
        take = rng.random(len(possible)) < 0.1
        edges = [e for e, t in zip(possible, take) if t]
        g = graph_from_edges(n, edges)
        vals = np.linalg.eigvalsh(laplacian(g).dense())
        assert vals.min() > -1e-10


def test_quadratic_form_matches_dense():
    g = build_lattice(6, 7)
    pm = laplacian(g)
    rng = np.random.default_rng(3)
    w = rng.standard_normal(g.n)
    assert pm.quadratic_form(w) == pytest.approx(w @ pm.dense() @ w)


def test_edge_list_round_trip(tmp_path):
    g = build_lattice(3, 4)
    path = tmp_path / "g.edges"
    write_edge_list(path, g)
    g2 = read_edge_list(path)
    assert g2.n == g.n
    assert g2.edges == g.edges
    header = path.read_text().splitlines()[0]
    assert header == "12 17"


def test_edge_list_comments_and_errors(tmp_path):
    path = tmp_path / "g.edges"
    path.write_text("# comment\n2 1\n0 1\n")
    g = read_edge_list(path)
    assert g.n == 2 and g.edges == ((0, 1),)

    bad = tmp_path / "bad.edges"
    bad.write_text("2 1\n1 0\n")
    with pytest.raises(ValueError, match="i < j"):
        read_edge_list(bad)

    short = tmp_path / "short.edges"
    short.write_text("3 2\n0 1\n")
    with pytest.raises(ValueError, match="promises 2"):
        read_edge_list(short)


def test_coords_round_trip(tmp_path):
    g = build_lattice(4, 4)
    path = tmp_path / "coords.txt"
    write_coords(path, g.coords)
    back = read_coords(path, g.n)
    assert np.array_equal(back, g.coords)
    with pytest.raises(ValueError, match="expected 3"):
        read_coords(path, 3)
