import numpy as np
import pytest

from spregimes import (
    DisconnectedGraphError,
    DuplicatePointsError,
    Partition,
    build_edge_list_graph,
    build_grid_graph,
    build_knn_graph,
    connected_components,
    is_connected_subset,
    read_edge_list,
    region_neighbors,
)


class TestGridGraph:
    def test_single_cell(self):
        g = build_grid_graph(1, 1)
        assert g.n == 1
        assert g.edge_count == 0

    def test_two_by_two(self):
        g = build_grid_graph(2, 2)
        assert g.n == 4
        assert g.edge_count == 4
        assert g.neighbors[0] == (1, 2)

    def test_25_by_25_edge_count_matches_enumeration(self):
        g = build_grid_graph(25, 25)
        assert g.n == 625
        # independent count: pairs of cells at Manhattan distance one
        expected = sum(
            1
            for r1 in range(25)
            for c1 in range(25)
            for r2 in range(25)
            for c2 in range(25)
            if (r1, c1) < (r2, c2) and abs(r1 - r2) + abs(c1 - c2) == 1
        )
        assert expected == 25 * 24 * 2
        assert g.edge_count == expected

    def test_rejects_empty_grid(self):
        with pytest.raises(ValueError):
            build_grid_graph(0, 3)


class TestEdgeListGraph:
    def test_path_graph(self):
        g = build_edge_list_graph(3, [(0, 1), (1, 2)])
        assert g.edge_count == 2
        assert is_connected_subset(g, range(3))

    def test_isolated_node_rejected(self):
        with pytest.raises(DisconnectedGraphError):
            build_edge_list_graph(3, [(0, 1)])

    def test_symmetrize_then_dedup(self):
        g = build_edge_list_graph(4, [(0, 1), (1, 0), (1, 2), (2, 3)])
        assert g.edge_count == 3

    def test_self_loop_rejected(self):
        with pytest.raises(ValueError, match="self-loop"):
            build_edge_list_graph(2, [(0, 0), (0, 1)])

    def test_out_of_range_rejected(self):
        with pytest.raises(IndexError):
            build_edge_list_graph(2, [(0, 2)])


class TestKnnGraph:
    def test_collinear_points(self):
        g = build_knn_graph([(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)], k=1)
        assert g.edges == frozenset({(0, 1), (1, 2)})

    def test_k_equals_n_minus_one_gives_complete_graph(self, rng):
        pts = rng.random((6, 2))
        g = build_knn_graph(pts, k=5)
        assert g.edge_count == 15

    def test_unit_square_k2_is_a_cycle_without_diagonals(self):
        pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
        g = build_knn_graph(pts, k=2)
        assert g.edges == frozenset({(0, 1), (1, 2), (2, 3), (0, 3)})

    def test_duplicate_points_rejected(self):
        with pytest.raises(DuplicatePointsError):
            build_knn_graph([(0.0, 0.0), (0.0, 0.0), (1.0, 1.0)], k=1)

    def test_disconnected_clusters_suggest_larger_k(self):
        pts = [(0.0, 0.0), (0.1, 0.0), (100.0, 0.0), (100.1, 0.0)]
        with pytest.raises(DisconnectedGraphError, match="increase k"):
            build_knn_graph(pts, k=1)

    def test_tie_break_prefers_lower_index(self):
        # units 1 and 2 sit at the same distance from unit 0 and unit 0 has
        # room for only one of them; nothing else links 0 to either side
        pts = [(0.0, 0.0), (3.0, 4.0), (5.0, 0.0),
               (3.0, 5.0), (5.0, 1.0), (1.0, 0.0)]
        g = build_knn_graph(pts, k=2)
        assert (0, 1) in g.edges
        assert (0, 2) not in g.edges


class TestEdgeListFile:
    def test_parse_with_comments(self, tmp_path):
        path = tmp_path / "toy.edges"
        path.write_text("# header\n0 1\n1 2  # trailing\n\n 2 3 \n")
        assert read_edge_list(path) == [(0, 1), (1, 2), (2, 3)]

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "bad.edges"
        path.write_text("0 1 2\n")
        with pytest.raises(ValueError, match="expected"):
            read_edge_list(path)


class TestConnectivity:
    def test_singleton_is_connected(self, grid25):
        assert is_connected_subset(grid25, {17})

    def test_two_separated_units(self, grid25):
        assert not is_connected_subset(grid25, {0, 624})

    def test_l_shaped_subset(self, grid25):
        # cells (0,0),(1,0),(2,0),(2,1),(2,2)
        subset = {0, 25, 50, 51, 52}
        assert is_connected_subset(grid25, subset)

    def test_empty_subset_rejected(self, grid25):
        with pytest.raises(ValueError):
            is_connected_subset(grid25, set())

    def test_whole_graph_connected(self, grid25):
        assert is_connected_subset(grid25, range(grid25.n))

    def test_removing_cut_vertex_disconnects_random_paths(self, grid25, rng):
        # random induced paths: each step may touch only the current tail
        # among chosen cells, so every interior vertex is a cut vertex
        for _ in range(25):
            start = int(rng.integers(grid25.n))
            path = [start]
            seen = {start}
            while len(path) < 8:
                options = [
                    v
                    for v in grid25.neighbors[path[-1]]
                    if v not in seen
                    and sum(w in seen for w in grid25.neighbors[v]) == 1
                ]
                if not options:
                    break
                nxt = options[int(rng.integers(len(options)))]
                path.append(nxt)
                seen.add(nxt)
            if len(path) < 3:
                continue
            assert is_connected_subset(grid25, set(path))
            cut = path[len(path) // 2]
            assert not is_connected_subset(grid25, set(path) - {cut})

    def test_components_split(self, grid25):
        comps = connected_components(grid25, {0, 1, 2, 100, 101})
        assert comps == [[0, 1, 2], [100, 101]]


class TestPartition:
    def test_labels_must_be_dense(self):
        with pytest.raises(ValueError):
            Partition(np.array([0, 2, 2]), 3)

    def test_from_labels_compacts(self):
        part = Partition.from_labels(["b", "a", "b", "c"])
        assert list(part.assignment) == [0, 1, 0, 2]
        assert part.p == 3

    def test_members_and_sizes(self):
        part = Partition(np.array([0, 1, 0, 1, 1]), 2)
        assert list(part.members(0)) == [0, 2]
        assert list(part.sizes()) == [2, 3]
        with pytest.raises(ValueError, match="unknown region"):
            part.members(2)


class TestRegionNeighbors:
    def test_whole_grid_region_has_no_neighbors(self, grid25):
        part = Partition(np.zeros(grid25.n, dtype=int), 1)
        assert region_neighbors(grid25, part, 0) == set()

    def test_two_by_two_corner(self):
        g = build_grid_graph(2, 2)
        part = Partition(np.array([0, 1, 1, 1]), 2)
        assert region_neighbors(g, part, 0) == {1, 2}

    def test_stripe_boundary(self, grid25):
        labels = np.zeros(625, dtype=int)
        labels[125:] = 1  # rows 0-4 vs rows 5-24
        part = Partition(labels, 2)
        assert region_neighbors(grid25, part, 0) == set(range(125, 150))

    def test_never_contains_own_members(self, grid25, rng):
        labels = rng.integers(0, 4, size=625)
        labels[:4] = np.arange(4)  # keep all labels populated
        part = Partition(labels, 4)
        for region in range(4):
            neighbors = region_neighbors(grid25, part, region)
            assert neighbors.isdisjoint(set(map(int, part.members(region))))

    def test_unknown_region(self, grid25):
        part = Partition(np.zeros(625, dtype=int), 1)
        with pytest.raises(ValueError, match="unknown region"):
            region_neighbors(grid25, part, 3)


class TestGraphInvariants:
    def test_neighbor_lists_are_symmetric(self, grid25, rng):
        pts = rng.random((40, 2))
        for g in (grid25, build_knn_graph(pts, 4)):
            for i in range(g.n):
                assert g.degree(i) == len(g.neighbors[i])
                for j in g.neighbors[i]:
                    assert i in g.neighbors[j]
