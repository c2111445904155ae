import numpy as np
import pytest

from boardnet.centrality import (betweenness, center_subgraph, centrality_report,
                                 degree_centrality, degree_distribution,
                                 distance_stats, eccentricity_exact)
from boardnet.errors import ContractError, ParameterError
from boardnet.graph import Graph

from _oracles import (barabasi_albert, betweenness_enumeration,
                      eccentricities_apsp, erdos_renyi_connected,
                      random_connected_graph)


def path3():
    return Graph.from_edges([("a", "b", 1), ("b", "c", 1)])


def star4():
    return Graph.from_edges([("hub", f"leaf{i}", 1) for i in range(4)])


class TestDegree:
    def test_star(self):
        g = star4()
        deg, wdeg = degree_centrality(g)
        assert deg[g.index_of("hub")] == 4
        assert all(deg[g.index_of(f"leaf{i}")] == 1 for i in range(4))

    def test_self_loop_excluded(self):
        g = Graph.from_edges([("a", "b", 1)], loops={"c": 9})
        deg, wdeg = degree_centrality(g)
        assert deg[g.index_of("c")] == 0
        assert wdeg[g.index_of("c")] == 0

    def test_weighted_degree(self):
        g = Graph.from_edges([("a", "b", 3), ("b", "c", 2)], loops={"b": 10})
        _, wdeg = degree_centrality(g)
        assert wdeg[g.index_of("b")] == 5


class TestBetweenness:
    def test_path(self):
        g = path3()
        btw = betweenness(g)
        assert btw[g.index_of("b")] == pytest.approx(1.0)
        assert btw[g.index_of("a")] == btw[g.index_of("c")] == 0.0

    def test_cycle4(self):
        g = Graph.from_edges([(0, 1, 1), (1, 2, 1), (2, 3, 1), (0, 3, 1)])
        btw = betweenness(g)
        # each node lies on 1 of the 2 shortest paths of one opposite pair
        assert np.allclose(btw, 0.5)

    def test_matches_enumeration_oracle(self):
        rng = np.random.default_rng(41)
        for _ in range(12):
            n = int(rng.integers(4, 30))
            g = random_connected_graph(rng, n, extra_edges=int(rng.integers(0, n)))
            oracle = betweenness_enumeration(g)
            got = betweenness(g)
            for node in g.nodes:
                assert got[g.index_of(node)] == pytest.approx(oracle[node], abs=1e-9)

    def test_sum_identity(self):
        # sum of betweenness = sum over pairs of mean interior-node count
        rng = np.random.default_rng(42)
        g = random_connected_graph(rng, 20, extra_edges=15)
        oracle = betweenness_enumeration(g)
        assert betweenness(g).sum() == pytest.approx(sum(oracle.values()), abs=1e-9)

    def test_weights_ignored_for_paths(self):
        heavy = Graph.from_edges([("a", "b", 100), ("b", "c", 1)])
        light = Graph.from_edges([("a", "b", 1), ("b", "c", 1)])
        assert np.array_equal(betweenness(heavy), betweenness(light))


class TestEccentricity:
    def test_path(self):
        g = path3()
        res = eccentricity_exact(g)
        assert res.eccentricity[g.index_of("a")] == 2
        assert res.eccentricity[g.index_of("b")] == 1
        assert res.radius == 1 and res.diameter == 2
        assert res.center == ["b"]
        assert set(res.periphery) == {"a", "c"}

    def test_star(self):
        g = star4()
        res = eccentricity_exact(g)
        assert res.eccentricity[g.index_of("hub")] == 1
        assert res.histogram() == {1: 1, 2: 4}

    def test_matches_apsp_oracle(self):
        rng = np.random.default_rng(43)
        for _ in range(8):
            n = int(rng.integers(10, 120))
            g = erdos_renyi_connected(rng, n, 2.5 * np.log(n) / n)
            res = eccentricity_exact(g)
            assert np.array_equal(res.eccentricity, eccentricities_apsp(g))

    def test_all_strategies_agree(self):
        rng = np.random.default_rng(44)
        g = barabasi_albert(rng, 150, 2)
        results = [eccentricity_exact(g, strategy=s).eccentricity
                   for s in ("alternate", "max_upper", "min_lower")]
        assert np.array_equal(results[0], results[1])
        assert np.array_equal(results[0], results[2])

    def test_invariants(self):
        rng = np.random.default_rng(45)
        for _ in range(6):
            g = erdos_renyi_connected(rng, 60, 0.06)
            res = eccentricity_exact(g)
            assert res.radius <= res.diameter <= 2 * res.radius
            ecc = res.eccentricity
            for a, b, _ in g.edge_list():
                assert abs(ecc[g.index_of(a)] - ecc[g.index_of(b)]) <= 1

    def test_disconnected_rejected_unless_flagged(self):
        g = Graph.from_edges([(0, 1, 1), (2, 3, 1)])
        with pytest.raises(ContractError):
            eccentricity_exact(g)
        res = eccentricity_exact(g, per_component=True)
        assert res.eccentricity.tolist() == [1, 1, 1, 1]

    def test_unknown_strategy(self):
        with pytest.raises(ParameterError):
            eccentricity_exact(path3(), strategy="widest")

    def test_bfs_count_below_n_on_hub_graphs(self):
        rng = np.random.default_rng(46)
        g = barabasi_albert(rng, 400, 2)
        res = eccentricity_exact(g)
        assert res.bfs_count < 400


class TestDistanceStats:
    def test_path(self):
        stats = distance_stats(path3())
        assert stats.average == pytest.approx(4 / 3)
        assert stats.histogram == {1: 2, 2: 1}
        assert stats.exact

    def test_complete_k4(self):
        g = Graph.from_edges([(a, b, 1) for a in range(4) for b in range(a + 1, 4)])
        assert distance_stats(g).average == pytest.approx(1.0)

    def test_histogram_sums_to_pair_count(self):
        rng = np.random.default_rng(47)
        g = erdos_renyi_connected(rng, 40, 0.1)
        stats = distance_stats(g)
        assert sum(stats.histogram.values()) == 40 * 39 // 2

    def test_full_sampling_equals_exact(self):
        rng = np.random.default_rng(48)
        g = erdos_renyi_connected(rng, 50, 0.08)
        exact = distance_stats(g)
        sampled = distance_stats(g, sample_size=50)
        assert sampled.average == pytest.approx(exact.average, abs=1e-12)
        assert not sampled.exact

    def test_sampled_deterministic(self):
        rng = np.random.default_rng(49)
        g = erdos_renyi_connected(rng, 60, 0.07)
        a = distance_stats(g, sample_size=10, seed=3)
        b = distance_stats(g, sample_size=10, seed=3)
        assert a.average == b.average and a.histogram == b.histogram

    def test_disconnected_rejected(self):
        with pytest.raises(ContractError):
            distance_stats(Graph.from_edges([(0, 1, 1), (2, 3, 1)]))


class TestDegreeDistribution:
    def test_star(self):
        assert degree_distribution(star4()).counts == {1: 4, 4: 1}

    def test_ring_single_spike(self):
        g = Graph.from_edges([(i, (i + 1) % 8, 1) for i in range(8)])
        dist = degree_distribution(g)
        assert dist.counts == {2: 8}
        assert dist.log_bins == [(2, 4, 8)]

    def test_histogram_sums_to_node_count(self):
        rng = np.random.default_rng(50)
        g = barabasi_albert(rng, 300, 2)
        dist = degree_distribution(g)
        assert sum(dist.counts.values()) == g.n_nodes
        assert sum(c for _, _, c in dist.log_bins) == g.n_nodes  # no degree-0 nodes

    def test_log_bins_cover_powers_of_two(self):
        g = star4()
        dist = degree_distribution(g)
        assert dist.log_bins == [(1, 2, 4), (4, 8, 1)]


class TestCenterSubgraph:
    def test_light_edges_dropped(self):
        g = Graph.from_edges([(0, 1, 5), (1, 2, 5), (0, 2, 5)])
        res = eccentricity_exact(g)
        assert set(res.center) == {0, 1, 2}
        sub = center_subgraph(g, res, min_edge_weight=20)
        assert sub.nodes == [0, 1, 2] and sub.n_edges == 0

    def test_path_center(self):
        g = path3()
        sub = center_subgraph(g, eccentricity_exact(g), min_edge_weight=0)
        assert sub.nodes == ["b"]

    def test_strictly_greater_than_floor(self):
        g = Graph.from_edges([(0, 1, 20), (1, 2, 21), (0, 2, 25)])
        sub = center_subgraph(g, eccentricity_exact(g), min_edge_weight=20)
        assert {(u, v) for u, v, _ in sub.edge_list()} == {(1, 2), (0, 2)}

    def test_mismatched_result_rejected(self):
        with pytest.raises(ContractError):
            center_subgraph(path3(), eccentricity_exact(star4()))


def test_report_rankings_stable():
    g = Graph.from_edges([("a", "b", 2), ("b", "c", 2), ("c", "d", 2), ("a", "c", 1)])
    report = centrality_report(g)
    assert report.rankings["degree"][0] == "c"  # degree 3
    assert report.rankings["weighted_degree"] == ["c", "b", "a", "d"]  # 5, 4, 3, 2
    assert report.top("degree", 2) == ["c", "a"]  # a and b tie at 2; id order
    # pure ties break by node id
    tied = centrality_report(Graph.from_edges([("x", "y", 2), ("w", "z", 2)]))
    assert tied.rankings["weighted_degree"] == ["w", "x", "y", "z"]
