from collections import Counter

import numpy as np
import pytest

from boardnet.community import Partition
from boardnet.errors import ContractError, ParameterError
from boardnet.graph import Graph
from boardnet.locality import (classify_ties, community_composition,
                               community_coordinates, community_graph,
                               nonlocal_hubs, city_points_geojson,
                               community_arcs_geojson)


def part(graph, mapping):
    return Partition.from_mapping(graph, mapping)


def three_edge_graph():
    return Graph.from_edges([(1, 2, 5), (3, 4, 3), (2, 3, 2)])


SPLIT_12_34 = {1: 0, 2: 0, 3: 1, 4: 1}


class TestClassifyTies:
    def test_derived_example(self):
        g = three_edge_graph()
        ties = classify_ties(g, part(g, SPLIT_12_34))
        assert ties.binary_local == pytest.approx(2 / 3)
        assert ties.weighted_local == pytest.approx(0.8)
        assert ties.nonlocal_weight == 2.0

    def test_single_community_all_local(self):
        g = three_edge_graph()
        ties = classify_ties(g, part(g, {n: 0 for n in g.nodes}))
        assert ties.binary_local == 1.0
        assert ties.weighted_local == 1.0

    def test_singletons_all_nonlocal(self):
        g = three_edge_graph()
        ties = classify_ties(g, part(g, {n: n for n in g.nodes}))
        assert ties.binary_local == 0.0

    def test_fractions_sum_to_one(self):
        rng = np.random.default_rng(61)
        for _ in range(10):
            n = 12
            edges = {(int(a), int(b)) for a, b in rng.integers(0, n, (30, 2)) if a != b}
            loops = {int(v): int(rng.integers(1, 5)) for v in rng.integers(0, n, 3)}
            g = Graph.from_edges([(min(a, b), max(a, b), int(rng.integers(1, 6)))
                                  for a, b in edges], loops=loops)
            mapping = {v: int(rng.integers(0, 3)) for v in g.nodes}
            ties = classify_ties(g, part(g, mapping))
            assert ties.binary_local + ties.binary_nonlocal == pytest.approx(1.0)
            assert ties.weighted_local + ties.weighted_nonlocal == pytest.approx(1.0)

    def test_self_loops_local_in_weighted_excluded_from_binary(self):
        g = Graph.from_edges([(1, 2, 1)], loops={1: 9})
        ties = classify_ties(g, part(g, {1: 0, 2: 1}))
        assert ties.binary_local == 0.0  # the loop is not a distinct city pair
        assert ties.weighted_local == pytest.approx(0.9)

    def test_every_edge_labeled_once(self):
        g = three_edge_graph()
        ties = classify_ties(g, part(g, SPLIT_12_34))
        assert len(ties.local_mask) == g.n_edges

    def test_uncovered_node_rejected(self):
        g = three_edge_graph()
        with pytest.raises(ContractError):
            classify_ties(g, part(Graph.from_edges([(1, 2, 1)]), {1: 0, 2: 0}))

    def test_refining_never_increases_weighted_local(self):
        rng = np.random.default_rng(62)
        for _ in range(10):
            n = 14
            edges = {(int(a), int(b)) for a, b in rng.integers(0, n, (40, 2)) if a != b}
            g = Graph.from_edges([(min(a, b), max(a, b), int(rng.integers(1, 4)))
                                  for a, b in edges])
            coarse = {v: int(rng.integers(0, 3)) for v in g.nodes}
            fine = {v: (coarse[v], int(rng.integers(0, 2))) for v in g.nodes}
            t_coarse = classify_ties(g, part(g, coarse))
            t_fine = classify_ties(g, part(g, fine))
            assert t_fine.weighted_local <= t_coarse.weighted_local + 1e-12


class TestCommunityGraph:
    def test_single_community(self):
        g = three_edge_graph()
        cg = community_graph(g, part(g, {n: 0 for n in g.nodes}))
        assert cg.nodes == [0]
        assert cg.n_edges == 0
        assert dict(cg.loop_items()) == {0: 10}

    def test_two_communities_crossing_edge(self):
        g = Graph.from_edges([(1, 2, 1), (3, 4, 1), (2, 3, 2)])
        cg = community_graph(g, part(g, SPLIT_12_34))
        assert cg.edge_list() == [(0, 1, 2)]

    def test_conservation_and_nonlocal_consistency(self):
        rng = np.random.default_rng(63)
        for _ in range(10):
            n = 15
            edges = {(int(a), int(b)) for a, b in rng.integers(0, n, (35, 2)) if a != b}
            loops = {int(v): int(rng.integers(1, 4)) for v in rng.integers(0, n, 4)}
            g = Graph.from_edges([(min(a, b), max(a, b), int(rng.integers(1, 5)))
                                  for a, b in edges], loops=loops)
            p = part(g, {v: int(rng.integers(0, 4)) for v in g.nodes})
            cg = community_graph(g, p)
            assert int(cg.total_weight()) == int(g.total_weight())
            ties = classify_ties(g, p)
            assert float(cg.total_edge_weight()) == pytest.approx(ties.nonlocal_weight)


class TestNonlocalHubs:
    def test_derived_example(self):
        g = three_edge_graph()
        report = nonlocal_hubs(g, part(g, SPLIT_12_34), threshold=1)
        assert report.hubs == [2, 3]
        assert report.counts == {1: 0, 2: 1, 3: 1, 4: 0}

    def test_single_community_no_hubs(self):
        g = three_edge_graph()
        report = nonlocal_hubs(g, part(g, {n: 0 for n in g.nodes}), threshold=1)
        assert report.hubs == []

    def test_threshold_monotonicity(self):
        rng = np.random.default_rng(64)
        g = Graph.from_edges([(min(a, b), max(a, b), 1)
                              for a, b in {tuple(r) for r in rng.integers(0, 20, (60, 2))}
                              if a != b])
        p = part(g, {v: int(rng.integers(0, 4)) for v in g.nodes})
        hubs_by_t = [set(nonlocal_hubs(g, p, t).hubs) for t in (1, 2, 3, 4)]
        for smaller, larger in zip(hubs_by_t[1:], hubs_by_t[:-1]):
            assert smaller <= larger

    def test_subgraph_keeps_only_crossing_edges(self):
        g = Graph.from_edges([(1, 2, 5), (3, 4, 3), (2, 3, 2), (2, 4, 1)],
                             loops={2: 7})
        p = part(g, SPLIT_12_34)
        report = nonlocal_hubs(g, p, threshold=1)
        assert set(report.hubs) == {2, 3, 4}
        for u, v, _ in report.subgraph.edge_list():
            assert p.as_dict()[u] != p.as_dict()[v]
        assert report.subgraph.loop_items() == []

    def test_bad_threshold(self):
        g = three_edge_graph()
        with pytest.raises(ParameterError):
            nonlocal_hubs(g, part(g, SPLIT_12_34), threshold=0)


class TestComposition:
    def test_uniform_country(self):
        g = Graph.from_edges([(1, 2, 1), (2, 3, 1)])
        table = community_composition(part(g, {1: 0, 2: 0, 3: 0}),
                                      {1: "GB", 2: "GB", 3: "GB"})
        assert table.counts == [{"GB": 3}]
        assert table.entropy_bits == [0.0]
        assert table.dominant == ["GB"]

    def test_symmetric_tie(self):
        g = Graph.from_edges([(1, 2, 1), (2, 3, 1), (3, 4, 1)])
        table = community_composition(part(g, {n: 0 for n in g.nodes}),
                                      {1: "GB", 2: "GB", 3: "US", 4: "US"})
        assert table.entropy_bits[0] == pytest.approx(1.0)
        assert table.dominant == ["GB"]

    def test_random_matches_counter_oracle(self):
        rng = np.random.default_rng(65)
        g = Graph.from_edges([(i, i + 1, 1) for i in range(99)])
        mapping = {v: int(rng.integers(0, 5)) for v in g.nodes}
        countries = {v: f"C{int(rng.integers(0, 4))}" for v in g.nodes}
        p = part(g, mapping)
        table = community_composition(p, countries)
        for cid, members in enumerate(p.communities()):
            assert table.counts[cid] == dict(Counter(countries[v] for v in members))
            assert sum(table.counts[cid].values()) == len(members)

    def test_missing_metadata_rejected(self):
        g = Graph.from_edges([(1, 2, 1)])
        with pytest.raises(ContractError):
            community_composition(part(g, {1: 0, 2: 0}), {1: "GB"})


class TestGeojson:
    def test_city_points(self):
        g = three_edge_graph()
        p = part(g, SPLIT_12_34)
        coords = {n: (float(n), -float(n)) for n in g.nodes}
        geo = city_points_geojson(p, coords, labels={n: f"city{n}" for n in g.nodes})
        assert geo["type"] == "FeatureCollection"
        assert len(geo["features"]) == 4
        f0 = geo["features"][0]
        assert f0["geometry"]["coordinates"] == [-1.0, 1.0]  # lon, lat order
        assert f0["properties"]["community"] == 0

    def test_community_arcs_use_mean_coordinates(self):
        g = Graph.from_edges([(1, 2, 1), (3, 4, 1), (2, 3, 2)])
        p = part(g, SPLIT_12_34)
        coords = {1: (0.0, 0.0), 2: (2.0, 2.0), 3: (10.0, 10.0), 4: (12.0, 14.0)}
        means = community_coordinates(p, coords)
        assert means == {0: (1.0, 1.0), 1: (11.0, 12.0)}
        arcs = community_arcs_geojson(community_graph(g, p), means)
        assert arcs["features"][0]["geometry"]["coordinates"] == [[1.0, 1.0], [12.0, 11.0]]
        assert arcs["features"][0]["properties"]["weight"] == 2
