import filecmp
import math

import numpy as np
import pytest

from boardnet.community import Partition
from boardnet.errors import ContractError, ParameterError
from boardnet.graph import Graph, component_labels
from boardnet.ingest import (filter_firms, filter_mega_directors,
                             filter_positions, parse_firms, parse_ownership,
                             parse_positions)
from boardnet.interlock import project_interlocks, remove_ownership_ties
from boardnet.synth import (PlantedConfig, generate_planted, score_recovery)

from _oracles import nmi_direct

BASE = dict(communities=3, cities_per_community=3, firms_per_city=6,
            p_in=0.5, p_out=0.02, seed=9)


def ingest_dataset(ds, max_positions=100):
    table = filter_mega_directors(filter_positions(ds.positions), max_positions)
    return table


class TestGenerate:
    def test_forced_two_components(self):
        ds = generate_planted(PlantedConfig(communities=2, cities_per_community=2,
                                            firms_per_city=4, p_in=1.0, p_out=0.0,
                                            seed=1))
        g = project_interlocks(ingest_dataset(ds))
        labels = component_labels(g)
        assert labels.max() == 1
        comms = {ds.truth_community[ds.truth_city[f]] for f in g.nodes}
        for comp in (0, 1):
            members = [g.nodes[i] for i in np.nonzero(labels == comp)[0]]
            assert len({ds.truth_community[ds.truth_city[f]] for f in members}) == 1

    def test_zero_probabilities_empty_graph(self):
        ds = generate_planted(PlantedConfig(communities=2, cities_per_community=2,
                                            firms_per_city=3, p_in=0.0, p_out=0.0,
                                            seed=1))
        assert ds.planted_pairs == []
        g = project_interlocks(ingest_dataset(ds), keep_isolated=True)
        assert g.n_edges == 0

    def test_same_seed_byte_identical(self, tmp_path):
        cfg = PlantedConfig(**BASE, mega_directors=1, mega_director_positions=20,
                            ownership_ties=2)
        generate_planted(cfg).write(tmp_path / "a")
        generate_planted(cfg).write(tmp_path / "b")
        for name in ["firms.csv", "positions.csv", "ownership.csv",
                     "truth_city.csv", "truth_community.csv"]:
            assert filecmp.cmp(tmp_path / "a" / name, tmp_path / "b" / name,
                               shallow=False), name

    def test_injections_do_not_disturb_base_data(self):
        plain = generate_planted(PlantedConfig(**BASE))
        spiked = generate_planted(PlantedConfig(**BASE, mega_directors=1,
                                                mega_director_positions=30,
                                                ownership_ties=3,
                                                missing_coordinate_firms=2))
        assert plain.planted_pairs == spiked.planted_pairs
        assert [f.firm_id for f in plain.firms] == [f.firm_id for f in spiked.firms]

    def test_roundtrip_through_ingest(self, tmp_path):
        cfg = PlantedConfig(**BASE, mega_directors=1, mega_director_positions=30)
        ds = generate_planted(cfg)
        ds.write(tmp_path)
        firms, report = parse_firms(tmp_path / "firms.csv")
        assert report.malformed == 0
        assert len(filter_firms(firms)) == ds.n_firms
        parsed_coords = {f.firm_id: f.coordinates for f in firms}
        assert parsed_coords == {f.firm_id: f.coordinates for f in ds.firms}

        positions, _ = parse_positions(tmp_path / "positions.csv")
        # cap below the injected 30-position director so the filter removes it
        table = filter_mega_directors(filter_positions(positions), 29)
        want = ds.expected_position_table()
        got_keys = sorted((r.firm_id, r.person_id, r.role.value) for r in table.records)
        want_keys = sorted((r.firm_id, r.person_id, r.role.value) for r in want.records)
        assert got_keys == want_keys

        ownership, _ = parse_ownership(tmp_path / "ownership.csv")
        assert [(o.parent_firm_id, o.child_firm_id, o.fraction) for o in ownership] == \
               [(o.parent_firm_id, o.child_firm_id, o.fraction) for o in ds.ownership]

    def test_mega_director_exceeds_cap_and_is_filtered(self):
        cfg = PlantedConfig(communities=2, cities_per_community=4, firms_per_city=20,
                            p_in=0.1, p_out=0.01, mega_directors=1,
                            mega_director_positions=101, seed=3)
        ds = generate_planted(cfg)
        assert len(ds.mega_person_ids) == 1
        table = ingest_dataset(ds)
        assert not any(r.person_id in set(ds.mega_person_ids) for r in table.records)

    def test_ownership_fractions_above_half(self):
        ds = generate_planted(PlantedConfig(**BASE, ownership_ties=5))
        assert all(0.5 < o.fraction <= 1.0 for o in ds.ownership)

    def test_ownership_fraction_override(self):
        ds = generate_planted(PlantedConfig(**BASE, ownership_ties=2,
                                            ownership_fraction=0.5))
        assert all(o.fraction == 0.5 for o in ds.ownership)

    def test_missing_coordinates(self):
        ds = generate_planted(PlantedConfig(**BASE, missing_coordinate_firms=4))
        assert sum(1 for f in ds.firms if f.coordinates is None) == 4

    def test_binomial_expectation_4_sigma(self):
        cfg = PlantedConfig(communities=3, cities_per_community=3, firms_per_city=12,
                            p_in=0.3, p_out=0.01, seed=17)
        ds = generate_planted(cfg)
        comm = {f.firm_id: ds.truth_community[ds.truth_city[f.firm_id]]
                for f in ds.firms}
        intra = sum(1 for a, b in ds.planted_pairs if comm[a] == comm[b])
        inter = len(ds.planted_pairs) - intra
        per_comm = cfg.cities_per_community * cfg.firms_per_city
        n = per_comm * cfg.communities
        intra_pairs = cfg.communities * per_comm * (per_comm - 1) // 2
        inter_pairs = n * (n - 1) // 2 - intra_pairs
        for got, n_pairs, p in [(intra, intra_pairs, cfg.p_in),
                                (inter, inter_pairs, cfg.p_out)]:
            mean = n_pairs * p
            sigma = math.sqrt(n_pairs * p * (1 - p))
            assert abs(got - mean) <= 4 * sigma

    def test_city_size_skew(self):
        ds = generate_planted(PlantedConfig(communities=1, cities_per_community=6,
                                            firms_per_city=32, city_size_skew=1.0,
                                            p_in=0.0, p_out=0.0, seed=2))
        sizes = {}
        for f in ds.firms:
            sizes[ds.truth_city[f.firm_id]] = sizes.get(ds.truth_city[f.firm_id], 0) + 1
        ordered = [sizes[c] for c in sorted(sizes)]
        assert ordered == [32, 16, 11, 8, 6, 5]  # 32 / rank

    def test_infeasible_configs_rejected(self):
        with pytest.raises(ParameterError):
            generate_planted(PlantedConfig(**{**BASE, "p_in": 1.5}))
        with pytest.raises(ParameterError):
            generate_planted(PlantedConfig(**BASE, mega_directors=1,
                                           mega_director_positions=10_000))
        with pytest.raises(ParameterError):
            generate_planted(PlantedConfig(**{**BASE, "p_in": 0.0, "p_out": 0.0},
                                           ownership_ties=1))
        with pytest.raises(ParameterError):
            PlantedConfig(**{**BASE, "communities": 0}).validate()

    def test_ownership_links_break_edges(self):
        cfg = PlantedConfig(**BASE, ownership_ties=4)
        ds = generate_planted(cfg)
        g = project_interlocks(ingest_dataset(ds))
        g2, report = remove_ownership_ties(g, ds.ownership)
        assert report.edges_removed == len(set(ds.ownership_pairs))
        remaining = {(u, v) for u, v, _ in g2.edge_list()}
        for a, b in ds.ownership_pairs:
            assert (min(a, b), max(a, b)) not in remaining


class TestScoreRecovery:
    def grid_partition(self, labels):
        nodes = list(range(len(labels)))
        g = Graph.from_edges([(i, i + 1, 1) for i in range(len(labels) - 1)])
        return Partition.from_mapping(g, dict(zip(nodes, labels)))

    def test_perfect(self):
        found = self.grid_partition([0, 0, 1, 1])
        score = score_recovery(found, {0: 5, 1: 5, 2: 9, 3: 9})
        assert score.nmi == 1.0 and score.exact_match

    def test_single_community_vs_blocks(self):
        found = self.grid_partition([0, 0, 0, 0])
        score = score_recovery(found, {0: 0, 1: 0, 2: 1, 3: 1})
        assert score.nmi == 0.0 and not score.exact_match

    def test_one_mislabeled_of_100(self):
        labels = [i // 25 for i in range(100)]
        found_labels = list(labels)
        found_labels[0] = 1
        found = self.grid_partition(found_labels)
        score = score_recovery(found, dict(enumerate(labels)))
        assert score.nmi == pytest.approx(nmi_direct(found_labels, labels), abs=1e-12)
        assert 0.9 < score.nmi < 1.0
        assert not score.exact_match

    def test_node_mismatch(self):
        found = self.grid_partition([0, 0, 1, 1])
        with pytest.raises(ContractError):
            score_recovery(found, {0: 0, 1: 0, 2: 1})
