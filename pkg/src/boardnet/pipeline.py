"""Pipeline stages over on-disk artifacts, with a provenance manifest.

Each stage reads the artifacts of earlier stages, verifies them against
the hashes recorded in ``manifest.json``, writes its own outputs
atomically (temp file + rename) and appends a manifest entry with input
hashes, parameters, output hashes, wall-clock time and content counts.
Reruns with identical inputs and configuration produce byte-identical
artifacts.
"""

from __future__ import annotations

import contextlib
import csv
import hashlib
import json
import os
import time
import warnings
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import centrality as centrality_mod
from . import locality as locality_mod
from .citygraph import aggregate_to_cities
from .community import (Partition, SelfLoopMode, crosswalk, louvain,
                        stability_check)
from .errors import StalenessError, UsageError, ParameterError
from .geo import (ClusterAssignment, UnassignedReason, apply_gazetteer,
                  assign_firms, cluster_cities, load_gazetteer,
                  split_border_clusters)
from .graph import Graph, component_labels
from .ingest import (filter_firms, filter_mega_directors, filter_positions,
                     parse_firms, parse_ownership, parse_positions, parse_role)
from .interlock import (connected_components, giant_component,
                        project_interlocks, remove_ownership_ties)
from .synth import ROLE_STRINGS, PlantedConfig, generate_planted

STAGE_ORDER = ["synth", "ingest", "project", "components", "geocluster",
               "aggregate", "communities", "centrality", "locality", "report"]

# Stages the report requires to be complete.
ANALYSIS_STAGES = ["ingest", "project", "components", "geocluster",
                   "aggregate", "communities", "centrality", "locality"]


@dataclass
class PipelineConfig:
    firms_csv: str | None = None
    positions_csv: str | None = None
    ownership_csv: str | None = None
    gazetteer_csv: str | None = None  # optional city,country -> lat,lon cache
    out_dir: str = "run"
    bandwidth: float = 0.1
    geo_metric: str = "euclidean"
    resolution: float = 1.0
    seed: int = 0
    stability_seeds: list[int] = field(default_factory=lambda: [0, 1, 2])
    max_positions: int = 100
    ownership_threshold: float = 0.5
    hub_threshold: int = 1000
    center_min_edge_weight: int = 20
    self_loop_mode: str = "excluded"
    distance_sample: int | None = None
    threads: int = 1
    synth: dict | None = None

    def validate(self):
        if self.bandwidth <= 0:
            raise ParameterError("bandwidth must be positive")
        if self.geo_metric not in ("euclidean", "haversine"):
            raise ParameterError(f"unknown geo metric {self.geo_metric!r}")
        if self.resolution <= 0:
            raise ParameterError("resolution must be positive")
        if self.max_positions < 1:
            raise ParameterError("max_positions must be >= 1")
        if not 0.0 <= self.ownership_threshold <= 1.0:
            raise ParameterError("ownership_threshold must be in [0, 1]")
        if self.hub_threshold < 1:
            raise ParameterError("hub_threshold must be >= 1")
        if self.center_min_edge_weight < 0:
            raise ParameterError("center_min_edge_weight must be >= 0")
        if self.self_loop_mode not in ("included", "excluded"):
            raise ParameterError(f"unknown self_loop_mode {self.self_loop_mode!r}")
        if self.distance_sample is not None and self.distance_sample < 1:
            raise ParameterError("distance_sample must be >= 1")
        if self.threads < 1:
            raise ParameterError("threads must be >= 1")

    def to_json_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_json_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**data)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))

    def primary_mode(self) -> SelfLoopMode:
        return SelfLoopMode(self.self_loop_mode)


# -- atomic IO and hashing ------------------------------------------


@contextlib.contextmanager
def atomic_write(path, binary=False):
    """Open a temp file that replaces ``path`` only on successful close."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".part")
    fh = open(tmp, "wb" if binary else "w",
              **({} if binary else {"newline": "", "encoding": "utf-8"}))
    try:
        yield fh
        fh.close()
        os.replace(tmp, path)
    except BaseException:
        fh.close()
        tmp.unlink(missing_ok=True)
        raise


def atomic_publish(path, write_fn):
    """Run a path-taking writer against a temp path, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".part")
    try:
        write_fn(tmp)
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def write_json(path, obj):
    with atomic_write(path) as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path, header, rows):
    with atomic_write(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def file_sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


# -- manifest --------------------------------------------------------


def manifest_path(run_dir):
    return Path(run_dir) / "manifest.json"


def load_manifest(run_dir):
    path = manifest_path(run_dir)
    if not path.exists():
        return {"stages": {}}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _hash_entries(run_dir, paths):
    return [{"path": str(Path(p).relative_to(run_dir)), "sha256": file_sha256(p)}
            for p in paths]


def _verify_inputs(manifest, run_dir, inputs):
    """Check stage inputs exist and match recorded producer hashes."""
    recorded = {}
    for stage_entry in manifest["stages"].values():
        for out in stage_entry.get("outputs", []):
            recorded[out["path"]] = (stage_entry["stage"], out["sha256"])
    for path, producer in inputs:
        path = Path(path)
        if not path.exists():
            if producer:
                raise StalenessError(
                    f"stage '{producer}' has not produced {path.name}; run it first")
            raise UsageError(f"missing input file: {path}")
        try:
            rel = str(path.relative_to(run_dir))
        except ValueError:
            continue  # user-supplied file outside the run directory
        if rel in recorded:
            stage, digest = recorded[rel]
            if file_sha256(path) != digest:
                raise StalenessError(
                    f"artifact {rel} no longer matches the output of stage '{stage}'; "
                    f"rerun '{stage}' and everything after it")


@contextlib.contextmanager
def run_lock(run_dir):
    lock = Path(run_dir) / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise UsageError(f"run directory is locked ({lock}); "
                         "another stage appears to be running") from None
    try:
        os.write(fd, f"{os.getpid()}\n".encode())
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


# -- shared artifact access ------------------------------------------


def _raw(config, run_dir, name):
    override = getattr(config, f"{name}_csv")
    if override:
        return Path(override), None
    return Path(run_dir) / "raw" / f"{name}.csv", "synth"


def _load_firm_graph(path_npz):
    return Graph.load_npz(path_npz)


def _load_city_graph(run_dir):
    return Graph.read_edge_csv(Path(run_dir) / "graphs" / "city_edges.csv",
                               Path(run_dir) / "graphs" / "city_self_loops.csv",
                               int_labels=True)


def _load_assignment(run_dir):
    assignment = ClusterAssignment()
    with open(Path(run_dir) / "geo" / "assignment.csv", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        for firm_id, cluster, reason in reader:
            if cluster:
                assignment.mapping[firm_id] = int(cluster)
            else:
                assignment.unassigned[firm_id] = UnassignedReason(reason)
    return assignment


def _load_cluster_meta(run_dir):
    meta = {}
    with open(Path(run_dir) / "geo" / "clusters.csv", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        for cid, label, country, lat, lon in reader:
            meta[int(cid)] = {"label": label, "country": country,
                              "lat": float(lat), "lon": float(lon)}
    return meta


def _load_primary_partition(run_dir, graph, config):
    mapping = {}
    path = Path(run_dir) / "communities" / "primary_partition.csv"
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        for node, comm in reader:
            mapping[int(node)] = int(comm)
    covered = [node for node in graph.nodes if node in mapping]
    sub = graph.subgraph(covered) if len(covered) < graph.n_nodes else graph
    part = Partition.from_mapping(sub, mapping, resolution=config.resolution,
                                  self_loop_mode=SelfLoopMode.INCLUDED)
    return sub, part


# -- stages ----------------------------------------------------------


def _stage_synth(config, run_dir):
    if not config.synth:
        raise UsageError("config has no 'synth' section")
    synth_args = dict(config.synth)
    synth_args.setdefault("seed", config.seed)
    planted = PlantedConfig(**synth_args)
    dataset = generate_planted(planted)

    raw = Path(run_dir) / "raw"
    tmp = Path(run_dir) / "raw.part"
    dataset.write(tmp)
    raw.mkdir(parents=True, exist_ok=True)
    outputs = []
    for name in ["firms.csv", "positions.csv", "ownership.csv",
                 "truth_city.csv", "truth_community.csv"]:
        os.replace(tmp / name, raw / name)
        outputs.append(raw / name)
    tmp.rmdir()

    counts = {"firms": dataset.n_firms, "cities": dataset.n_cities,
              "positions": len(dataset.positions),
              "planted_interlocks": len(dataset.planted_pairs),
              "ownership_links": len(dataset.ownership)}
    return outputs, counts, {"synth": planted.as_dict()}


def _stage_inputs_synth(config, run_dir):
    return []


def _stage_ingest(config, run_dir):
    firms_path, _ = _raw(config, run_dir, "firms")
    positions_path, _ = _raw(config, run_dir, "positions")
    ownership_path, _ = _raw(config, run_dir, "ownership")

    firms, firm_report = parse_firms(firms_path)
    active = filter_firms(firms)
    positions, pos_report = parse_positions(positions_path)
    table = filter_mega_directors(filter_positions(positions), config.max_positions)
    ownership, own_report = parse_ownership(ownership_path)

    clean = Path(run_dir) / "clean"
    role_text = {parse_role(s): s for s in ROLE_STRINGS}

    def fmt(c):
        return ("", "") if c is None else (f"{c[0]:.6f}", f"{c[1]:.6f}")

    write_csv(clean / "firms.csv",
              ["firm_id", "name", "status", "city", "country", "lat", "lon"],
              [[f.firm_id, f.name, f.status.value, f.city_name, f.country, *fmt(f.coordinates)]
               for f in active])
    write_csv(clean / "positions.csv",
              ["firm_id", "person_id", "role", "status"],
              [[r.firm_id, r.person_id, role_text[r.role], r.status.value]
               for r in table.records])
    write_csv(clean / "ownership.csv",
              ["parent_id", "child_id", "fraction"],
              [[o.parent_firm_id, o.child_firm_id, repr(o.fraction)] for o in ownership])

    counts = {"firms_active": len(active), "positions_kept": len(table.records),
              "persons": len(table.person_firm_counts), "ownership_links": len(ownership)}
    write_json(clean / "ingest_report.json",
               {"firms": firm_report.as_dict(), "positions": pos_report.as_dict(),
                "ownership": own_report.as_dict(), "counts": counts})
    outputs = [clean / n for n in
               ["firms.csv", "positions.csv", "ownership.csv", "ingest_report.json"]]
    return outputs, counts, {"max_positions": config.max_positions}


def _stage_inputs_ingest(config, run_dir):
    return [_raw(config, run_dir, n) for n in ("firms", "positions", "ownership")]


def _stage_project(config, run_dir):
    clean = Path(run_dir) / "clean"
    positions, _ = parse_positions(clean / "positions.csv")
    table = filter_mega_directors(filter_positions(positions), config.max_positions)
    ownership, _ = parse_ownership(clean / "ownership.csv")

    graph = project_interlocks(table)
    graph, own_report = remove_ownership_ties(graph, ownership,
                                              config.ownership_threshold)

    graphs = Path(run_dir) / "graphs"
    atomic_publish(graphs / "firm_edges.csv", graph.write_edge_csv)
    atomic_publish(graphs / "firm_edges.npz", graph.save_npz)
    counts = {"nodes": graph.n_nodes, "edges": graph.n_edges,
              "total_weight": int(graph.total_edge_weight()) if graph.n_edges else 0}
    write_json(graphs / "project_report.json",
               {"ownership_filter": own_report.as_dict(), "counts": counts})
    outputs = [graphs / "firm_edges.csv", graphs / "firm_edges.npz",
               graphs / "project_report.json"]
    return outputs, counts, {"ownership_threshold": config.ownership_threshold}


def _stage_inputs_project(config, run_dir):
    clean = Path(run_dir) / "clean"
    return [(clean / "positions.csv", "ingest"), (clean / "ownership.csv", "ingest")]


def _stage_components(config, run_dir):
    graphs = Path(run_dir) / "graphs"
    graph = _load_firm_graph(graphs / "firm_edges.npz")
    stats, _labels = connected_components(graph)
    giant = giant_component(graph)

    atomic_publish(graphs / "firm_giant.csv", giant.write_edge_csv)
    atomic_publish(graphs / "firm_giant.npz", giant.save_npz)
    stats_dict = stats.as_dict()
    if stats.component_count > 50:
        stats_dict["sizes"] = sorted(stats_dict["sizes"], reverse=True)[:50]
    write_json(graphs / "components.json", stats_dict)

    counts = {"components": stats.component_count, "giant_size": stats.giant_size,
              "giant_edges": giant.n_edges}
    outputs = [graphs / "firm_giant.csv", graphs / "firm_giant.npz",
               graphs / "components.json"]
    return outputs, counts, {}


def _stage_inputs_components(config, run_dir):
    return [(Path(run_dir) / "graphs" / "firm_edges.npz", "project")]


def _stage_geocluster(config, run_dir):
    firms, _ = parse_firms(Path(run_dir) / "clean" / "firms.csv")
    resolved = 0
    if config.gazetteer_csv:
        firms, resolved = apply_gazetteer(firms, load_gazetteer(config.gazetteer_csv))
    clusters, _ = cluster_cities(firms, bandwidth=config.bandwidth,
                                 metric=config.geo_metric)
    clusters = split_border_clusters(clusters)
    assignment = assign_firms(firms, clusters)

    geo_dir = Path(run_dir) / "geo"
    write_csv(geo_dir / "clusters.csv",
              ["cluster_id", "label", "country", "lat", "lon"],
              [[c.cluster_id, c.label, c.country,
                f"{c.centroid[0]:.6f}", f"{c.centroid[1]:.6f}"] for c in clusters])
    rows = [[fid, cid, ""] for fid, cid in sorted(assignment.mapping.items())]
    rows += [[fid, "", reason.value] for fid, reason in sorted(assignment.unassigned.items())]
    rows.sort(key=lambda r: r[0])
    write_csv(geo_dir / "assignment.csv", ["firm_id", "cluster_id", "reason"], rows)

    counts = {"clusters": len(clusters), "assigned": len(assignment.mapping),
              "unassigned": len(assignment.unassigned),
              "gazetteer_resolved": resolved}
    write_json(geo_dir / "geocluster_report.json", counts)
    outputs = [geo_dir / "clusters.csv", geo_dir / "assignment.csv",
               geo_dir / "geocluster_report.json"]
    return outputs, counts, {"bandwidth": config.bandwidth, "metric": config.geo_metric}


def _stage_inputs_geocluster(config, run_dir):
    inputs = [(Path(run_dir) / "clean" / "firms.csv", "ingest")]
    if config.gazetteer_csv:
        inputs.append((Path(config.gazetteer_csv), None))
    return inputs


def _stage_aggregate(config, run_dir):
    graphs = Path(run_dir) / "graphs"
    giant = _load_firm_graph(graphs / "firm_giant.npz")
    assignment = _load_assignment(run_dir)
    meta = _load_cluster_meta(run_dir)

    city, report = aggregate_to_cities(giant, assignment)
    dropped_cities = 0
    if city.n_nodes and component_labels(city).max() > 0:
        warnings.warn("city graph is disconnected after exclusions; "
                      "proceeding on its giant component")
        before = city.n_nodes
        city = giant_component(city)
        dropped_cities = before - city.n_nodes

    atomic_publish(graphs / "city_edges.csv",
                   lambda p: city.write_edge_csv(p, ("src_cluster", "dst_cluster", "weight")))
    atomic_publish(graphs / "city_self_loops.csv", city.write_loop_csv)
    write_csv(graphs / "city_nodes.csv",
              ["cluster_id", "label", "country", "lat", "lon"],
              [[cid, meta[cid]["label"], meta[cid]["country"],
                f"{meta[cid]['lat']:.6f}", f"{meta[cid]['lon']:.6f}"]
               for cid in city.nodes])

    counts = {"cities": city.n_nodes, "edges": city.n_edges,
              "self_loop_weight": int(city.total_loop_weight()),
              "total_weight": int(city.total_weight()),
              "cities_dropped_disconnected": dropped_cities}
    write_json(graphs / "aggregate_report.json",
               {**report.as_dict(), **counts})
    outputs = [graphs / n for n in ["city_edges.csv", "city_self_loops.csv",
                                    "city_nodes.csv", "aggregate_report.json"]]
    return outputs, counts, {}


def _stage_inputs_aggregate(config, run_dir):
    return [(Path(run_dir) / "graphs" / "firm_giant.npz", "components"),
            (Path(run_dir) / "geo" / "assignment.csv", "geocluster"),
            (Path(run_dir) / "geo" / "clusters.csv", "geocluster")]


def _stage_communities(config, run_dir):
    city = _load_city_graph(run_dir)
    comm_dir = Path(run_dir) / "communities"
    primary = config.primary_mode()
    outputs = []
    summary = {"resolution": config.resolution, "seed": config.seed,
               "self_loop_mode": primary.value, "modes": {}}
    tops = {}
    for mode in (SelfLoopMode.INCLUDED, SelfLoopMode.EXCLUDED):
        dendro = louvain(city, resolution=config.resolution, seed=config.seed,
                         self_loop_mode=mode)
        tops[mode] = dendro.final
        for level, part in enumerate(dendro.levels):
            path = comm_dir / f"partition_{mode.value}_level{level}.csv"
            write_csv(path, ["node_id", "community_id"],
                      zip(part.node_ids, part.membership.tolist()))
            outputs.append(path)
        summary["modes"][mode.value] = {
            "levels": len(dendro.levels),
            "modularity": [p.modularity for p in dendro.levels],
            "communities": [p.n_communities for p in dendro.levels],
        }

    top = tops[primary]
    write_csv(comm_dir / "primary_partition.csv", ["node_id", "community_id"],
              zip(top.node_ids, top.membership.tolist()))
    outputs.append(comm_dir / "primary_partition.csv")

    # Nested-structure crosswalk between the with/without self-loop partitions,
    # restricted to the nodes both cover.
    a, b = tops[SelfLoopMode.INCLUDED], tops[SelfLoopMode.EXCLUDED]
    common = sorted(set(a.node_ids) & set(b.node_ids))
    walk = crosswalk(a.restrict(common), b.restrict(common))
    summary["crosswalk"] = {**walk.as_dict(), "common_nodes": len(common)}

    if len(config.stability_seeds) >= 2:
        report = stability_check(city, resolution=config.resolution,
                                 seeds=config.stability_seeds,
                                 self_loop_mode=primary, threads=config.threads)
        write_json(comm_dir / "stability.json", report.as_dict())
        outputs.append(comm_dir / "stability.json")

    write_json(comm_dir / "summary.json", summary)
    outputs.append(comm_dir / "summary.json")
    counts = {"communities": top.n_communities,
              "modularity": top.modularity, "levels": len(summary["modes"][primary.value]["modularity"])}
    params = {"resolution": config.resolution, "seed": config.seed,
              "self_loop_mode": primary.value, "stability_seeds": config.stability_seeds}
    return outputs, counts, params


def _stage_inputs_communities(config, run_dir):
    graphs = Path(run_dir) / "graphs"
    return [(graphs / "city_edges.csv", "aggregate"),
            (graphs / "city_self_loops.csv", "aggregate")]


def _stage_centrality(config, run_dir):
    city = _load_city_graph(run_dir)
    cent_dir = Path(run_dir) / "centrality"

    report = centrality_mod.centrality_report(city)
    ecc = centrality_mod.eccentricity_exact(city)
    dist = centrality_mod.distance_stats(city, sample_size=config.distance_sample,
                                         seed=config.seed)
    degdist = centrality_mod.degree_distribution(city)
    center = centrality_mod.center_subgraph(city, ecc, config.center_min_edge_weight)

    write_csv(cent_dir / "centrality.csv",
              ["node", "degree", "weighted_degree", "betweenness", "eccentricity"],
              [[node, int(report.degree[i]), int(report.weighted_degree[i]),
                repr(float(report.betweenness[i])), int(ecc.eccentricity[i])]
               for i, node in enumerate(city.nodes)])
    write_csv(cent_dir / "degree_distribution.csv", ["degree", "count"],
              sorted(degdist.counts.items()))
    write_csv(cent_dir / "distance_histogram.csv", ["hops", "pairs"],
              sorted(dist.histogram.items()))
    atomic_publish(cent_dir / "center_edges.csv",
                   lambda p: center.write_edge_csv(p, ("src_cluster", "dst_cluster", "weight")))

    summary = {"radius": ecc.radius, "diameter": ecc.diameter,
               "center_size": len(ecc.center), "periphery_size": len(ecc.periphery),
               "bfs_count": ecc.bfs_count,
               "average_distance": dist.average, "distance_exact": dist.exact,
               "eccentricity_histogram": {str(k): v for k, v in ecc.histogram().items()},
               "degree_log_bins": [list(b) for b in degdist.log_bins],
               "top25": {m: report.top(m, 25) for m in report.rankings}}
    write_json(cent_dir / "summary.json", summary)

    counts = {"radius": ecc.radius, "diameter": ecc.diameter,
              "bfs_count": ecc.bfs_count, "center_size": len(ecc.center)}
    outputs = [cent_dir / n for n in
               ["centrality.csv", "degree_distribution.csv", "distance_histogram.csv",
                "center_edges.csv", "summary.json"]]
    params = {"center_min_edge_weight": config.center_min_edge_weight,
              "distance_sample": config.distance_sample}
    return outputs, counts, params


def _stage_inputs_centrality(config, run_dir):
    graphs = Path(run_dir) / "graphs"
    return [(graphs / "city_edges.csv", "aggregate"),
            (graphs / "city_self_loops.csv", "aggregate")]


def _stage_locality(config, run_dir):
    city = _load_city_graph(run_dir)
    graph, partition = _load_primary_partition(run_dir, city, config)
    uncovered = city.n_nodes - graph.n_nodes
    meta = _load_cluster_meta(run_dir)
    loc_dir = Path(run_dir) / "locality"

    ties = locality_mod.classify_ties(graph, partition)
    comm_graph = locality_mod.community_graph(graph, partition)
    hubs = locality_mod.nonlocal_hubs(graph, partition, config.hub_threshold)
    composition = locality_mod.community_composition(
        partition, {node: meta[node]["country"] for node in graph.nodes})

    labels = np.where(ties.local_mask, "local", "nonlocal")
    write_csv(loc_dir / "tie_classification.csv",
              ["edge", "src", "dst", "weight", "label"],
              [[i, u, v, w, labels[i]] for i, (u, v, w) in enumerate(graph.edge_list())])
    atomic_publish(loc_dir / "community_edges.csv",
                   lambda p: comm_graph.write_edge_csv(p, ("src_community", "dst_community", "weight")))
    atomic_publish(loc_dir / "community_self_loops.csv",
                   lambda p: comm_graph.write_loop_csv(p, ("community", "self_weight")))
    write_csv(loc_dir / "hubs.csv", ["city", "nonlocal_neighbor_count"],
              [[city_id, hubs.counts[city_id]] for city_id in hubs.hubs])
    write_csv(loc_dir / "composition.csv", ["community", "country", "count"],
              [[cid, country, count]
               for cid, table in enumerate(composition.counts)
               for country, count in table.items()])

    coords = {node: (meta[node]["lat"], meta[node]["lon"]) for node in graph.nodes}
    comm_coords = locality_mod.community_coordinates(partition, coords)
    points = locality_mod.city_points_geojson(
        partition, coords, {node: meta[node]["label"] for node in graph.nodes})
    arcs = locality_mod.community_arcs_geojson(comm_graph, comm_coords)
    write_json(loc_dir / "cities.geojson", points)
    write_json(loc_dir / "community_arcs.geojson", arcs)

    counts = {"hubs": len(hubs.hubs), "communities": partition.n_communities,
              "uncovered_cities": uncovered}
    write_json(loc_dir / "locality_report.json",
               {"fractions": ties.as_dict(),
                "community_coordinates": {str(k): list(v) for k, v in comm_coords.items()},
                **counts})
    outputs = [loc_dir / n for n in
               ["tie_classification.csv", "community_edges.csv", "community_self_loops.csv",
                "hubs.csv", "composition.csv", "cities.geojson", "community_arcs.geojson",
                "locality_report.json"]]
    return outputs, counts, {"hub_threshold": config.hub_threshold}


def _stage_inputs_locality(config, run_dir):
    graphs = Path(run_dir) / "graphs"
    return [(graphs / "city_edges.csv", "aggregate"),
            (graphs / "city_self_loops.csv", "aggregate"),
            (graphs / "city_nodes.csv", "aggregate"),
            (Path(run_dir) / "communities" / "primary_partition.csv", "communities")]


def _read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _read_csv_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        return list(reader)


def _stage_report(config, run_dir):
    run_dir = Path(run_dir)
    manifest = load_manifest(run_dir)
    missing = [s for s in ANALYSIS_STAGES if s not in manifest["stages"]]
    if missing:
        raise StalenessError(f"run is incomplete; missing stages: {', '.join(missing)}")

    cent_summary = _read_json(run_dir / "centrality" / "summary.json")
    comm_summary = _read_json(run_dir / "communities" / "summary.json")
    loc_report = _read_json(run_dir / "locality" / "locality_report.json")

    bundle = {
        "histograms": {
            "degree": {row[0]: int(row[1])
                       for row in _read_csv_rows(run_dir / "centrality" / "degree_distribution.csv")},
            "degree_log_bins": cent_summary["degree_log_bins"],
            "distance": {row[0]: int(row[1])
                         for row in _read_csv_rows(run_dir / "centrality" / "distance_histogram.csv")},
        },
        "eccentricity": {"radius": cent_summary["radius"],
                         "diameter": cent_summary["diameter"],
                         "center_size": cent_summary["center_size"],
                         "periphery_size": cent_summary["periphery_size"],
                         "histogram": cent_summary["eccentricity_histogram"]},
        "centrality": {"top25": cent_summary["top25"],
                       "average_distance": cent_summary["average_distance"]},
        "partition": {"self_loop_mode": comm_summary["self_loop_mode"],
                      "resolution": comm_summary["resolution"],
                      "seed": comm_summary["seed"],
                      "modes": comm_summary["modes"]},
        "crosswalk": comm_summary["crosswalk"],
        "composition": [[row[0], row[1], int(row[2])]
                        for row in _read_csv_rows(run_dir / "locality" / "composition.csv")],
        "community_graph": {
            "edges": [[row[0], row[1], float(row[2])]
                      for row in _read_csv_rows(run_dir / "locality" / "community_edges.csv")],
            "self_loops": [[row[0], float(row[1])]
                           for row in _read_csv_rows(run_dir / "locality" / "community_self_loops.csv")],
            "coordinates": loc_report["community_coordinates"],
        },
        "hubs": {"threshold": manifest["stages"]["locality"]["params"]["hub_threshold"],
                 "cities": [[row[0], int(row[1])]
                            for row in _read_csv_rows(run_dir / "locality" / "hubs.csv")]},
        "tie_fractions": loc_report["fractions"],
    }
    write_json(run_dir / "report.json", bundle)
    counts = {"sections": len(bundle)}
    return [run_dir / "report.json"], counts, {}


def _stage_inputs_report(config, run_dir):
    run_dir = Path(run_dir)
    return [(run_dir / "centrality" / "summary.json", "centrality"),
            (run_dir / "communities" / "summary.json", "communities"),
            (run_dir / "locality" / "locality_report.json", "locality")]


_STAGES = {
    "synth": (_stage_inputs_synth, _stage_synth),
    "ingest": (_stage_inputs_ingest, _stage_ingest),
    "project": (_stage_inputs_project, _stage_project),
    "components": (_stage_inputs_components, _stage_components),
    "geocluster": (_stage_inputs_geocluster, _stage_geocluster),
    "aggregate": (_stage_inputs_aggregate, _stage_aggregate),
    "communities": (_stage_inputs_communities, _stage_communities),
    "centrality": (_stage_inputs_centrality, _stage_centrality),
    "locality": (_stage_inputs_locality, _stage_locality),
    "report": (_stage_inputs_report, _stage_report),
}


def run_stage(stage, config: PipelineConfig, run_dir):
    """Run one pipeline stage and append its manifest entry."""
    if stage not in _STAGES:
        raise UsageError(f"unknown stage {stage!r}; choose from {', '.join(STAGE_ORDER)}")
    config.validate()
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    inputs_fn, stage_fn = _STAGES[stage]

    with run_lock(run_dir):
        manifest = load_manifest(run_dir)
        inputs = inputs_fn(config, run_dir)
        _verify_inputs(manifest, run_dir, inputs)
        input_hashes = [{"path": str(p), "sha256": file_sha256(p)} for p, _ in inputs]

        start = time.perf_counter()
        outputs, counts, params = stage_fn(config, run_dir)
        wall = time.perf_counter() - start

        entry = {"stage": stage, "params": params, "counts": counts,
                 "wall_clock_s": round(wall, 6),
                 "inputs": input_hashes,
                 "outputs": _hash_entries(run_dir, outputs)}
        manifest["stages"][stage] = entry
        write_json(manifest_path(run_dir), manifest)
    return entry


def run_all(config: PipelineConfig, run_dir, stages=None):
    """Run the standard stage sequence (synth first only when configured)."""
    if stages is None:
        stages = [s for s in STAGE_ORDER if s != "synth" or config.synth]
    return [run_stage(stage, config, run_dir) for stage in stages]
