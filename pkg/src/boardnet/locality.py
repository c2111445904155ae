"""Local/nonlocal tie decomposition relative to a community partition.

A tie is local when both endpoint cities sit in the same community,
nonlocal when it crosses communities.  Binary fractions count distinct
city pairs; weighted fractions count interlocks, with city self-loops
on the local side (intra-city ties are maximally local) but outside
the binary edge count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .community import Partition
from .errors import ContractError, ParameterError
from .graph import Graph

__all__ = [
    "classify_ties", "community_graph", "nonlocal_hubs", "community_composition",
    "TieClassification", "HubReport", "CompositionTable",
    "city_points_geojson", "community_arcs_geojson", "community_coordinates",
]


def _membership_for(graph: Graph, partition: Partition):
    mapping = partition.as_dict()
    try:
        return np.array([mapping[node] for node in graph.nodes], dtype=np.int64)
    except KeyError as exc:
        raise ContractError(f"partition does not cover node {exc.args[0]!r}") from None


@dataclass
class TieClassification:
    local_mask: np.ndarray  # per graph edge, True = local
    binary_local: float
    binary_nonlocal: float
    weighted_local: float
    weighted_nonlocal: float
    nonlocal_weight: float

    def as_dict(self):
        return {"binary_local": self.binary_local, "binary_nonlocal": self.binary_nonlocal,
                "weighted_local": self.weighted_local,
                "weighted_nonlocal": self.weighted_nonlocal,
                "nonlocal_weight": self.nonlocal_weight}


def classify_ties(graph: Graph, partition: Partition) -> TieClassification:
    """Label every edge local or nonlocal and compute both split modes.

    Fractions always sum to 1 per mode; an edgeless graph counts as
    fully local by convention.
    """
    member = _membership_for(graph, partition)
    local = member[graph.src] == member[graph.dst]

    n_edges = graph.n_edges
    binary_local = float(local.sum() / n_edges) if n_edges else 1.0

    total_w = float(graph.total_weight())
    local_w = float(graph.weight[local].sum()) + float(graph.total_loop_weight())
    weighted_local = local_w / total_w if total_w else 1.0
    nonlocal_w = float(graph.weight[~local].sum()) if n_edges else 0.0

    return TieClassification(local, binary_local, 1.0 - binary_local,
                             weighted_local, 1.0 - weighted_local, nonlocal_w)


def community_graph(graph: Graph, partition: Partition) -> Graph:
    """Aggregate the city graph to one node per community.

    Total weight is conserved exactly: crossing edges sum into
    community-pair weights, intra-community edges and city self-loops
    into community self-loops.
    """
    member = _membership_for(graph, partition)
    return graph.aggregate(member, list(range(partition.n_communities)))


@dataclass
class HubReport:
    counts: dict  # city -> distinct nonlocal neighbor count
    hubs: list
    subgraph: Graph  # induced on hubs, inter-community edges only
    threshold: int


def nonlocal_hubs(graph: Graph, partition: Partition, threshold: int = 1000) -> HubReport:
    """Cities connected to at least ``threshold`` cities in other communities.

    The hub subgraph keeps only the hubs' inter-community edges.
    """
    if threshold < 1:
        raise ParameterError(f"hub threshold must be >= 1, got {threshold}")
    member = _membership_for(graph, partition)
    crossing = member[graph.src] != member[graph.dst]

    counts = np.zeros(graph.n_nodes, dtype=np.int64)
    np.add.at(counts, graph.src[crossing], 1)
    np.add.at(counts, graph.dst[crossing], 1)

    hub_idx = np.nonzero(counts >= threshold)[0]
    hubs = [graph.nodes[i] for i in hub_idx]

    keep_node = np.full(graph.n_nodes, -1, dtype=np.int64)
    keep_node[hub_idx] = np.arange(len(hub_idx))
    keep_edge = crossing & (keep_node[graph.src] >= 0) & (keep_node[graph.dst] >= 0)
    sub = Graph(hubs, keep_node[graph.src[keep_edge]], keep_node[graph.dst[keep_edge]],
                graph.weight[keep_edge])
    return HubReport({graph.nodes[i]: int(counts[i]) for i in range(graph.n_nodes)},
                     hubs, sub, threshold)


@dataclass
class CompositionTable:
    counts: list[dict[str, int]]  # per community: country -> city count
    dominant: list[str]
    entropy_bits: list[float]

    def as_dict(self):
        return {"counts": self.counts, "dominant": self.dominant,
                "entropy_bits": self.entropy_bits}


def community_composition(partition: Partition, metadata) -> CompositionTable:
    """Country composition per community.

    ``metadata`` maps node -> country.  Dominant country is the most
    frequent, ties broken by ISO code order; diversity is the Shannon
    entropy of the country shares, in bits.
    """
    counts: list[dict[str, int]] = [{} for _ in range(partition.n_communities)]
    for node, cid in zip(partition.node_ids, partition.membership.tolist()):
        if node not in metadata:
            raise ContractError(f"no country metadata for node {node!r}")
        country = metadata[node]
        counts[cid][country] = counts[cid].get(country, 0) + 1

    dominant = []
    entropy = []
    for table in counts:
        best = max(table.values())
        dominant.append(min(c for c, k in table.items() if k == best))
        size = sum(table.values())
        entropy.append(-sum((k / size) * math.log2(k / size)
                            for k in table.values()) + 0.0)
    return CompositionTable([dict(sorted(t.items())) for t in counts], dominant, entropy)


def community_coordinates(partition: Partition, coords):
    """Mean member coordinates per community, for map layouts."""
    sums = np.zeros((partition.n_communities, 2))
    n = np.zeros(partition.n_communities)
    for node, cid in zip(partition.node_ids, partition.membership.tolist()):
        lat, lon = coords[node]
        sums[cid] += (lat, lon)
        n[cid] += 1
    means = sums / n[:, None]
    return {cid: (round(float(lat), 6), round(float(lon), 6))
            for cid, (lat, lon) in enumerate(means)}


def city_points_geojson(partition: Partition, coords, labels=None):
    """Point FeatureCollection of cities with their community index."""
    features = []
    for node, cid in zip(partition.node_ids, partition.membership.tolist()):
        lat, lon = coords[node]
        props = {"cluster": node, "community": cid}
        if labels is not None:
            props["label"] = labels.get(node, "")
        features.append({"type": "Feature",
                         "geometry": {"type": "Point", "coordinates": [lon, lat]},
                         "properties": props})
    return {"type": "FeatureCollection", "features": features}


def community_arcs_geojson(comm_graph: Graph, comm_coords):
    """LineString FeatureCollection of inter-community ties."""
    features = []
    for a, b, w in comm_graph.edge_list():
        lat_a, lon_a = comm_coords[a]
        lat_b, lon_b = comm_coords[b]
        features.append({"type": "Feature",
                         "geometry": {"type": "LineString",
                                      "coordinates": [[lon_a, lat_a], [lon_b, lat_b]]},
                         "properties": {"src_community": a, "dst_community": b,
                                        "weight": w}})
    return {"type": "FeatureCollection", "features": features}
