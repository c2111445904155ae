"""One-mode projection of the firm-person position table.

A person holding senior positions at k firms contributes all C(k, 2)
firm pairs; edge weight counts distinct persons shared by the two
firms.  Ties explained by majority ownership are removed afterwards,
and the analysis proceeds on the giant connected component.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ParameterError
from .graph import Graph, bfs_distances, component_labels
from .ingest import PositionTable

__all__ = [
    "project_interlocks", "remove_ownership_ties",
    "connected_components", "giant_component", "ComponentStats",
]


def project_interlocks(positions: PositionTable, keep_isolated: bool = False) -> Graph:
    """Project the two-mode position table onto a firm-by-firm graph.

    Edge (A, B) exists iff at least one person holds positions at both
    firms; the weight is the number of such distinct persons.  Firms
    with no interlock are dropped unless ``keep_isolated`` is set, as
    they cannot affect any downstream statistic.
    """
    if not positions.records:
        raise ContractError("cannot project an empty position table")

    firm_ids = sorted({rec.firm_id for rec in positions.records})
    firm_index = {f: i for i, f in enumerate(firm_ids)}
    n_firms = len(firm_ids)

    person_index: dict[str, int] = {}
    n_rec = len(positions.records)
    person_arr = np.empty(n_rec, dtype=np.int64)
    firm_arr = np.empty(n_rec, dtype=np.int64)
    for k, rec in enumerate(positions.records):
        pid = person_index.setdefault(rec.person_id, len(person_index))
        person_arr[k] = pid
        firm_arr[k] = firm_index[rec.firm_id]

    # Distinct (person, firm) pairs: several roles at one firm are one seat.
    seat_keys = np.unique(person_arr * n_firms + firm_arr)
    person_of = seat_keys // n_firms
    firm_of = seat_keys % n_firms

    group_starts = np.nonzero(np.diff(person_of, prepend=-1))[0]
    group_counts = np.diff(np.append(group_starts, len(person_of)))

    pair_lo, pair_hi = [], []
    for k in np.unique(group_counts):
        if k < 2:
            continue
        starts_k = group_starts[group_counts == k]
        block = firm_of[starts_k[:, None] + np.arange(k)]  # sorted within each row
        iu, ju = np.triu_indices(int(k), 1)
        pair_lo.append(block[:, iu].ravel())
        pair_hi.append(block[:, ju].ravel())

    if not pair_lo:
        nodes = firm_ids if keep_isolated else []
        empty = np.empty(0, dtype=np.int64)
        return Graph(nodes, empty, empty, empty)

    lo = np.concatenate(pair_lo)
    hi = np.concatenate(pair_hi)
    keys, weight = np.unique(lo * n_firms + hi, return_counts=True)
    lo, hi = keys // n_firms, keys % n_firms

    if keep_isolated:
        return Graph.from_pair_counts(firm_ids, lo, hi, weight.astype(np.int64))

    used = np.unique(np.concatenate([lo, hi]))
    remap = np.full(n_firms, -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    nodes = [firm_ids[i] for i in used.tolist()]
    return Graph.from_pair_counts(nodes, remap[lo], remap[hi], weight.astype(np.int64))


@dataclass
class OwnershipFilterReport:
    links: int = 0
    applied: int = 0
    unknown_firms: int = 0
    edges_removed: int = 0
    weight_removed: int = 0

    def as_dict(self):
        return dict(self.__dict__)


def remove_ownership_ties(graph: Graph, ownership, threshold: float = 0.5):
    """Delete edges whose endpoints are linked by ownership above threshold.

    The whole edge goes, in either link direction, when the registered
    fraction is strictly greater than ``threshold``.  Only direct links
    are tested; ownership chains are not expanded.  Links naming firms
    outside the graph are ignored and counted.

    Returns (filtered graph, OwnershipFilterReport).  The node set is
    unchanged; a node that loses all edges stays as a size-1 component.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ParameterError(f"ownership threshold must be in [0, 1], got {threshold}")
    report = OwnershipFilterReport(links=len(ownership))
    n = graph.n_nodes
    drop_keys = set()
    for link in ownership:
        if link.fraction <= threshold:
            continue
        if not (graph.has_node(link.parent_firm_id) and graph.has_node(link.child_firm_id)):
            report.unknown_firms += 1
            continue
        a = graph.index_of(link.parent_firm_id)
        b = graph.index_of(link.child_firm_id)
        if a != b:
            drop_keys.add(min(a, b) * n + max(a, b))
            report.applied += 1
    if not drop_keys:
        return Graph(graph.nodes, graph.src, graph.dst, graph.weight, graph.loops), report

    keys = graph.src * n + graph.dst
    keep = ~np.isin(keys, np.fromiter(drop_keys, dtype=np.int64, count=len(drop_keys)))
    report.edges_removed = int((~keep).sum())
    report.weight_removed = int(graph.weight[~keep].sum())
    return Graph(graph.nodes, graph.src[keep], graph.dst[keep],
                 graph.weight[keep], graph.loops), report


@dataclass
class ComponentStats:
    component_count: int
    sizes: np.ndarray  # indexed by component label
    giant_size: int
    small_component_fraction: float  # among non-giant components, share of size < 20

    def as_dict(self):
        return {"component_count": self.component_count,
                "sizes": self.sizes.tolist(),
                "giant_size": self.giant_size,
                "small_component_fraction": self.small_component_fraction}


def connected_components(graph: Graph):
    """Component statistics and a per-node component labeling.

    Returns (ComponentStats, labels).  Labels are contiguous ints in
    first-appearance order over the node list.
    """
    labels = component_labels(graph)
    sizes = np.bincount(labels) if len(labels) else np.zeros(0, dtype=np.int64)
    count = len(sizes)
    giant = int(sizes.max()) if count else 0
    if count > 1:
        giant_label = int(np.argmax(sizes))
        others = np.delete(sizes, giant_label)
        small_fraction = float((others < 20).sum() / len(others))
    else:
        small_fraction = 0.0
    return ComponentStats(count, sizes, giant, small_fraction), labels


def giant_component(graph: Graph) -> Graph:
    """Induced subgraph on the largest component.

    Size ties go to the component containing the smallest node id,
    which is the lowest component label under first-appearance
    numbering.
    """
    if graph.n_nodes == 0:
        raise ContractError("giant_component of an empty graph")
    _, labels = connected_components(graph)
    sizes = np.bincount(labels)
    giant_label = int(np.argmax(sizes))  # first max = smallest min node id
    members = [graph.nodes[i] for i in np.nonzero(labels == giant_label)[0]]
    return graph.subgraph(members)


def reachable_from(graph: Graph, label):
    """BFS closure of one node; oracle-friendly helper."""
    dist = bfs_distances(graph, graph.index_of(label))
    return {graph.nodes[i] for i in np.nonzero(dist >= 0)[0]}
