"""Aggregation of the firm interlock graph to the citycluster level.

City-to-city edge weight sums the firm edges crossing the pair; edges
between firms of one citycluster accumulate into that node's self-loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geo import ClusterAssignment
from .graph import Graph

__all__ = ["aggregate_to_cities", "strip_self_loops", "AggregationReport"]


@dataclass
class AggregationReport:
    firms_total: int = 0
    firms_excluded: int = 0
    edges_dropped: int = 0
    weight_dropped: int = 0

    def as_dict(self):
        return dict(self.__dict__)


def aggregate_to_cities(firm_graph: Graph, assignment: ClusterAssignment):
    """Collapse a firm graph onto cityclusters.

    Firms missing from the assignment (no usable coordinates) are
    excluded; every edge touching one is dropped and accounted for in
    the report.  Cityclusters end up in the output iff they retain at
    least one incident interlock, including purely intra-city weight.

    Returns (city graph, AggregationReport).
    """
    cluster_ids = sorted(set(assignment.mapping.values()))
    cluster_pos = {cid: i for i, cid in enumerate(cluster_ids)}

    member = np.full(firm_graph.n_nodes, -1, dtype=np.int64)
    excluded = 0
    for i, firm_id in enumerate(firm_graph.nodes):
        cid = assignment.mapping.get(firm_id)
        if cid is None:
            excluded += 1
        else:
            member[i] = cluster_pos[cid]

    dropped_mask = (member[firm_graph.src] < 0) | (member[firm_graph.dst] < 0)
    report = AggregationReport(
        firms_total=firm_graph.n_nodes,
        firms_excluded=excluded,
        edges_dropped=int(dropped_mask.sum()),
        weight_dropped=int(firm_graph.weight[dropped_mask].sum()) if firm_graph.n_edges else 0,
    )

    city = firm_graph.aggregate(member, cluster_ids)
    touched = np.zeros(city.n_nodes, dtype=bool)
    touched[city.src] = True
    touched[city.dst] = True
    touched |= city.loops > 0
    if not touched.all():
        city = city.subgraph([city.nodes[i] for i in np.nonzero(touched)[0]])
    return city, report


def strip_self_loops(graph: Graph, drop_isolated: bool = True) -> Graph:
    """Remove self-loops, leaving edge weights untouched.

    Nodes carrying only self-loop weight are dropped by default; with
    no incident edge they are invisible to every downstream algorithm.
    """
    return graph.strip_loops(drop_isolated=drop_isolated)
