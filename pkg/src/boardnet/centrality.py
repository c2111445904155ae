"""Centrality and distance measures on the city graph.

All path-based measures use unweighted hop distances: the interlock
counts on edges measure tie strength, not length, and the published
distance and eccentricity figures for such networks are integral.
Self-loops never contribute to degrees or paths.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ParameterError
from .graph import Graph, bfs_distances, component_labels

__all__ = [
    "degree_centrality", "betweenness", "eccentricity_exact", "distance_stats",
    "degree_distribution", "center_subgraph", "centrality_report",
    "EccentricityResult", "DistanceStats", "DegreeDistribution", "CentralityReport",
]


def degree_centrality(graph: Graph):
    """(degree, weighted degree) arrays in node order, self-loops excluded.

    Degree counts distinct neighbor cities; weighted degree sums the
    incident interlock weights.
    """
    return graph.degrees(), graph.weighted_degrees(include_loops=False)


def betweenness(graph: Graph) -> np.ndarray:
    """Exact betweenness centrality via Brandes' accumulation (2001).

    Hop metric, endpoints excluded, each unordered pair counted once,
    no normalization.  O(nm); fine for city-level graphs.
    """
    n = graph.n_nodes
    indptr_arr, nbr_arr, _ = graph.adjacency()
    indptr = indptr_arr.tolist()
    nbr = nbr_arr.tolist()
    bc = np.zeros(n)

    for s in range(n):
        dist = [-1] * n
        sigma = [0] * n
        preds: list[list[int]] = [[] for _ in range(n)]
        dist[s] = 0
        sigma[s] = 1
        order: list[int] = []
        queue = deque([s])
        while queue:
            v = queue.popleft()
            order.append(v)
            dv = dist[v]
            sv = sigma[v]
            for p in range(indptr[v], indptr[v + 1]):
                w = nbr[p]
                if dist[w] < 0:
                    dist[w] = dv + 1
                    queue.append(w)
                if dist[w] == dv + 1:
                    sigma[w] += sv
                    preds[w].append(v)
        delta = [0.0] * n
        for w in reversed(order):
            coeff = (1.0 + delta[w]) / sigma[w]
            for v in preds[w]:
                delta[v] += sigma[v] * coeff
            if w != s:
                bc[w] += delta[w]
    return bc / 2.0  # each unordered pair was accumulated from both ends


@dataclass
class EccentricityResult:
    nodes: tuple
    eccentricity: np.ndarray  # hops, node order
    radius: int
    diameter: int
    center: list
    periphery: list
    bfs_count: int

    def histogram(self):
        values, counts = np.unique(self.eccentricity, return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}

    def as_dict(self):
        return {"radius": self.radius, "diameter": self.diameter,
                "center_size": len(self.center), "periphery_size": len(self.periphery),
                "bfs_count": self.bfs_count, "histogram": self.histogram()}


def _twin_groups(members, indptr, nbr):
    """Classes of nodes with identical open neighborhoods (non-adjacent twins).

    Such nodes are at distance 2 through any shared neighbor, so their
    eccentricities coincide whenever they are >= 2, which holds as soon
    as the class has a shared neighbor outside itself.
    """
    groups: dict = {}
    for local, node in enumerate(members.tolist()):
        sig = nbr[indptr[node]:indptr[node + 1]].tobytes()
        groups.setdefault(sig, []).append(local)
    twin_of = {}
    for cls in groups.values():
        if len(cls) > 1:
            for local in cls:
                twin_of[local] = cls
    return twin_of


def _ecc_component(graph, members, indptr, nbr, strategy):
    """Exact eccentricities for one component via bounds pruning.

    The scheme of Takes & Kosters (2013): BFS from a chosen node fixes
    its eccentricity exactly and tightens every other node's bounds
    (lower from the triangle inequality, upper from ecc + distance);
    nodes whose bounds meet need no BFS of their own.  Candidate
    selection alternates between the largest upper bound (settles the
    diameter side) and the smallest lower bound (settles the radius
    side), starting from the highest-degree node.  Open-neighborhood
    twins resolve together, which prunes heavily in hub-dominated
    graphs where many low-degree nodes hang off the same hubs.
    """
    n_local = len(members)
    ecc = np.zeros(n_local, dtype=np.int64)
    lower = np.full(n_local, -1, dtype=np.int64)
    upper = np.full(n_local, np.iinfo(np.int64).max, dtype=np.int64)
    unresolved = np.ones(n_local, dtype=bool)
    degrees = np.diff(indptr)[members]
    twin_of = _twin_groups(members, indptr, nbr)

    def resolve(local, value):
        ecc[local] = value
        unresolved[local] = False
        if value >= 2:
            for other in twin_of.get(local, ()):
                if unresolved[other]:
                    ecc[other] = value
                    unresolved[other] = False

    bfs_count = 0
    pick_upper = True
    while unresolved.any():
        cand = np.nonzero(unresolved)[0]
        if bfs_count == 0:
            sel = cand[np.argmax(degrees[cand])]
        elif strategy == "max_upper" or (strategy == "alternate" and pick_upper):
            # peripheral side: highest upper bound, small degree on ties
            sel = cand[np.lexsort((degrees[cand], -upper[cand]))[0]]
        elif strategy == "min_lower" or strategy == "alternate":
            # central side: lowest lower bound, high degree on ties
            sel = cand[np.lexsort((-degrees[cand], lower[cand]))[0]]
        else:
            raise ParameterError(f"unknown selection strategy {strategy!r}")
        pick_upper = not pick_upper

        dist_all = bfs_distances(None, members[sel], indptr=indptr, nbr=nbr)
        d = dist_all[members]
        e = int(d.max())
        bfs_count += 1
        resolve(sel, e)

        np.maximum(lower, np.maximum(e - d, d), out=lower)
        np.minimum(upper, e + d, out=upper)
        for local in np.nonzero(unresolved & (lower == upper))[0]:
            if unresolved[local]:
                resolve(local, int(lower[local]))
    return ecc, bfs_count


def eccentricity_exact(graph: Graph, strategy: str = "alternate",
                       per_component: bool = False) -> EccentricityResult:
    """Exact eccentricity of every node, usually with far fewer than n BFS.

    Results are identical to all-pairs BFS.  A disconnected graph is a
    contract violation unless ``per_component`` is set, in which case
    eccentricities are within-component and radius/diameter are the
    global min/max.
    """
    if graph.n_nodes == 0:
        raise ContractError("eccentricity of an empty graph")
    if strategy not in ("alternate", "max_upper", "min_lower"):
        raise ParameterError(f"unknown selection strategy {strategy!r}")
    labels = component_labels(graph)
    if labels.max() > 0 and not per_component:
        raise ContractError("graph is disconnected; pass per_component=True")
    indptr, nbr, _ = graph.adjacency()

    ecc = np.zeros(graph.n_nodes, dtype=np.int64)
    total_bfs = 0
    for comp in range(int(labels.max()) + 1):
        members = np.nonzero(labels == comp)[0]
        comp_ecc, bfs_count = _ecc_component(graph, members, indptr, nbr, strategy)
        ecc[members] = comp_ecc
        total_bfs += bfs_count

    radius = int(ecc.min())
    diameter = int(ecc.max())
    center = [graph.nodes[i] for i in np.nonzero(ecc == radius)[0]]
    periphery = [graph.nodes[i] for i in np.nonzero(ecc == diameter)[0]]
    return EccentricityResult(tuple(graph.nodes), ecc, radius, diameter,
                              center, periphery, total_bfs)


@dataclass
class DistanceStats:
    average: float
    histogram: dict[int, int]  # hop -> pair count when exact
    exact: bool
    sample_size: int | None = None

    def as_dict(self):
        return {"average": self.average, "exact": self.exact,
                "sample_size": self.sample_size,
                "histogram": {str(k): v for k, v in sorted(self.histogram.items())}}


def distance_stats(graph: Graph, sample_size: int | None = None,
                   seed: int = 0) -> DistanceStats:
    """Average hop distance and distance histogram.

    Exact mode (default) runs BFS from every node; the histogram counts
    unordered pairs and sums to n(n-1)/2.  Sampled mode runs BFS from
    ``sample_size`` seeded-uniform sources and averages the per-source
    mean distances; its histogram counts source-to-target pairs for the
    sampled sources only.  At sample_size = n the sampled average
    equals the exact one.
    """
    n = graph.n_nodes
    if n < 2:
        raise ContractError("distance statistics need at least 2 nodes")
    if component_labels(graph).max() > 0:
        raise ContractError("distance statistics require a connected graph")
    indptr, nbr, _ = graph.adjacency()

    if sample_size is None or sample_size >= n:
        sources = np.arange(n)
        exact = sample_size is None
    else:
        if sample_size < 1:
            raise ParameterError("sample_size must be >= 1")
        sources = np.sort(np.random.default_rng(seed).choice(n, size=sample_size,
                                                             replace=False))
        exact = False

    max_hist = 0
    hist = np.zeros(1, dtype=np.int64)
    mean_sum = 0.0
    for s in sources.tolist():
        d = bfs_distances(None, s, indptr=indptr, nbr=nbr)
        counts = np.bincount(d[d > 0])
        if len(counts) > max_hist:
            hist = np.concatenate([hist, np.zeros(len(counts) - max_hist, dtype=np.int64)])
            max_hist = len(counts)
        hist[:len(counts)] += counts
        mean_sum += d[d > 0].sum() / (n - 1)

    average = mean_sum / len(sources)
    if sample_size is None:
        pair_hist = {h: int(c) // 2 for h, c in enumerate(hist) if c}
    else:
        pair_hist = {h: int(c) for h, c in enumerate(hist) if c}
    return DistanceStats(float(average), pair_hist, exact,
                         None if sample_size is None else len(sources))


@dataclass
class DegreeDistribution:
    counts: dict[int, int]  # degree -> node count
    log_bins: list[tuple[int, int, int]]  # [lo, hi) powers of two, node count

    def as_dict(self):
        return {"counts": {str(k): v for k, v in sorted(self.counts.items())},
                "log_bins": [list(b) for b in self.log_bins]}


def degree_distribution(graph: Graph) -> DegreeDistribution:
    """Exact degree frequencies plus base-2 log-binned counts for plotting.

    Zero-degree nodes appear in the exact counts but not in the log
    bins.
    """
    deg = graph.degrees()
    values, freq = np.unique(deg, return_counts=True)
    counts = {int(v): int(c) for v, c in zip(values, freq)}
    log_bins = []
    if len(deg):
        top = int(deg.max())
        lo = 1
        while lo <= max(top, 1):
            hi = lo * 2
            in_bin = int(((deg >= lo) & (deg < hi)).sum())
            if in_bin:
                log_bins.append((lo, hi, in_bin))
            lo = hi
    return DegreeDistribution(counts, log_bins)


def center_subgraph(graph: Graph, ecc: EccentricityResult,
                    min_edge_weight: int = 20) -> Graph:
    """Induced subgraph on the center, keeping edges heavier than the floor."""
    if tuple(graph.nodes) != ecc.nodes:
        raise ContractError("eccentricity result belongs to a different graph")
    sub = graph.subgraph(ecc.center)
    keep = sub.weight > min_edge_weight
    return Graph(sub.nodes, sub.src[keep], sub.dst[keep], sub.weight[keep], sub.loops)


@dataclass
class CentralityReport:
    nodes: tuple
    degree: np.ndarray
    weighted_degree: np.ndarray
    betweenness: np.ndarray
    rankings: dict[str, list]  # measure -> node labels, best first, ties by node id

    def top(self, measure, k=25):
        return self.rankings[measure][:k]


def _ranked(nodes, scores):
    order = sorted(range(len(nodes)), key=lambda i: (-scores[i], nodes[i]))
    return [nodes[i] for i in order]


def centrality_report(graph: Graph) -> CentralityReport:
    """Degree, weighted degree and betweenness with stable rankings."""
    deg, wdeg = degree_centrality(graph)
    btw = betweenness(graph)
    nodes = tuple(graph.nodes)
    rankings = {"degree": _ranked(nodes, deg.tolist()),
                "weighted_degree": _ranked(nodes, wdeg.tolist()),
                "betweenness": _ranked(nodes, btw.tolist())}
    return CentralityReport(nodes, deg, wdeg, btw, rankings)
