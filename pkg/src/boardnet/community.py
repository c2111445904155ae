"""Community detection on the weighted city graph.

Modularity maximization with the Louvain two-phase heuristic (Blondel,
Guillaume, Lambiotte & Lefebvre 2008): repeated local moving of nodes
to the neighboring community with the largest positive modularity
gain, followed by aggregation of communities into super-nodes, until
no gain remains.  Runs are fully deterministic for a given seed: node
visit order is a seeded shuffle per pass and gain ties break toward
the lowest community id.

Self-loop handling follows the standard convention: a loop of weight w
adds 2w to its node's degree, w to the total weight and w to the
internal weight of whatever community holds the node.  Excluding
self-loops altogether is a first-class mode because intra-city weight
can otherwise dominate the partition around the largest cities.
"""

from __future__ import annotations

import enum
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, ParameterError
from .graph import Graph, component_labels

__all__ = [
    "SelfLoopMode", "Partition", "Dendrogram", "CrosswalkMatrix",
    "modularity", "louvain", "crosswalk", "stability_check",
    "normalized_mutual_information", "community_weights", "StabilityReport",
]

# A local-moving pass below this total modularity gain terminates the level.
MIN_PASS_GAIN = 1e-9


class SelfLoopMode(enum.Enum):
    INCLUDED = "included"
    EXCLUDED = "excluded"


def canonical_membership(member):
    """Renumber (hashable) community labels contiguously by first appearance."""
    values = member.tolist() if isinstance(member, np.ndarray) else list(member)
    out = np.empty(len(values), dtype=np.int64)
    mapping: dict = {}
    for i, value in enumerate(values):
        out[i] = mapping.setdefault(value, len(mapping))
    return out


@dataclass
class Partition:
    """A community assignment over a fixed node set, with its quality."""

    node_ids: tuple
    membership: np.ndarray  # contiguous community ids from 0
    modularity: float
    resolution: float = 1.0
    self_loop_mode: SelfLoopMode = SelfLoopMode.INCLUDED

    @property
    def n_communities(self):
        return int(self.membership.max()) + 1 if len(self.membership) else 0

    def as_dict(self):
        return dict(zip(self.node_ids, self.membership.tolist()))

    def community_of(self, node):
        return int(self.membership[self.node_ids.index(node)])

    def communities(self):
        """Member node lists per community id."""
        groups = [[] for _ in range(self.n_communities)]
        for node, cid in zip(self.node_ids, self.membership.tolist()):
            groups[cid].append(node)
        return groups

    def sizes(self):
        return np.bincount(self.membership, minlength=self.n_communities)

    def restrict(self, nodes):
        """Partition induced on a node subset (labels squeezed contiguous)."""
        keep = set(nodes)
        idx = [i for i, node in enumerate(self.node_ids) if node in keep]
        return Partition(tuple(self.node_ids[i] for i in idx),
                         canonical_membership(self.membership[idx]),
                         float("nan"), self.resolution, self.self_loop_mode)

    @classmethod
    def from_mapping(cls, graph, mapping, resolution=1.0,
                     self_loop_mode=SelfLoopMode.INCLUDED):
        """Build a partition over a graph's nodes and score it."""
        g = graph.strip_loops(True) if self_loop_mode is SelfLoopMode.EXCLUDED else graph
        try:
            member = canonical_membership([mapping[node] for node in g.nodes])
        except KeyError as exc:
            raise ContractError(f"partition does not cover node {exc.args[0]!r}") from None
        q = _modularity_arrays(g, member, resolution)
        return cls(tuple(g.nodes), member, q, resolution, self_loop_mode)


def community_weights(graph, member):
    """Per-community internal weight and degree, plus the total weight m.

    Internal weight counts each intra-community edge once and each
    member self-loop once; degree counts self-loops twice.
    """
    member = np.asarray(member, dtype=np.int64)
    k = int(member.max()) + 1 if len(member) else 0
    intra = np.zeros(k)
    same = member[graph.src] == member[graph.dst]
    np.add.at(intra, member[graph.src[same]], graph.weight[same])
    np.add.at(intra, member, graph.loops.astype(np.float64))
    degree = np.zeros(k)
    np.add.at(degree, member, graph.weighted_degrees(include_loops=True))
    return intra, degree, float(graph.total_weight())


def _modularity_arrays(graph, member, resolution):
    intra, degree, m = community_weights(graph, member)
    if m == 0:
        return 0.0
    return float((intra / m - resolution * (degree / (2.0 * m)) ** 2).sum())


def modularity(graph, partition, resolution=None):
    """Modularity of a partition over the graph.

    ``partition`` may be a Partition (its self-loop mode decides whether
    the graph is stripped first and its resolution is the default) or a
    plain node -> community mapping evaluated on the graph as given.
    Every graph node must be covered.
    """
    if isinstance(partition, Partition):
        g = (graph.strip_loops(True)
             if partition.self_loop_mode is SelfLoopMode.EXCLUDED else graph)
        mapping = partition.as_dict()
        if resolution is None:
            resolution = partition.resolution
    else:
        g = graph
        mapping = partition
        if resolution is None:
            resolution = 1.0
    if resolution <= 0:
        raise ParameterError(f"resolution must be positive, got {resolution}")
    try:
        member = canonical_membership([mapping[node] for node in g.nodes])
    except KeyError as exc:
        raise ContractError(f"partition does not cover node {exc.args[0]!r}") from None
    return _modularity_arrays(g, member, resolution)


@dataclass
class Dendrogram:
    """Louvain level hierarchy over one node set, finest level first."""

    levels: list[Partition]
    maps: list[np.ndarray] = field(default_factory=list)  # maps[k]: level-k community -> level-k+1 community
    pass_modularities: list[float] | None = None

    @property
    def final(self) -> Partition:
        return self.levels[-1]


def _one_level(work: Graph, resolution, rng, pass_modularities=None):
    """One local-moving phase; returns (total gain, membership array)."""
    n = work.n_nodes
    indptr_arr, nbr_arr, wts_arr = work.adjacency()
    indptr = indptr_arr.tolist()
    nbr = nbr_arr.tolist()
    wts = wts_arr.astype(np.float64).tolist()
    k = work.weighted_degrees(include_loops=True).tolist()
    m = float(work.total_weight())

    node_comm = list(range(n))
    comm_tot = k.copy()
    comm_size = [1] * n
    free_ids: list[int] = []
    inv_m = 1.0 / m
    coef = resolution / (2.0 * m * m)

    total_gain = 0.0
    while True:
        pass_gain = 0.0
        for v in rng.permutation(n).tolist():
            old = node_comm[v]
            links: dict[int, float] = {}
            for p in range(indptr[v], indptr[v + 1]):
                c = node_comm[nbr[p]]
                links[c] = links.get(c, 0.0) + wts[p]
            kv = k[v]
            comm_tot[old] -= kv
            comm_size[old] -= 1
            base = links.get(old, 0.0) * inv_m - comm_tot[old] * kv * coef
            best_c, best_gain = old, base
            for c in sorted(links):  # ascending: lowest id wins exact ties
                if c == old:
                    continue
                gain = links[c] * inv_m - comm_tot[c] * kv * coef
                if gain > best_gain:
                    best_gain, best_c = gain, c
            # the canonical candidate set also holds the empty community
            # (gain 0); taken only on strict improvement
            go_solo = 0.0 > best_gain and comm_size[old] > 0
            if go_solo:
                best_gain = 0.0
                best_c = free_ids.pop()
            if best_c != old and best_gain > base:
                pass_gain += best_gain - base
            else:
                if go_solo:
                    free_ids.append(best_c)
                best_c = old
            if comm_size[old] == 0 and best_c != old:
                free_ids.append(old)
            node_comm[v] = best_c
            comm_tot[best_c] += kv
            comm_size[best_c] += 1
        total_gain += pass_gain
        if pass_modularities is not None:
            pass_modularities.append(
                _modularity_arrays(work, canonical_membership(node_comm), resolution))
        if pass_gain < MIN_PASS_GAIN:
            break
    return total_gain, np.asarray(node_comm, dtype=np.int64)


def louvain(graph, resolution: float = 1.0, seed: int = 0,
            self_loop_mode: SelfLoopMode = SelfLoopMode.INCLUDED,
            track_passes: bool = False, restarts: int = 1) -> Dendrogram:
    """Louvain modularity maximization; returns the full level hierarchy.

    The returned dendrogram has the finest partition first and the
    final (highest-modularity) partition last; recorded modularities
    are non-decreasing across levels.  ``track_passes`` additionally
    records the working modularity after every local-moving pass,
    which is useful for asserting monotonicity.

    ``restarts`` runs the whole two-phase iteration that many times
    with independent substreams of ``seed`` and keeps the hierarchy
    whose final modularity is highest (first wins ties).  Greedy local
    moving can lock into a poor basin on small graphs whatever the
    visit order, so randomized restarts are the standard way to use
    the method as a maximizer; a single run stays fully deterministic
    per seed either way.
    """
    if restarts < 1:
        raise ParameterError(f"restarts must be >= 1, got {restarts}")
    if restarts > 1:
        best = None
        for child_seed in np.random.default_rng(seed).integers(0, 2**63 - 1,
                                                               size=restarts):
            run = louvain(graph, resolution=resolution, seed=int(child_seed),
                          self_loop_mode=self_loop_mode, track_passes=track_passes)
            if best is None or run.final.modularity > best.final.modularity + 1e-15:
                best = run
        return best

    if resolution <= 0:
        raise ParameterError(f"resolution must be positive, got {resolution}")
    g = graph.strip_loops(True) if self_loop_mode is SelfLoopMode.EXCLUDED else graph
    if g.n_nodes == 0:
        raise ContractError("cannot run community detection on an empty graph")
    if component_labels(g).max(initial=0) > 0:
        warnings.warn("graph is not connected; communities form per component",
                      stacklevel=2)

    rng = np.random.default_rng(seed)
    node_ids = tuple(g.nodes)
    pass_q = [] if track_passes else None

    levels: list[Partition] = []
    maps: list[np.ndarray] = []
    composed = np.arange(g.n_nodes, dtype=np.int64)
    work = g

    while float(work.total_weight()) > 0:
        gain, raw = _one_level(work, resolution, rng, pass_q)
        if gain < MIN_PASS_GAIN:
            break
        local = canonical_membership(raw)
        composed = local[composed]
        q = _modularity_arrays(g, composed, resolution)
        part = Partition(node_ids, composed.copy(), q, resolution, self_loop_mode)
        if levels:
            maps.append(local)
        levels.append(part)
        n_comms = int(local.max()) + 1
        if n_comms == work.n_nodes:
            break
        work = work.aggregate(local, list(range(n_comms)))

    if not levels:
        singleton = np.arange(g.n_nodes, dtype=np.int64)
        q = _modularity_arrays(g, singleton, resolution)
        levels = [Partition(node_ids, singleton, q, resolution, self_loop_mode)]
    return Dendrogram(levels, maps, pass_q)


@dataclass
class CrosswalkMatrix:
    """Shared-node contingency counts between two partitions."""

    counts: np.ndarray  # (communities of a) x (communities of b)
    refinement: bool  # every community of a falls inside one community of b

    def row_sums(self):
        return self.counts.sum(axis=1)

    def total(self):
        return int(self.counts.sum())

    def as_dict(self):
        return {"counts": self.counts.tolist(), "refinement": self.refinement}


def crosswalk(a: Partition, b: Partition) -> CrosswalkMatrix:
    """Contingency matrix of two partitions over the same node set."""
    if set(a.node_ids) != set(b.node_ids):
        raise ContractError("crosswalk requires identical node sets")
    b_of = b.as_dict()
    counts = np.zeros((a.n_communities, b.n_communities), dtype=np.int64)
    for node, ca in zip(a.node_ids, a.membership.tolist()):
        counts[ca, b_of[node]] += 1
    refinement = bool(((counts > 0).sum(axis=1) == 1).all())
    return CrosswalkMatrix(counts, refinement)


def normalized_mutual_information(labels_a, labels_b) -> float:
    """NMI of two labelings, arithmetic-mean normalization, in [0, 1].

    Two trivial (single-cluster) labelings count as identical (1.0);
    zero mutual information yields 0.0.
    """
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape:
        raise ContractError("labelings must have equal length")
    n = len(a)
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    counts = np.zeros((ia.max() + 1, ib.max() + 1))
    np.add.at(counts, (ia, ib), 1.0)
    pij = counts / n
    pi = pij.sum(axis=1)
    pj = pij.sum(axis=0)
    nz = pij > 0
    mi = float((pij[nz] * np.log(pij[nz] / np.outer(pi, pj)[nz])).sum())
    ha = float(-(pi[pi > 0] * np.log(pi[pi > 0])).sum())
    hb = float(-(pj[pj > 0] * np.log(pj[pj > 0])).sum())
    if ha == 0.0 and hb == 0.0:
        return 1.0
    if mi <= 0.0:
        return 0.0
    return min(1.0, mi / ((ha + hb) / 2.0))


@dataclass
class StabilityReport:
    seeds: list[int]
    modularities: list[float]
    nmi_matrix: np.ndarray
    partitions: list[Partition]

    @property
    def modularity_min(self):
        return min(self.modularities)

    @property
    def modularity_max(self):
        return max(self.modularities)

    @property
    def modularity_mean(self):
        return sum(self.modularities) / len(self.modularities)

    def mean_pairwise_nmi(self):
        k = len(self.seeds)
        off = self.nmi_matrix[~np.eye(k, dtype=bool)]
        return float(off.mean()) if off.size else 1.0

    def as_dict(self):
        return {"seeds": self.seeds,
                "modularity": {"min": self.modularity_min, "max": self.modularity_max,
                               "mean": self.modularity_mean, "values": self.modularities},
                "nmi_matrix": self.nmi_matrix.tolist(),
                "mean_pairwise_nmi": self.mean_pairwise_nmi()}


def _louvain_top(args):
    graph, resolution, seed, mode = args
    return louvain(graph, resolution=resolution, seed=seed, self_loop_mode=mode).final


def stability_check(graph, resolution: float = 1.0, seeds=(0, 1),
                    self_loop_mode: SelfLoopMode = SelfLoopMode.INCLUDED,
                    threads: int = 1) -> StabilityReport:
    """Louvain per seed plus pairwise NMI of the top partitions.

    Independent runs may execute in worker processes (``threads``);
    results are collected in seed order so the report is deterministic
    either way.
    """
    seeds = list(seeds)
    if len(seeds) < 2:
        raise ParameterError("stability check needs at least 2 seeds")
    jobs = [(graph, resolution, seed, self_loop_mode) for seed in seeds]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            tops = list(pool.map(_louvain_top, jobs))
    else:
        tops = [_louvain_top(job) for job in jobs]

    k = len(seeds)
    nmi = np.ones((k, k))
    order = tops[0].node_ids
    aligned = [np.array([p.as_dict()[node] for node in order]) for p in tops]
    for i in range(k):
        for j in range(i + 1, k):
            nmi[i, j] = nmi[j, i] = normalized_mutual_information(aligned[i], aligned[j])
    return StabilityReport(seeds, [p.modularity for p in tops], nmi, tops)
