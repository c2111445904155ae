"""Weighted undirected graph backed by flat numpy edge arrays.

The same structure serves both regimes of the pipeline: firm-level
interlock graphs (up to millions of edges, string node ids, no
self-loops) and city-level graphs (thousands of nodes, integer cluster
ids, self-loops carrying intra-city weight).  Edges are stored once
with ``src index < dst index``; self-loops live in a separate per-node
array so that degree-style quantities can include or exclude them
explicitly.
"""

from __future__ import annotations

import csv

import numpy as np

__all__ = ["Graph", "bfs_distances", "component_labels"]


def _ranges(counts):
    """Concatenated [0..c) ranges for an array of counts."""
    total = int(counts.sum())
    out = np.arange(total, dtype=np.int64)
    shifts = np.repeat(np.cumsum(counts) - counts, counts)
    return out - shifts


class Graph:
    """Immutable weighted undirected graph.

    Parameters
    ----------
    nodes : sequence
        Node labels in canonical order.  Labels must be hashable and
        mutually sortable (strings or ints in practice).
    src, dst : int arrays
        Edge endpoints as indices into ``nodes``, with ``src < dst``.
    weight : array
        Positive edge weights, int64 for count-valued graphs.
    loops : array or None
        Per-node self-loop weight; zeros when omitted.
    """

    def __init__(self, nodes, src, dst, weight, loops=None):
        self.nodes = list(nodes)
        n = len(self.nodes)
        self.src = np.asarray(src, dtype=np.int64)
        self.dst = np.asarray(dst, dtype=np.int64)
        self.weight = np.asarray(weight)
        if loops is None:
            loops = np.zeros(n, dtype=self.weight.dtype if self.weight.size else np.int64)
        self.loops = np.asarray(loops)
        self._index = {label: i for i, label in enumerate(self.nodes)}
        self._adj = None

    # -- construction ------------------------------------------------

    @classmethod
    def from_edges(cls, edges, loops=None, nodes=None):
        """Build a graph from an iterable of (u, v, w) triples.

        Parallel entries are summed, (u, u) entries go to the self-loop
        array.  Node order defaults to sorted labels, which keeps every
        downstream artifact deterministic.
        """
        us, vs, ws = [], [], []
        for u, v, w in edges:
            us.append(u)
            vs.append(v)
            ws.append(w)
        loop_items = dict(loops) if loops else {}
        if nodes is None:
            seen = set(us) | set(vs) | set(loop_items)
            node_list = sorted(seen)
        else:
            node_list = list(nodes)
        index = {label: i for i, label in enumerate(node_list)}
        n = len(node_list)

        w_arr = np.asarray(ws, dtype=np.float64)
        integral = bool(np.all(w_arr == np.floor(w_arr))) if w_arr.size else True
        dtype = np.int64 if integral else np.float64

        loop_w = np.zeros(n, dtype=dtype)
        for label, w in loop_items.items():
            loop_w[index[label]] += w

        if not us:
            return cls(node_list, np.empty(0, np.int64), np.empty(0, np.int64),
                       np.empty(0, dtype), loop_w)

        a = np.fromiter((index[u] for u in us), dtype=np.int64, count=len(us))
        b = np.fromiter((index[v] for v in vs), dtype=np.int64, count=len(vs))
        w_arr = w_arr.astype(dtype)

        self_mask = a == b
        if self_mask.any():
            np.add.at(loop_w, a[self_mask], w_arr[self_mask])
            a, b, w_arr = a[~self_mask], b[~self_mask], w_arr[~self_mask]

        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        keys = lo * n + hi
        uniq, inverse = np.unique(keys, return_inverse=True)
        weight = np.zeros(len(uniq), dtype=np.float64)
        np.add.at(weight, inverse, w_arr)
        return cls(node_list, uniq // n, uniq % n, weight.astype(dtype), loop_w)

    @classmethod
    def from_pair_counts(cls, nodes, lo, hi, weight, loops=None):
        """Trusted constructor for pre-deduplicated index pairs (lo < hi)."""
        order = np.lexsort((hi, lo))
        return cls(nodes, lo[order], hi[order], np.asarray(weight)[order], loops)

    # -- basic queries -----------------------------------------------

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_edges(self):
        return len(self.src)

    def total_edge_weight(self):
        return self.weight.sum() if self.n_edges else self.weight.dtype.type(0)

    def total_loop_weight(self):
        return self.loops.sum()

    def total_weight(self):
        """Sum of edge weights plus self-loop weights (each loop once)."""
        return self.total_edge_weight() + self.total_loop_weight()

    def index_of(self, label):
        return self._index[label]

    def has_node(self, label):
        return label in self._index

    def adjacency(self):
        """Symmetric CSR view (indptr, neighbor indices, weights), loops excluded."""
        if self._adj is None:
            n = self.n_nodes
            heads = np.concatenate([self.src, self.dst])
            tails = np.concatenate([self.dst, self.src])
            wts = np.concatenate([self.weight, self.weight])
            order = np.lexsort((tails, heads))
            heads, tails, wts = heads[order], tails[order], wts[order]
            indptr = np.zeros(n + 1, dtype=np.int64)
            np.add.at(indptr, heads + 1, 1)
            np.cumsum(indptr, out=indptr)
            self._adj = (indptr, tails, wts)
        return self._adj

    def degrees(self):
        """Distinct-neighbor count per node; self-loops never count."""
        indptr, _, _ = self.adjacency()
        return np.diff(indptr)

    def weighted_degrees(self, include_loops=False):
        """Sum of incident edge weights; a self-loop contributes twice its
        weight when included (standard modularity convention)."""
        deg = np.zeros(self.n_nodes, dtype=np.float64)
        np.add.at(deg, self.src, self.weight)
        np.add.at(deg, self.dst, self.weight)
        if include_loops:
            deg += 2.0 * self.loops
        return deg

    def edge_weight(self, u, v):
        """Weight of edge (u, v), 0 if absent; loop weight when u == v."""
        i, j = self._index[u], self._index[v]
        if i == j:
            return self.loops[i]
        indptr, nbr, wts = self.adjacency()
        sl = slice(indptr[i], indptr[i + 1])
        hit = np.nonzero(nbr[sl] == j)[0]
        return wts[sl][hit[0]] if hit.size else self.weight.dtype.type(0)

    def neighbors(self, label):
        """Neighbor labels of a node (self excluded)."""
        indptr, nbr, _ = self.adjacency()
        i = self._index[label]
        return [self.nodes[j] for j in nbr[indptr[i]:indptr[i + 1]]]

    def edge_list(self):
        """Edges as (u_label, v_label, weight) with u before v in node order."""
        w = self.weight.tolist()
        return [(self.nodes[a], self.nodes[b], w[k])
                for k, (a, b) in enumerate(zip(self.src.tolist(), self.dst.tolist()))]

    def loop_items(self):
        """Nonzero self-loops as (label, weight) in node order."""
        idx = np.nonzero(self.loops)[0]
        return [(self.nodes[i], self.loops[i].item()) for i in idx]

    # -- derived graphs ----------------------------------------------

    def subgraph(self, labels):
        """Induced subgraph on the given labels (their loops are kept)."""
        keep = sorted(labels, key=self._index.get)
        keep_idx = np.fromiter((self._index[l] for l in keep), dtype=np.int64,
                               count=len(keep))
        remap = np.full(self.n_nodes, -1, dtype=np.int64)
        remap[keep_idx] = np.arange(len(keep))
        mask = (remap[self.src] >= 0) & (remap[self.dst] >= 0)
        return Graph(keep, remap[self.src[mask]], remap[self.dst[mask]],
                     self.weight[mask], self.loops[keep_idx])

    def strip_loops(self, drop_isolated=True):
        """Copy without self-loops.

        Nodes left with no incident edge are dropped by default: once the
        loop weight is gone they cannot influence any partition or path
        statistic.
        """
        zero = np.zeros(self.n_nodes, dtype=self.loops.dtype)
        if not drop_isolated:
            return Graph(self.nodes, self.src, self.dst, self.weight, zero)
        touched = np.zeros(self.n_nodes, dtype=bool)
        touched[self.src] = True
        touched[self.dst] = True
        if touched.all():
            return Graph(self.nodes, self.src, self.dst, self.weight, zero)
        return self.subgraph([self.nodes[i] for i in np.nonzero(touched)[0]]).strip_loops(False)

    def aggregate(self, member, group_labels):
        """Quotient graph under a node -> group mapping.

        ``member[i]`` is the group index of node i, or -1 to drop the node.
        Edges internal to a group (and member loops) accumulate into the
        group's self-loop; edges with a dropped endpoint vanish.
        """
        member = np.asarray(member, dtype=np.int64)
        k = len(group_labels)
        a = member[self.src]
        b = member[self.dst]
        keep = (a >= 0) & (b >= 0)
        a, b, w = a[keep], b[keep], self.weight[keep]

        loops = np.zeros(k, dtype=self.weight.dtype)
        node_keep = member >= 0
        np.add.at(loops, member[node_keep], self.loops[node_keep])

        internal = a == b
        if internal.any():
            np.add.at(loops, a[internal], w[internal])
            a, b, w = a[~internal], b[~internal], w[~internal]

        if a.size == 0:
            return Graph(group_labels, np.empty(0, np.int64), np.empty(0, np.int64),
                         np.empty(0, self.weight.dtype), loops)
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        keys = lo * k + hi
        uniq, inverse = np.unique(keys, return_inverse=True)
        agg_w = np.zeros(len(uniq), dtype=np.float64)
        np.add.at(agg_w, inverse, w)
        return Graph(group_labels, uniq // k, uniq % k,
                     agg_w.astype(self.weight.dtype), loops)

    # -- persistence -------------------------------------------------

    def write_edge_csv(self, path, header=("src_id", "dst_id", "weight")):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for u, v, w in self.edge_list():
                writer.writerow([u, v, w])

    def write_loop_csv(self, path, header=("cluster", "self_weight")):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for label, w in self.loop_items():
                writer.writerow([label, w])

    @classmethod
    def read_edge_csv(cls, path, loop_path=None, int_labels=False):
        def parse(label):
            return int(label) if int_labels else label

        edges = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            next(reader)
            for row in reader:
                w = float(row[2])
                edges.append((parse(row[0]), parse(row[1]),
                              int(w) if w == int(w) else w))
        loops = {}
        if loop_path is not None:
            with open(loop_path, newline="", encoding="utf-8") as fh:
                reader = csv.reader(fh)
                next(reader)
                for row in reader:
                    w = float(row[1])
                    loops[parse(row[0])] = int(w) if w == int(w) else w
        return cls.from_edges(edges, loops=loops)

    def save_npz(self, path):
        """Compact binary cache for the million-edge regime."""
        with open(path, "wb") as fh:
            np.savez_compressed(fh, nodes=np.asarray(self.nodes), src=self.src,
                                dst=self.dst, weight=self.weight, loops=self.loops)

    @classmethod
    def load_npz(cls, path):
        data = np.load(path, allow_pickle=False)
        nodes = data["nodes"].tolist()
        return cls(nodes, data["src"], data["dst"], data["weight"], data["loops"])


def bfs_distances(graph, source, indptr=None, nbr=None):
    """Hop distances from a source node index; -1 marks unreachable nodes."""
    if indptr is None:
        indptr, nbr, _ = graph.adjacency()
    n = len(indptr) - 1
    dist = np.full(n, -1, dtype=np.int32)
    dist[source] = 0
    frontier = np.array([source], dtype=np.int64)
    level = 0
    while frontier.size:
        starts = indptr[frontier]
        counts = indptr[frontier + 1] - starts
        total = int(counts.sum())
        if total == 0:
            break
        flat = np.repeat(starts, counts) + _ranges(counts)
        cand = nbr[flat]
        cand = cand[dist[cand] < 0]
        if cand.size == 0:
            break
        frontier = np.unique(cand)
        level += 1
        dist[frontier] = level
    return dist


def component_labels(graph):
    """Connected-component label per node via union-find.

    Labels are contiguous from 0, numbered by first appearance in node
    order, so the output is deterministic for a fixed graph.
    """
    n = graph.n_nodes
    parent = list(range(n))
    size = [1] * n
    for a, b in zip(graph.src.tolist(), graph.dst.tolist()):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a != b:
            if size[a] < size[b]:
                a, b = b, a
            parent[b] = a
            size[a] += size[b]

    labels = np.empty(n, dtype=np.int64)
    next_label = 0
    root_label = {}
    for i in range(n):
        r = i
        while parent[r] != r:
            parent[r] = parent[parent[r]]
            r = parent[r]
        if r not in root_label:
            root_label[r] = next_label
            next_label += 1
        labels[i] = root_label[r]
    return labels
