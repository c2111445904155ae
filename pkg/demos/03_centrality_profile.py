"""Centrality profile of a hub-dominated network.

Builds a preferential-attachment graph (the degree structure typical of
city interlock networks), then computes the full centrality profile:
degree and betweenness rankings, the exact eccentricity spectrum with
far fewer BFS than nodes, and the distance distribution.
"""

import numpy as np

from boardnet import Graph, centrality_report, distance_stats, eccentricity_exact
from boardnet.centrality import degree_distribution

rng = np.random.default_rng(7)
n, m = 1200, 2
targets = list(range(m))
repeated: list[int] = []
edges = set()
for v in range(m, n):
    chosen = set(targets)
    edges.update((min(v, t), max(v, t)) for t in chosen)
    repeated.extend(chosen)
    repeated.extend([v] * len(chosen))
    targets = [repeated[int(rng.integers(len(repeated)))] for _ in range(m)]
graph = Graph.from_edges([(a, b, 1) for a, b in sorted(edges)])
print(f"graph: {graph.n_nodes} nodes, {graph.n_edges} edges")

dist = degree_distribution(graph)
print("degree log-bins (lo, hi, nodes):", dist.log_bins)

report = centrality_report(graph)
print("top 5 by degree:     ", report.top("degree", 5))
print("top 5 by betweenness:", report.top("betweenness", 5))

ecc = eccentricity_exact(graph)
print(f"radius {ecc.radius}, diameter {ecc.diameter}, "
      f"center {len(ecc.center)} nodes, periphery {len(ecc.periphery)} nodes")
print(f"eccentricity histogram: {ecc.histogram()}")
print(f"exact values for all {graph.n_nodes} nodes needed only "
      f"{ecc.bfs_count} BFS traversals ({ecc.bfs_count / graph.n_nodes:.0%} of n)")

stats = distance_stats(graph)
print(f"average hop distance {stats.average:.3f}; histogram {stats.histogram}")
sampled = distance_stats(graph, sample_size=100, seed=1)
print(f"sampled estimate from 100 sources: {sampled.average:.3f}")
