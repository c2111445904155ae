"""Community detection mechanics: the two-triangle graph and self-loops.

The bridge-of-two-triangles graph is the classic sanity case: its best
partition (exhaustively verifiable) is the two triangles at Q = 5/14.
The second half shows how a heavy self-loop pulls a node into its own
community when loops are included, and how the two partitions nest.
"""

from boardnet import Graph, SelfLoopMode, crosswalk, louvain, modularity

triangles = Graph.from_edges([(0, 1, 1), (1, 2, 1), (0, 2, 1),
                              (3, 4, 1), (4, 5, 1), (3, 5, 1), (2, 3, 1)])
for seed in range(3):
    top = louvain(triangles, seed=seed).final
    print(f"seed {seed}: communities {top.communities()}  Q = {top.modularity:.6f}"
          f"  (5/14 = {5 / 14:.6f})")

print("\nresolution sweep (partition is stable on this graph):")
for gamma in (0.5, 1.0, 1.5):
    top = louvain(triangles, resolution=gamma, seed=0).final
    print(f"  gamma {gamma}: {top.n_communities} communities, "
          f"Q({gamma}) = {top.modularity:.4f}")

# a city with massive intra-city interlock weight: keep vs drop the loop
city_graph = Graph.from_edges(
    [("london", "leeds", 8), ("london", "manchester", 7), ("leeds", "manchester", 6),
     ("paris", "lyon", 9), ("paris", "nice", 7), ("lyon", "nice", 5),
     ("london", "paris", 4)],
    loops={"london": 400})

included = louvain(city_graph, seed=0, self_loop_mode=SelfLoopMode.INCLUDED).final
excluded = louvain(city_graph, seed=0, self_loop_mode=SelfLoopMode.EXCLUDED).final
print("\nwith self-loops included:", included.communities())
print("with self-loops excluded:", excluded.communities())

walk = crosswalk(included, excluded)
print(f"crosswalk counts (rows = included-mode communities):\n{walk.counts}")
print(f"included-mode partition nests inside the excluded-mode one: {walk.refinement}")
print(f"recomputed modularity of the excluded partition: "
      f"{modularity(city_graph, excluded):.4f}")
