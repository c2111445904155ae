"""Local vs nonlocal ties relative to detected communities.

Ties inside a community are "local", ties crossing communities
"nonlocal" - with no geographic assumption about what local means.
This demo builds a planted city network, detects communities, splits
the ties, aggregates to the community-by-community graph and lists the
nonlocal hub cities.
"""

from boardnet import (PlantedConfig, SelfLoopMode, aggregate_to_cities,
                      assign_firms, classify_ties, cluster_cities,
                      community_composition, community_graph,
                      filter_positions, generate_planted, louvain,
                      nonlocal_hubs, project_interlocks, split_border_clusters)

dataset = generate_planted(PlantedConfig(
    communities=3, cities_per_community=12, firms_per_city=20,
    city_size_skew=1.0, p_in=0.08, p_out=0.004, seed=3))
table = filter_positions(dataset.positions)
firm_graph = project_interlocks(table)
clusters = split_border_clusters(cluster_cities(dataset.firms, bandwidth=0.1)[0])
assignment = assign_firms(dataset.firms, clusters)
city_graph, _ = aggregate_to_cities(firm_graph, assignment)
partition = louvain(city_graph, seed=0, self_loop_mode=SelfLoopMode.EXCLUDED).final
print(f"{city_graph.n_nodes} cities, {city_graph.n_edges} distinct city pairs, "
      f"{partition.n_communities} communities")

ties = classify_ties(city_graph, partition)
print(f"binary split:   {ties.binary_local:.0%} local / "
      f"{ties.binary_nonlocal:.0%} nonlocal city pairs")
print(f"weighted split: {ties.weighted_local:.0%} local / "
      f"{ties.weighted_nonlocal:.0%} nonlocal interlocks "
      f"({ties.nonlocal_weight:.0f} nonlocal interlocks in total)")

comm_graph = community_graph(city_graph, partition)
print("\ncommunity-by-community ties (weight = interlocks):")
for a, b, w in comm_graph.edge_list():
    print(f"  community {a} <-> community {b}: {w}")

country_of = {cluster.cluster_id: cluster.country for cluster in clusters}
composition = community_composition(partition, country_of)
for cid, counts in enumerate(composition.counts):
    print(f"community {cid}: {counts} "
          f"(dominant {composition.dominant[cid]}, "
          f"entropy {composition.entropy_bits[cid]:.2f} bits)")

hubs = nonlocal_hubs(city_graph, partition, threshold=4)
print(f"\ncities with >= 4 nonlocal neighbor cities: {hubs.hubs}")
print(f"their inter-community subgraph has {hubs.subgraph.n_edges} edges")
