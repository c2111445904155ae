"""Board-interlock network analysis.

From raw firm/position/ownership registries to a city-level interlock
network: bipartite projection, giant-component extraction, MeanShift
cityclusters, Louvain communities, centrality profiles and the
local/nonlocal tie decomposition, plus a planted-partition synthetic
generator for validation.
"""

from .centrality import (betweenness, center_subgraph, centrality_report,
                         degree_centrality, degree_distribution, distance_stats,
                         eccentricity_exact)
from .citygraph import aggregate_to_cities, strip_self_loops
from .community import (Dendrogram, Partition, SelfLoopMode, crosswalk, louvain,
                        modularity, normalized_mutual_information, stability_check)
from .geo import (CityCluster, ClusterAssignment, apply_gazetteer, assign_firms,
                  cluster_cities, load_gazetteer, mean_shift,
                  split_border_clusters)
from .graph import Graph
from .ingest import (FirmRecord, OwnershipLink, PositionRecord, PositionTable,
                     RoleKind, filter_firms, filter_mega_directors,
                     filter_positions, parse_firms, parse_ownership,
                     parse_positions)
from .interlock import (connected_components, giant_component,
                        project_interlocks, remove_ownership_ties)
from .locality import (classify_ties, community_composition, community_graph,
                       nonlocal_hubs)
from .pipeline import PipelineConfig, run_all, run_stage
from .synth import PlantedConfig, generate_planted, score_recovery

__version__ = "0.1.0"
