"""Net food-calorie trade networks: ingestion, netting, metrics and reports."""

from .community import (
    Partition,
    brute_force_best_partition,
    community_report,
    detect_communities,
    modularity,
)
from .errors import CalnetError, SchemaError, UndefinedMetricError
from .ingest import (
    CalorieFlowRecord,
    FactorTable,
    IngestConfig,
    IngestStats,
    TradeRecord,
    aggregate_flows,
    ingest,
    parse_nutritive_factors,
    parse_trade_records,
    to_calories,
)
from .metrics import (
    NetworkSummary,
    NodeDegrees,
    connectivity,
    degree_correlation,
    degrees,
    heterogeneity,
    node_correlation_similarity,
)
from .netgraph import (
    CalorieMatrix,
    NetTradeNetwork,
    build_net_network,
    export_edge_list,
    read_edge_list,
    symmetrize,
)
from .report import (
    export_share,
    metric_series,
    peripheral_nodes,
    rank_top,
    zero_export_fraction,
)

__version__ = "0.1.0"
