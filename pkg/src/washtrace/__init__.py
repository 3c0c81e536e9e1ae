"""NFT wash-trade detection from ownership traces and linkability networks."""

from .detection import (
    CollectionSummary,
    DepthError,
    DetectionConfig,
    SweepRow,
    cluster_on_linkability,
    cluster_on_nft_transfer,
    collection_report,
    depth_sweep,
    detect_wash_trades,
    merge_common_sets,
)
from .ingest import DataError, ExclusionList, IngestStats, load_exclusions, load_traces, load_transactions
from .linkability import BfsConfig, bfs_from_root, build_linkability_network
from .model import (
    AccountParseError,
    LinkabilityNetwork,
    NftTrace,
    Partition,
    TraceEvent,
    TransactionGraph,
    WashReport,
    graph_from_edges,
    parse_account,
)

__version__ = "0.1.0"
