"""Wash-trade detection over NFT ownership traces.

Accounts in a token's trace are clustered first by zero-value transfers and
then by linkability links; a trade whose seller and buyer end up in the same
cluster is flagged as a wash sale.  Clustering is done per token.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from typing import Dict, Iterable, List, Sequence, Set, Tuple

from .model import LinkabilityNetwork, NftTrace, Partition, WashReport, safe_ratio

HISTOGRAM_BUCKETS = ("0", "1", "2", "3", "4", "5", ">5")


class DepthError(ValueError):
    """Requested link threshold exceeds the network's construction depth."""


@dataclass(frozen=True)
class DetectionConfig:
    max_link_hops: int = 4
    strict_paper_mode: bool = False

    def __post_init__(self) -> None:
        if self.max_link_hops < 1:
            raise ValueError(f"max_link_hops must be >= 1, got {self.max_link_hops}")


@dataclass(frozen=True)
class SweepRow:
    max_link_hops: int
    avg_wash_trades_per_token: float
    pct_linked_accounts: float
    total_flagged: int


@dataclass
class CollectionSummary:
    collection: str
    token_count: int
    total_volume: Decimal
    washed_volume: Decimal
    histogram: Dict[str, int] = field(default_factory=dict)

    @property
    def wash_share(self) -> float:
        return safe_ratio(self.washed_volume, self.total_volume)

    @property
    def legit_volume(self) -> Decimal:
        return self.total_volume - self.washed_volume


def histogram_bucket(wash_sales: int) -> str:
    return str(wash_sales) if wash_sales <= 5 else ">5"


def cluster_on_nft_transfer(trace: NftTrace) -> List[Set[str]]:
    return [{e.from_addr, e.to_addr} for e in trace.events if not e.is_trade]


def merge_common_sets(sets: Iterable[Iterable[str]]) -> Partition:
    p = Partition()
    for s in sets:
        members = list(s)
        for a in members:
            p.add(a)
        for b in members[1:]:
            p.union(members[0], b)
    return p


def cluster_on_linkability(partition: Partition, ln: LinkabilityNetwork, max_link_hops: int) -> Partition:
    """Union every pair of indexed accounts linked within ``max_link_hops``.

    Links are treated as undirected. Only accounts already in ``partition``
    take part; the input partition is not modified.
    """
    out = partition.copy()
    for a in partition.members():
        for b, h in ln.neighbors(a).items():
            if h <= max_link_hops and b in out:
                out.union(a, b)
    return out


def check_depth(ln: LinkabilityNetwork, max_link_hops: int) -> None:
    if max_link_hops > ln.max_hops:
        raise DepthError(
            f"max_link_hops={max_link_hops} exceeds the linkability network's construction depth {ln.max_hops}"
        )


def cluster_trace(trace: NftTrace, ln: LinkabilityNetwork, config: DetectionConfig) -> Partition:
    p = merge_common_sets(cluster_on_nft_transfer(trace))
    if not config.strict_paper_mode:
        for a in trace.accounts():
            p.add(a)
    return cluster_on_linkability(p, ln, config.max_link_hops)


def _report(trace: NftTrace, partition: Partition, config: DetectionConfig) -> WashReport:
    total = washed = Decimal(0)
    sales = 0
    flagged = []
    for e in trace.events:
        if not e.is_trade:
            continue
        sales += 1
        total += e.value_usd
        if partition.same(e.from_addr, e.to_addr):
            flagged.append(e.seq)
            washed += e.value_usd
    return WashReport(
        token_id=trace.token_id,
        total_volume_usd=total,
        washed_volume_usd=washed,
        wash_sales=len(flagged),
        total_sales=sales,
        flagged_events=tuple(flagged),
        collection=trace.collection,
        max_link_hops=config.max_link_hops,
    )


def detect_wash_trades(trace: NftTrace, ln: LinkabilityNetwork, config: DetectionConfig = DetectionConfig()) -> WashReport:
    check_depth(ln, config.max_link_hops)
    return _report(trace, cluster_trace(trace, ln, config), config)


def rank_reports(reports: Iterable[WashReport]) -> List[WashReport]:
    return sorted(reports, key=lambda r: r.suspicion_key)


def summarize(reports: Sequence[WashReport], collection: str = "") -> CollectionSummary:
    hist = {b: 0 for b in HISTOGRAM_BUCKETS}
    for r in reports:
        hist[histogram_bucket(r.wash_sales)] += 1
    return CollectionSummary(
        collection=collection,
        token_count=len(reports),
        total_volume=sum((r.total_volume_usd for r in reports), Decimal(0)),
        washed_volume=sum((r.washed_volume_usd for r in reports), Decimal(0)),
        histogram=hist,
    )


def collection_report(
    traces: Sequence[NftTrace],
    ln: LinkabilityNetwork,
    config: DetectionConfig = DetectionConfig(),
    collection: str = "",
) -> Tuple[List[WashReport], CollectionSummary]:
    """Per-token reports ranked by suspicion, plus the collection totals."""
    check_depth(ln, config.max_link_hops)
    if not collection and traces:
        collection = traces[0].collection
    reports = [_report(t, cluster_trace(t, ln, config), config) for t in traces]
    return rank_reports(reports), summarize(reports, collection)


def flagged_set(reports: Iterable[WashReport]) -> Set[Tuple[str, int, int]]:
    return {(r.collection, r.token_id, s) for r in reports for s in r.flagged_events}


def sweep_level(
    traces: Sequence[NftTrace], ln: LinkabilityNetwork, h: int, strict_paper_mode: bool = False
) -> Tuple[SweepRow, List[WashReport]]:
    config = DetectionConfig(max_link_hops=h, strict_paper_mode=strict_paper_mode)
    check_depth(ln, h)
    all_accounts: Set[str] = set()
    linked: Set[str] = set()
    reports = []
    for t in traces:
        p = cluster_trace(t, ln, config)
        reports.append(_report(t, p, config))
        all_accounts.update(t.accounts())
        linked.update(p.non_singletons())
    total_flagged = sum(r.wash_sales for r in reports)
    row = SweepRow(
        max_link_hops=h,
        avg_wash_trades_per_token=total_flagged / len(traces) if traces else 0.0,
        pct_linked_accounts=100.0 * len(linked) / len(all_accounts) if all_accounts else 0.0,
        total_flagged=total_flagged,
    )
    return row, reports


def depth_sweep(traces: Sequence[NftTrace], ln: LinkabilityNetwork, h_max: int) -> List[SweepRow]:
    """Detection repeated with link thresholds 1..h_max."""
    if h_max < 1:
        raise ValueError("h_max must be >= 1")
    check_depth(ln, h_max)
    return [sweep_level(traces, ln, h)[0] for h in range(1, h_max + 1)]
