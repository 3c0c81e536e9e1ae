"""Rendering of detection results: stats tables, histogram and volume CSVs,
flagged-event JSON and per-token DOT graphs.
"""

from __future__ import annotations

import csv
import io
import json
from importlib import resources
from decimal import Decimal
from typing import Iterable, List, Optional, Sequence, Tuple

from .detection import HISTOGRAM_BUCKETS, CollectionSummary, SweepRow, rank_reports
from .model import LinkabilityNetwork, NftTrace, WashReport

STATS_COLUMNS = ("token_id", "total_volume", "washed_volume", "wash_sales", "total_sales", "ratio")
SWEEP_COLUMNS = ("max_link_hops", "avg_wash_trades", "pct_linked_accounts", "total_flagged")


def _csv(rows: Iterable[Sequence[object]], header: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _stats_row(r: WashReport) -> List[object]:
    return [r.token_id, r.total_volume_usd, r.washed_volume_usd, r.wash_sales, r.total_sales, repr(r.ratio)]


def render_stats_table(reports: Iterable[WashReport], fmt: str = "csv") -> str:
    """Render per-token stats, most suspicious first.

    ``fmt`` is one of csv, json or text.  Text mode rounds the ratio to three
    decimals; csv and json keep full precision.
    """
    ranked = rank_reports(reports)
    if fmt == "csv":
        return _csv((_stats_row(r) for r in ranked), STATS_COLUMNS)
    if fmt == "json":
        doc = [
            {
                "token_id": r.token_id,
                "total_volume": str(r.total_volume_usd),
                "washed_volume": str(r.washed_volume_usd),
                "wash_sales": r.wash_sales,
                "total_sales": r.total_sales,
                "ratio": r.ratio,
                "flagged_events": list(r.flagged_events),
            }
            for r in ranked
        ]
        return json.dumps(doc, indent=2) + "\n"
    if fmt == "text":
        rows = [STATS_COLUMNS] + [
            (str(r.token_id), f"{r.total_volume_usd:,}", f"{r.washed_volume_usd:,}", str(r.wash_sales), str(r.total_sales), f"{r.ratio:.3f}")
            for r in ranked
        ]
        widths = [max(len(row[i]) for row in rows) for i in range(len(STATS_COLUMNS))]
        lines = ["  ".join(c.rjust(wd) for c, wd in zip(row, widths)) for row in rows]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def read_stats_csv(text: str) -> List[WashReport]:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        out.append(
            WashReport(
                token_id=int(row["token_id"]),
                total_volume_usd=Decimal(row["total_volume"]),
                washed_volume_usd=Decimal(row["washed_volume"]),
                wash_sales=int(row["wash_sales"]),
                total_sales=int(row["total_sales"]),
                collection=row.get("collection") or "",
            )
        )
    return out


def reference_table() -> List[Tuple[WashReport, float]]:
    """Bundled published token stats: (report, printed ratio) pairs."""
    text = resources.files("washtrace").joinpath("data/tokens_stats.csv").read_text(encoding="utf-8")
    printed = [float(row["ratio"]) for row in csv.DictReader(io.StringIO(text))]
    return list(zip(read_stats_csv(text), printed))


def render_histogram(summary: CollectionSummary) -> str:
    return _csv(((b, summary.histogram.get(b, 0)) for b in HISTOGRAM_BUCKETS), ("bucket", "count"))


def render_volume_summary(summaries: Iterable[CollectionSummary]) -> str:
    return _csv(
        ((s.collection, s.legit_volume, s.washed_volume) for s in summaries),
        ("collection", "legit_volume", "washed_volume"),
    )


def render_sweep(rows: Iterable[SweepRow]) -> str:
    return _csv(
        ((r.max_link_hops, repr(r.avg_wash_trades_per_token), repr(r.pct_linked_accounts), r.total_flagged) for r in rows),
        SWEEP_COLUMNS,
    )


def render_flagged(reports: Iterable[WashReport]) -> str:
    events = sorted((r.token_id, s) for r in reports for s in r.flagged_events)
    return json.dumps({"wash_events": [{"token_id": t, "seq": s} for t, s in events]}, indent=2) + "\n"


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_token_dot(
    trace: NftTrace,
    ln: LinkabilityNetwork,
    report: WashReport,
    max_link_hops: Optional[int] = None,
) -> str:
    """Graphviz digraph of one token: transfer, trade and link edges.

    Links are drawn for linkability edges between trace accounts with hops
    up to ``max_link_hops`` (defaults to the report's threshold).
    """
    limit = report.max_link_hops if max_link_hops is None else max_link_hops
    flagged = set(report.flagged_events)
    name = f"{trace.collection}_{trace.token_id}" if trace.collection else f"token_{trace.token_id}"
    out = [f"digraph {_quote(name)} {{"]
    accounts = sorted(trace.accounts())
    for a in accounts:
        out.append(f"  {_quote(a)};")
    for e in trace.events:
        if e.is_trade:
            attrs = f'kind=trade, seq={e.seq}, label="${e.value_usd}"'
            if e.seq in flagged:
                attrs += ", flagged=true, color=red"
        else:
            attrs = f"kind=transfer, seq={e.seq}"
        out.append(f"  {_quote(e.from_addr)} -> {_quote(e.to_addr)} [{attrs}];")
    members = set(accounts)
    for (v, u), h in ln.edges.items():
        if v in members and u in members and h <= limit:
            out.append(f'  {_quote(v)} -> {_quote(u)} [kind=link, hops={h}, style=dotted, color=purple];')
    out.append("}")
    return "\n".join(out) + "\n"
