"""File ingestion: ethereum-etl transaction CSVs, address lists and NFT
ownership trace CSVs.

Structural problems (missing columns) raise :class:`DataError`; bad rows are
skipped, logged and counted.
"""

from __future__ import annotations

import csv
import json
import logging
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

from .model import (
    AccountParseError,
    LinkabilityNetwork,
    NftTrace,
    TraceEvent,
    TransactionGraph,
    graph_from_edges,
    make_trace,
    parse_account,
)

log = logging.getLogger(__name__)

PathLike = Union[str, Path]

POS_CUTOFF_BLOCK = 15537393

TX_COLUMNS = ("from_address", "to_address", "value", "input", "block_number")
TRACE_COLUMNS = (
    "collection",
    "token_id",
    "from_address",
    "to_address",
    "value_usd",
    "block_number",
    "log_index",
    "timestamp",
)


class DataError(Exception):
    """Input is structurally unusable (missing columns, bad metadata)."""


@dataclass(frozen=True)
class ExclusionList:
    addresses: FrozenSet[str] = frozenset()
    malformed_lines: Tuple[int, ...] = ()

    def __contains__(self, account: object) -> bool:
        return account in self.addresses

    def __len__(self) -> int:
        return len(self.addresses)


@dataclass
class IngestStats:
    rows_read: int = 0
    rows_kept: int = 0
    dropped_contract_call: int = 0
    dropped_zero_value: int = 0
    dropped_excluded: int = 0
    dropped_after_cutoff: int = 0
    dropped_malformed: int = 0
    max_block_seen: int = 0

    @property
    def rows_dropped(self) -> int:
        return (
            self.dropped_contract_call
            + self.dropped_zero_value
            + self.dropped_excluded
            + self.dropped_after_cutoff
            + self.dropped_malformed
        )

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass
class TraceStats:
    rows_read: int = 0
    rows_kept: int = 0
    dropped_malformed: int = 0
    dropped_negative_value: int = 0
    dropped_self_transfer: int = 0
    continuity_warnings: int = 0
    timestamp_warnings: int = 0
    warnings: List[str] = field(default_factory=list)

    def to_json(self) -> str:
        d = asdict(self)
        d.pop("warnings")
        return json.dumps(d, sort_keys=True)


def _check_header(reader: csv.DictReader, required: Iterable[str], path: PathLike) -> None:
    header = reader.fieldnames or []
    missing = [c for c in required if c not in header]
    if missing:
        raise DataError(f"{path}: missing required column(s): {', '.join(missing)}")


def load_address_list(path: PathLike) -> ExclusionList:
    """Read one address per line; ``#`` comments and blank lines are skipped."""
    addrs = set()
    bad = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            try:
                addrs.add(parse_account(s))
            except AccountParseError as exc:
                log.warning("%s:%d: skipping malformed address (%s)", path, lineno, exc)
                bad.append(lineno)
    return ExclusionList(frozenset(addrs), tuple(bad))


load_exclusions = load_address_list


def _parse_uint(text: str) -> int:
    v = int(text)
    if v < 0:
        raise ValueError(f"negative integer: {text}")
    return v


def iter_normal_transfers(
    path: PathLike,
    exclusions: Optional[ExclusionList] = None,
    max_block: Optional[int] = POS_CUTOFF_BLOCK,
    stats: Optional[IngestStats] = None,
):
    """Yield (from, to) for rows that pass the normal-transfer filters."""
    excl = exclusions.addresses if exclusions is not None else frozenset()
    st = stats if stats is not None else IngestStats()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader, TX_COLUMNS, path)
        for row in reader:
            st.rows_read += 1
            try:
                src = parse_account(row["from_address"] or "")
                dst = parse_account(row["to_address"] or "")
                block = _parse_uint(row["block_number"])
                value = Decimal(row["value"])
                inp = (row["input"] or "").strip().lower()
                if value < 0 or not value.is_finite():
                    raise ValueError(f"bad value {row['value']}")
            except (AccountParseError, ValueError, InvalidOperation, TypeError, AttributeError) as exc:
                log.debug("%s:%d: malformed row (%s)", path, reader.line_num, exc)
                st.dropped_malformed += 1
                continue
            if block > st.max_block_seen:
                st.max_block_seen = block
            if max_block is not None and block > max_block:
                st.dropped_after_cutoff += 1
            elif inp != "0x":
                st.dropped_contract_call += 1
            elif value == 0:
                st.dropped_zero_value += 1
            elif src in excl or dst in excl:
                st.dropped_excluded += 1
            else:
                st.rows_kept += 1
                yield src, dst


def load_transactions(
    path: PathLike,
    exclusions: Optional[ExclusionList] = None,
    max_block: Optional[int] = POS_CUTOFF_BLOCK,
) -> Tuple[TransactionGraph, IngestStats]:
    stats = IngestStats()
    graph = graph_from_edges(iter_normal_transfers(path, exclusions, max_block, stats))
    return graph, stats


def write_transactions(path: PathLike, edges: Iterable[Tuple[str, str]]) -> None:
    """Write edges as a minimal normal-transaction CSV (value 1 wei, block 0)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["block_number", "from_address", "to_address", "value", "input"])
        for v, u in edges:
            w.writerow([0, v, u, 1, "0x"])


def load_traces(path: PathLike) -> Tuple[Dict[str, List[NftTrace]], TraceStats]:
    """Group trace rows per (collection, token_id) into sorted NftTraces.

    Returns collections in name order, tokens in id order.
    """
    stats = TraceStats()
    grouped: Dict[Tuple[str, int], List[TraceEvent]] = defaultdict(list)

    def warn(msg: str) -> None:
        stats.warnings.append(msg)
        log.warning(msg)

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader, TRACE_COLUMNS, path)
        for row in reader:
            stats.rows_read += 1
            try:
                token = _parse_uint(row["token_id"])
                src = parse_account(row["from_address"] or "")
                dst = parse_account(row["to_address"] or "")
                value = Decimal(row["value_usd"])
                if not value.is_finite():
                    raise ValueError(f"bad value_usd {row['value_usd']}")
                block = _parse_uint(row["block_number"])
                logi = _parse_uint(row["log_index"])
                ts = _parse_uint(row["timestamp"])
                coll = (row["collection"] or "").strip()
            except (AccountParseError, ValueError, InvalidOperation, TypeError, AttributeError) as exc:
                warn(f"{path}:{reader.line_num}: malformed trace row ({exc})")
                stats.dropped_malformed += 1
                continue
            if value < 0:
                warn(f"{path}:{reader.line_num}: negative value_usd {value}")
                stats.dropped_negative_value += 1
                continue
            if src == dst:
                warn(f"{path}:{reader.line_num}: self-transfer by {src}")
                stats.dropped_self_transfer += 1
                continue
            stats.rows_kept += 1
            grouped[(coll, token)].append(TraceEvent(token, 0, src, dst, value, block, logi, ts))

    out: Dict[str, List[NftTrace]] = {}
    for coll, token in sorted(grouped):
        trace = make_trace(token, grouped[(coll, token)], coll)
        for seq in trace.continuity_breaks():
            stats.continuity_warnings += 1
            warn(f"{coll} token {token}: event {seq} not sent by the current owner")
        for seq in trace.timestamp_regressions():
            stats.timestamp_warnings += 1
            warn(f"{coll} token {token}: event {seq} timestamp goes backwards")
        out.setdefault(coll, []).append(trace)
    return out, stats


def write_traces(path: PathLike, traces: Iterable[NftTrace]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for t in traces:
            for e in t.events:
                w.writerow(
                    [t.collection, t.token_id, e.from_addr, e.to_addr, e.value_usd, e.block_number, e.log_index, e.timestamp]
                )


def read_linkability(path: PathLike) -> LinkabilityNetwork:
    """Read a ``src,dst,hops`` CSV, honouring a leading ``# max_hops=N`` line.

    Without that line the construction depth is taken as the largest hop
    count present.
    """
    max_hops: Optional[int] = None
    edges: Dict[Tuple[str, str], int] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        lines = []
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                if key.strip() == "max_hops":
                    try:
                        max_hops = int(val)
                    except ValueError:
                        raise DataError(f"{path}: bad max_hops metadata {val!r}") from None
                continue
            lines.append(line)
    reader = csv.DictReader(lines)
    _check_header(reader, ("src", "dst", "hops"), path)
    for row in reader:
        try:
            v, u = parse_account(row["src"]), parse_account(row["dst"])
            h = int(row["hops"])
        except (AccountParseError, ValueError, TypeError) as exc:
            raise DataError(f"{path}: bad linkability row {row} ({exc})") from None
        if h < 1 or v == u:
            raise DataError(f"{path}: invalid linkability edge {v},{u},{h}")
        edges[(v, u)] = h
    if max_hops is None:
        max_hops = max(edges.values(), default=0)
    owners = {a for pair in edges for a in pair}
    return LinkabilityNetwork(edges, owners, max_hops)


def write_linkability(path: PathLike, ln: LinkabilityNetwork) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(ln.to_csv())
