"""Core domain types: accounts, the transaction graph, NFT traces, the
linkability network, the union-find partition and per-token reports.

Nothing in here touches the filesystem.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from typing import Dict, FrozenSet, Iterable, Iterator, List, NewType, Optional, Tuple

AccountId = NewType("AccountId", str)

_HEX = frozenset("0123456789abcdef")


class AccountParseError(ValueError):
    """Base class for malformed account addresses."""


class MissingPrefixError(AccountParseError):
    pass


class AddressLengthError(AccountParseError):
    pass


class NonHexError(AccountParseError):
    pass


def parse_account(text: str) -> AccountId:
    """Normalize a hex address to lowercase ``0x`` + 40 hex chars.

    Raises one of the :class:`AccountParseError` subclasses on bad input.
    """
    s = text.strip()
    if s[:2] not in ("0x", "0X"):
        raise MissingPrefixError(f"missing 0x prefix: {text!r}")
    if len(s) != 42:
        raise AddressLengthError(f"expected 42 characters, got {len(s)}: {text!r}")
    body = s[2:].lower()
    if not _HEX.issuperset(body):
        raise NonHexError(f"non-hex characters in address: {text!r}")
    return AccountId("0x" + body)


# --------------------------------------------------------------------------
# Transaction graph
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TransactionGraph:
    """Directed simple graph of normal value transfers.

    Vertices are stored sorted, so the dense index order matches address
    order and ``adj`` (lists of dense indices) is sorted by address too.
    """

    vertices: Tuple[str, ...]
    adj: Tuple[Tuple[int, ...], ...]
    dropped_duplicates: int = 0
    dropped_self_loops: int = 0
    index: Dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "index", {a: i for i, a in enumerate(self.vertices)})

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TransactionGraph):
            return NotImplemented
        return self.vertices == other.vertices and self.adj == other.adj

    def __hash__(self) -> int:
        return hash((self.vertices, self.adj))

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_edges(self) -> int:
        return sum(len(n) for n in self.adj)

    @property
    def adjacency(self) -> Dict[str, List[str]]:
        verts = self.vertices
        return {verts[i]: [verts[j] for j in nbrs] for i, nbrs in enumerate(self.adj)}

    def out_neighbors(self, account: str) -> List[str]:
        i = self.index.get(account)
        if i is None:
            return []
        return [self.vertices[j] for j in self.adj[i]]

    def edge_list(self) -> Iterator[Tuple[str, str]]:
        verts = self.vertices
        for i, nbrs in enumerate(self.adj):
            for j in nbrs:
                yield verts[i], verts[j]

    def serialize(self) -> str:
        return "".join(f"{v},{u}\n" for v, u in self.edge_list())


def graph_from_edges(edges: Iterable[Tuple[str, str]]) -> TransactionGraph:
    """Build a deduplicated, self-loop-free graph from (sender, receiver) pairs.

    Duplicate and self-loop counts are recorded on the returned graph.
    """
    pairs = set()
    dup = loops = 0
    for v, u in edges:
        if v == u:
            loops += 1
            continue
        if (v, u) in pairs:
            dup += 1
            continue
        pairs.add((v, u))

    verts = sorted({a for p in pairs for a in p})
    index = {a: i for i, a in enumerate(verts)}
    buckets: List[List[int]] = [[] for _ in verts]
    for v, u in pairs:
        buckets[index[v]].append(index[u])
    adj = tuple(tuple(sorted(b)) for b in buckets)
    return TransactionGraph(tuple(verts), adj, dropped_duplicates=dup, dropped_self_loops=loops)


# --------------------------------------------------------------------------
# NFT ownership traces
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TraceEvent:
    token_id: int
    seq: int
    from_addr: str
    to_addr: str
    value_usd: Decimal
    block_number: int
    log_index: int
    timestamp: int

    def __post_init__(self) -> None:
        if self.value_usd < 0:
            raise ValueError(f"negative value_usd: {self.value_usd}")
        if self.from_addr == self.to_addr:
            raise ValueError(f"self-transfer of token {self.token_id} by {self.from_addr}")

    @property
    def is_trade(self) -> bool:
        return self.value_usd > 0

    @property
    def sort_key(self) -> Tuple[int, int]:
        return (self.block_number, self.log_index)


@dataclass(frozen=True)
class NftTrace:
    token_id: int
    events: Tuple[TraceEvent, ...]
    collection: str = ""

    def accounts(self) -> List[str]:
        """Distinct accounts in first-appearance order."""
        seen: Dict[str, None] = {}
        for e in self.events:
            seen.setdefault(e.from_addr, None)
            seen.setdefault(e.to_addr, None)
        return list(seen)

    def continuity_breaks(self) -> List[int]:
        """Seqs whose sender is not the previous event's receiver."""
        ev = self.events
        return [ev[i].seq for i in range(1, len(ev)) if ev[i].from_addr != ev[i - 1].to_addr]

    def timestamp_regressions(self) -> List[int]:
        ev = self.events
        return [ev[i].seq for i in range(1, len(ev)) if ev[i].timestamp < ev[i - 1].timestamp]


def make_trace(token_id: int, events: Iterable[TraceEvent], collection: str = "") -> NftTrace:
    """Sort events by (block_number, log_index) and assign seq numbers."""
    ordered = sorted(events, key=lambda e: (e.block_number, e.log_index, e.from_addr, e.to_addr, e.value_usd))
    renum = tuple(
        TraceEvent(token_id, i, e.from_addr, e.to_addr, e.value_usd, e.block_number, e.log_index, e.timestamp)
        for i, e in enumerate(ordered)
    )
    return NftTrace(token_id, renum, collection)


# --------------------------------------------------------------------------
# Linkability network
# --------------------------------------------------------------------------


class LinkabilityNetwork:
    """Owner-to-owner shortest-hop links.

    ``edges`` maps (src, dst) to the hop count of the shortest directed
    path src -> dst in the transaction graph. ``max_hops`` is the depth the
    network was built with; links beyond it are absent, not missing.
    """

    def __init__(self, edges: Dict[Tuple[str, str], int], owner_set: Iterable[str], max_hops: int):
        self.edges = dict(sorted(edges.items()))
        self.owner_set: FrozenSet[str] = frozenset(owner_set)
        self.max_hops = max_hops
        self._undirected: Optional[Dict[str, Dict[str, int]]] = None

    def __len__(self) -> int:
        return len(self.edges)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LinkabilityNetwork):
            return NotImplemented
        return self.edges == other.edges and self.max_hops == other.max_hops

    def __repr__(self) -> str:
        return f"LinkabilityNetwork({len(self.edges)} edges, {len(self.owner_set)} owners, max_hops={self.max_hops})"

    def neighbors(self, account: str) -> Dict[str, int]:
        """Undirected view: other endpoint -> smallest hops in either direction."""
        if self._undirected is None:
            und: Dict[str, Dict[str, int]] = {}
            for (v, u), h in self.edges.items():
                for a, b in ((v, u), (u, v)):
                    nb = und.setdefault(a, {})
                    if h < nb.get(b, h + 1):
                        nb[b] = h
            self._undirected = und
        return self._undirected.get(account, {})

    def linked(self, a: str, b: str, max_link_hops: int) -> bool:
        h = self.neighbors(a).get(b)
        return h is not None and h <= max_link_hops

    def to_csv(self) -> str:
        lines = [f"# max_hops={self.max_hops}\n", "src,dst,hops\n"]
        lines.extend(f"{v},{u},{h}\n" for (v, u), h in self.edges.items())
        return "".join(lines)


# --------------------------------------------------------------------------
# Union-find
# --------------------------------------------------------------------------


class Partition:
    """Disjoint sets over accounts (union by rank, path halving)."""

    def __init__(self, accounts: Iterable[str] = ()):
        self._index: Dict[str, int] = {}
        self._items: List[str] = []
        self._parent: List[int] = []
        self._rank: List[int] = []
        for a in accounts:
            self.add(a)

    def __contains__(self, account: object) -> bool:
        return account in self._index

    def __len__(self) -> int:
        return len(self._items)

    def add(self, account: str) -> None:
        if account in self._index:
            return
        i = len(self._items)
        self._index[account] = i
        self._items.append(account)
        self._parent.append(i)
        self._rank.append(0)

    def _root(self, i: int) -> int:
        parent = self._parent
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def find(self, account: str) -> str:
        return self._items[self._root(self._index[account])]

    def union(self, a: str, b: str) -> None:
        self.add(a)
        self.add(b)
        ra, rb = self._root(self._index[a]), self._root(self._index[b])
        if ra == rb:
            return
        if self._rank[ra] < self._rank[rb]:
            ra, rb = rb, ra
        self._parent[rb] = ra
        if self._rank[ra] == self._rank[rb]:
            self._rank[ra] += 1

    def same(self, a: str, b: str) -> bool:
        ia, ib = self._index.get(a), self._index.get(b)
        if ia is None or ib is None:
            return False
        return self._root(ia) == self._root(ib)

    def members(self) -> List[str]:
        return list(self._items)

    def non_singletons(self) -> List[str]:
        """Members whose block has at least two accounts."""
        roots = [self._root(i) for i in range(len(self._items))]
        counts: Dict[int, int] = {}
        for r in roots:
            counts[r] = counts.get(r, 0) + 1
        return [a for a, r in zip(self._items, roots) if counts[r] > 1]

    def copy(self) -> "Partition":
        p = Partition()
        p._index = dict(self._index)
        p._items = list(self._items)
        p._parent = list(self._parent)
        p._rank = list(self._rank)
        return p

    def blocks(self) -> List[FrozenSet[str]]:
        """Blocks as frozensets, sorted by their smallest member."""
        groups: Dict[int, List[str]] = {}
        for i, a in enumerate(self._items):
            groups.setdefault(self._root(i), []).append(a)
        return sorted((frozenset(g) for g in groups.values()), key=min)


# --------------------------------------------------------------------------
# Reports
# --------------------------------------------------------------------------


def safe_ratio(num: Decimal, den: Decimal) -> float:
    return float(num / den) if den > 0 else 0.0


@dataclass(frozen=True)
class WashReport:
    token_id: int
    total_volume_usd: Decimal
    washed_volume_usd: Decimal
    wash_sales: int
    total_sales: int
    flagged_events: Tuple[int, ...] = ()
    collection: str = ""
    max_link_hops: int = 0

    @property
    def ratio(self) -> float:
        return safe_ratio(self.washed_volume_usd, self.total_volume_usd)

    @property
    def suspicion_key(self) -> Tuple[float, int, int]:
        """Sort key for descending suspicion: ratio, then wash sales, then token id."""
        return (-self.ratio, -self.wash_sales, self.token_id)
