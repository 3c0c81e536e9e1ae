"""Seeded synthetic data with planted collusion rings.

Layout of the generated world:

* honest accounts trade tokens among themselves and send ETH to background
  "deposit" accounts, which forward to "sink" accounts that never pay
  anyone; no owner is reachable from another owner through the background,
  and BFS reach from any root stays bounded whatever the depth;
* each ring's members are wired pairwise by a private chain of exactly
  ``link_path_hops`` transfers through fresh intermediaries;
* each ring token is bought from an honest seller, traded around the ring
  ``trades_per_ring`` times, then sold to an honest buyer.

Only the in-ring trades are wash trades.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import List, Optional, Set, Tuple, Union

from .ingest import POS_CUTOFF_BLOCK, write_traces
from .model import NftTrace, TraceEvent, TransactionGraph, graph_from_edges, make_trace

COLLECTION = "synth"
GENESIS_TS = 1_600_000_000
BLOCK_SECONDS = 12


class SynthConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    honest_accounts: int = 1000
    ring_count: int = 5
    ring_size: int = 3
    ring_size_max: Optional[int] = None  # ring sizes drawn from [ring_size, ring_size_max]
    trades_per_ring: int = 6
    honest_trades: int = 2000
    background_tx: int = 5000
    link_path_hops: int = 3
    price_base_usd: Decimal = Decimal("1000")

    def validate(self) -> None:
        for name in ("seed", "honest_accounts", "ring_count", "ring_size", "trades_per_ring", "honest_trades", "background_tx"):
            if getattr(self, name) < 0:
                raise SynthConfigError(f"{name} must be >= 0")
        if self.ring_count > 0 and self.ring_size < 2:
            raise SynthConfigError("ring_size must be >= 2 when ring_count > 0")
        if self.ring_size_max is not None and self.ring_size_max < self.ring_size:
            raise SynthConfigError("ring_size_max must be >= ring_size")
        if self.link_path_hops < 1:
            raise SynthConfigError("link_path_hops must be >= 1")
        if self.honest_trades > 0 and self.honest_accounts < 2:
            raise SynthConfigError("honest_trades needs at least 2 honest accounts")
        if self.price_base_usd <= 0:
            raise SynthConfigError("price_base_usd must be > 0")


@dataclass
class GroundTruth:
    wash_events: Set[Tuple[int, int]] = field(default_factory=set)
    colluding_accounts: List[List[str]] = field(default_factory=list)

    def to_json(self) -> str:
        doc = {
            "wash_events": [{"token_id": t, "seq": s} for t, s in sorted(self.wash_events)],
            "colluding_accounts": [sorted(r) for r in self.colluding_accounts],
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "GroundTruth":
        doc = json.loads(text)
        return cls(
            {(e["token_id"], e["seq"]) for e in doc["wash_events"]},
            [list(r) for r in doc["colluding_accounts"]],
        )


@dataclass
class SynthData:
    graph: TransactionGraph
    traces: List[NftTrace]
    truth: GroundTruth
    transactions: List[Tuple[int, str, str, int]]  # (block, from, to, wei) in emission order

    @property
    def owners(self) -> List[str]:
        return sorted({a for t in self.traces for a in t.accounts()})


class _World:
    def __init__(self, seed: int):
        self.rng = random.Random(seed)
        self.used: Set[str] = set()
        self.block = 1_000_000

    def account(self) -> str:
        while True:
            a = "0x%040x" % self.rng.getrandbits(160)
            if a not in self.used:
                self.used.add(a)
                return a

    def next_block(self) -> int:
        self.block += self.rng.randint(1, 50)
        return self.block


def _price(rng: random.Random, base: Decimal) -> Decimal:
    cents = int(base * 100 * Decimal(0.25 + 1.5 * rng.random()))
    return Decimal(max(cents, 1)) / 100


def generate(config: SynthConfig = SynthConfig()) -> SynthData:
    config.validate()
    w = _World(config.seed)
    rng = w.rng
    txs: List[Tuple[int, str, str, int]] = []

    def transfer(src: str, dst: str) -> None:
        txs.append((rng.randrange(1, POS_CUTOFF_BLOCK), src, dst, rng.randint(10**15, 10**19)))

    honest = [w.account() for _ in range(config.honest_accounts)]
    n_pool = max(1, config.honest_accounts) if config.background_tx else 0
    deposits = [w.account() for _ in range(n_pool)]
    sinks = [w.account() for _ in range(n_pool)]

    for _ in range(config.background_tx):
        if honest and rng.random() < 0.5:
            transfer(rng.choice(honest), rng.choice(deposits))
        else:
            transfer(rng.choice(deposits), rng.choice(sinks))

    truth = GroundTruth()
    rings: List[List[str]] = []
    for _ in range(config.ring_count):
        size = config.ring_size
        if config.ring_size_max is not None:
            size = rng.randint(config.ring_size, config.ring_size_max)
        members = [w.account() for _ in range(size)]
        rings.append(members)
        truth.colluding_accounts.append(sorted(members))
        for i in range(size):
            for j in range(i + 1, size):
                chain = [members[i]] + [w.account() for _ in range(config.link_path_hops - 1)] + [members[j]]
                for a, b in zip(chain, chain[1:]):
                    transfer(a, b)

    events_by_token: List[Tuple[int, List[TraceEvent]]] = []
    token_id = 0

    def event(tok: int, src: str, dst: str, value: Decimal) -> TraceEvent:
        blk = w.next_block()
        return TraceEvent(tok, 0, src, dst, value, blk, rng.randrange(0, 300), GENESIS_TS + blk * BLOCK_SECONDS)

    for members in rings:
        evs = []
        bookends = len(honest) >= 2
        if bookends:
            seller, buyer = rng.sample(honest, 2)
            evs.append(event(token_id, seller, members[0], _price(rng, config.price_base_usd)))
        owner = members[0]
        wash_seqs = []
        for k in range(config.trades_per_ring):
            nxt = members[(k + 1) % len(members)]
            wash_seqs.append(len(evs))
            evs.append(event(token_id, owner, nxt, _price(rng, config.price_base_usd)))
            owner = nxt
        if bookends:
            evs.append(event(token_id, owner, buyer, _price(rng, config.price_base_usd)))
        truth.wash_events.update((token_id, s) for s in wash_seqs)
        events_by_token.append((token_id, evs))
        token_id += 1

    remaining = config.honest_trades
    while remaining > 0:
        n = min(remaining, rng.randint(1, 5))
        owner = rng.choice(honest)
        evs = []
        for _ in range(n):
            nxt = rng.choice(honest)
            while nxt == owner:
                nxt = rng.choice(honest)
            evs.append(event(token_id, owner, nxt, _price(rng, config.price_base_usd)))
            owner = nxt
        events_by_token.append((token_id, evs))
        token_id += 1
        remaining -= n

    traces = [make_trace(tok, evs, COLLECTION) for tok, evs in events_by_token]
    graph = graph_from_edges((s, d) for _, s, d, _ in txs)
    return SynthData(graph, traces, truth, txs)


def write_synth(out_dir: Union[str, Path], data: SynthData) -> dict:
    """Write transactions.csv, traces.csv, owners.txt and ground_truth.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "transactions": out / "transactions.csv",
        "traces": out / "traces.csv",
        "owners": out / "owners.txt",
        "ground_truth": out / "ground_truth.json",
    }
    with open(paths["transactions"], "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["hash", "block_number", "from_address", "to_address", "value", "input"])
        for i, (blk, src, dst, wei) in enumerate(data.transactions):
            wr.writerow(["0x%064x" % i, blk, src, dst, wei, "0x"])
    write_traces(paths["traces"], data.traces)
    paths["owners"].write_text("".join(a + "\n" for a in data.owners), encoding="utf-8")
    paths["ground_truth"].write_text(data.truth.to_json(), encoding="utf-8")
    return paths
