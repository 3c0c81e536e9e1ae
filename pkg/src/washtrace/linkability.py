"""Linkability network construction: one depth-limited BFS per owner
account over the transaction graph, fanned out across worker processes.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .model import LinkabilityNetwork, TransactionGraph

WORKERS_ENV = "WASHTRACE_WORKERS"
DEFAULT_MAX_HOPS = 4


@dataclass(frozen=True)
class BfsConfig:
    max_hops: int = DEFAULT_MAX_HOPS
    workers: int = 0  # 0 = one per CPU

    def __post_init__(self) -> None:
        if self.max_hops < 1:
            raise ValueError(f"max_hops must be >= 1, got {self.max_hops}")
        if self.workers < 0:
            raise ValueError(f"workers must be >= 0, got {self.workers}")


def resolve_workers(workers: Optional[int]) -> int:
    if workers is None:
        env = os.environ.get(WORKERS_ENV, "").strip()
        workers = int(env) if env else 0
    if workers <= 0:
        workers = os.cpu_count() or 1
    return workers


def _bfs(
    adj: Sequence[Sequence[int]],
    root: int,
    is_owner: bytearray,
    max_hops: int,
    seen: bytearray,
) -> List[Tuple[int, int]]:
    # Level-synchronous BFS; ``seen`` is a caller-owned scratch bitmap that
    # is restored to all-zero before returning.
    found = []
    seen[root] = 1
    touched = [root]
    frontier = [root]
    for hops in range(1, max_hops + 1):
        nxt = []
        for v in frontier:
            for u in adj[v]:
                if not seen[u]:
                    seen[u] = 1
                    nxt.append(u)
                    if is_owner[u]:
                        found.append((u, hops))
        if not nxt:
            break
        touched.extend(nxt)
        frontier = nxt
    for t in touched:
        seen[t] = 0
    return found


def bfs_from_root(graph: TransactionGraph, root: str, owners: Iterable[str], max_hops: int) -> List[Tuple[str, int]]:
    """Owners reachable from ``root`` within ``max_hops`` edges, with their
    exact shortest hop counts, in discovery order.
    """
    if max_hops < 1:
        raise ValueError("max_hops must be >= 1")
    r = graph.index.get(root)
    if r is None:
        return []
    mask = _owner_mask(graph, owners)
    seen = bytearray(graph.num_vertices)
    verts = graph.vertices
    return [(verts[u], h) for u, h in _bfs(graph.adj, r, mask, max_hops, seen)]


def _owner_mask(graph: TransactionGraph, owners: Iterable[str]) -> bytearray:
    mask = bytearray(graph.num_vertices)
    for a in owners:
        i = graph.index.get(a)
        if i is not None:
            mask[i] = 1
    return mask


# Per-process state for pool workers, set once by the initializer.
_W: Dict[str, object] = {}


def _init_worker(adj, mask, max_hops) -> None:
    _W["adj"] = adj
    _W["mask"] = mask
    _W["max_hops"] = max_hops
    _W["seen"] = bytearray(len(adj))


def _run_chunk(roots: List[int]) -> List[Tuple[int, int, int]]:
    adj, mask, max_hops, seen = _W["adj"], _W["mask"], _W["max_hops"], _W["seen"]
    out = []
    for r in roots:
        out.extend((r, u, h) for u, h in _bfs(adj, r, mask, max_hops, seen))  # type: ignore[arg-type]
    return out


def _chunks(items: List[int], n: int) -> List[List[int]]:
    size = max(1, -(-len(items) // n))
    return [items[i : i + size] for i in range(0, len(items), size)]


def build_linkability_network(
    graph: TransactionGraph,
    owners: Iterable[str],
    config: BfsConfig = BfsConfig(),
) -> LinkabilityNetwork:
    """Run a BFS from every owner present in ``graph`` and merge the links.

    The result does not depend on the worker count: per-root results are
    keyed by (src, dst) and sorted on merge.
    """
    owner_set = frozenset(owners)
    mask = _owner_mask(graph, owner_set)
    roots = [i for i in range(graph.num_vertices) if mask[i]]
    workers = min(resolve_workers(config.workers), max(1, len(roots)))

    triples: List[Tuple[int, int, int]] = []
    if workers == 1 or len(roots) < 2:
        _init_worker(graph.adj, mask, config.max_hops)
        triples = _run_chunk(roots)
        _W.clear()
    else:
        # Several chunks per worker to even out skewed BFS costs.
        chunks = _chunks(roots, workers * 4)
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_init_worker, initargs=(graph.adj, mask, config.max_hops)
        ) as pool:
            for part in pool.map(_run_chunk, chunks):
                triples.extend(part)

    verts = graph.vertices
    edges = {(verts[r], verts[u]): h for r, u, h in triples}
    return LinkabilityNetwork(edges, owner_set, config.max_hops)
