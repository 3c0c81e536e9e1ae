"""Exit criteria. Each test records one PASS/FAIL line, printed in the
pytest terminal summary."""

import csv
import json
import random
import time
from decimal import Decimal

import networkx as nx
import pytest

from washtrace.cli import main
from washtrace.detection import DetectionConfig, cluster_on_linkability, depth_sweep, merge_common_sets, sweep_level
from washtrace.ingest import load_traces, read_linkability
from washtrace.linkability import BfsConfig, build_linkability_network
from washtrace.model import LinkabilityNetwork, graph_from_edges
from washtrace.report import reference_table, render_stats_table

from conftest import ACCEPTANCE_LINES, addr, trace_of
from oracles import linkability_oracle, naive_linkability_clustering, random_digraph


def record(n, title, ok, detail=""):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {title}" + (f" ({detail})" if detail else ""))
    assert ok, detail


C3 = dict(seed=2024, honest_accounts=10_000, ring_count=20, ring_size=3, ring_size_max=5,
          trades_per_ring=6, honest_trades=20_000, background_tx=50_000, link_path_hops=3)


def _synth_argv(out):
    argv = ["synth", "--out-dir", str(out)]
    for k, v in C3.items():
        argv += ["--" + k.replace("_", "-"), str(v)]
    return argv


def _build(d, workers, max_hops=4, name=None):
    out = d / (name or f"ln_w{workers}.csv")
    rc = main(["build-linkability", "--transactions", str(d / "transactions.csv"), "--owners", str(d / "owners.txt"),
               "--max-hops", str(max_hops), "--workers", str(workers), "--out", str(out),
               "--stats-out", str(d / "stats.json")])
    assert rc == 0
    return out


def _detect(d, ln_path, out_name):
    out = d / out_name
    assert main(["detect", "--traces", str(d / "traces.csv"), "--linkability", str(ln_path),
                 "--max-link-hops", "4", "--out-dir", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def c3_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("c3")
    t0 = time.perf_counter()
    assert main(_synth_argv(d)) == 0
    ln = _build(d, workers=0)
    out = _detect(d, ln, "detect")
    return d, ln, out, time.perf_counter() - t0


def test_c1_linkability_oracle_equivalence():
    t0 = time.perf_counter()
    mismatches = 0
    for seed in range(100):
        edges, owners = random_digraph(random.Random(seed), n_max=200, e_max=2000, owners_max=20, addr=addr)
        g = graph_from_edges(edges)
        full = linkability_oracle(edges, owners, 6)
        for k in range(1, 7):
            ln = build_linkability_network(g, owners, BfsConfig(k, workers=1))
            expected = {e: h for e, h in full.items() if h <= k}
            mismatches += ln.edges != expected
    elapsed = time.perf_counter() - t0
    record(1, "linkability == brute-force BFS oracle, 100 graphs x max_hops 1..6",
           mismatches == 0 and elapsed < 10, f"{mismatches} mismatches, {elapsed:.2f}s < 10s")


def test_c2_clustering_fixed_point_equivalence():
    t0 = time.perf_counter()
    mismatches = 0
    for seed in range(100):
        rng = random.Random(seed)
        pool = [addr(i) for i in range(1, 80)]
        sets = [set(rng.sample(pool, 2)) for _ in range(rng.randint(0, 50))]
        links = {}
        for _ in range(rng.randint(0, 100)):
            x, y = rng.sample(pool, 2)
            links[(x, y)] = rng.randint(1, 6)
        h = rng.randint(1, 6)
        merged = merge_common_sets(sets)
        fast = cluster_on_linkability(merged, LinkabilityNetwork(links, pool, 6), h).blocks()
        slow = naive_linkability_clustering([set(b) for b in merged.blocks()], links, h)
        mismatches += fast != slow
    elapsed = time.perf_counter() - t0
    record(2, "union-find clustering == literal pairwise while-loop, 100 instances",
           mismatches == 0 and elapsed < 5, f"{mismatches} mismatches, {elapsed:.2f}s < 5s")


def test_c3_planted_ring_recovery(c3_dir):
    d, _, out, elapsed = c3_dir
    truth = {(e["token_id"], e["seq"]) for e in json.loads((d / "ground_truth.json").read_text())["wash_events"]}
    flagged = {(e["token_id"], e["seq"]) for e in json.loads((out / "synth_flagged.json").read_text())["wash_events"]}
    tp = len(truth & flagged)
    precision = tp / len(flagged) if flagged else 0.0
    recall = tp / len(truth) if truth else 0.0
    ok = flagged == truth and precision == recall == 1.0 and elapsed < 30
    record(3, "planted rings recovered exactly via CLI", ok,
           f"{len(truth)} planted, precision {precision:.3f}, recall {recall:.3f}, {elapsed:.1f}s < 30s")


def test_c4_refinement_monotonicity(c3_dir):
    d = c3_dir[0]
    ln8 = read_linkability(_build(d, workers=0, max_hops=8, name="ln8.csv"))
    traces, _ = load_traces(d / "traces.csv")
    all_traces = [t for ts in traces.values() for t in ts]
    rows, flags = [], []
    for h in range(1, 9):
        row, reports = sweep_level(all_traces, ln8, h)
        rows.append(row)
        flags.append({(r.token_id, s) for r in reports for s in r.flagged_events})
    assert [r.total_flagged for r in depth_sweep(all_traces, ln8, 8)] == [r.total_flagged for r in rows]
    nested = all(flags[i] <= flags[i + 1] for i in range(7))
    mono = all(rows[i].total_flagged <= rows[i + 1].total_flagged
               and rows[i].pct_linked_accounts <= rows[i + 1].pct_linked_accounts for i in range(7))
    record(4, "sweep h=1..8 non-decreasing, flagged(h) nested", nested and mono,
           "total_flagged " + ",".join(str(r.total_flagged) for r in rows))


def test_c5_table_arithmetic():
    t0 = time.perf_counter()
    checks = []
    for token, name in ((8274, "Kennel Apes"), (7165, "BAYC"), (8475, "Meebits")):
        r, printed = next(v for v in reference_table() if v[0].token_id == token and v[0].collection == name)
        text_ratio = render_stats_table([r], "text").splitlines()[1].split()[-1]
        checks.append((name, abs(r.ratio - printed) <= 0.0005 and text_ratio == f"{printed:.3f}", r.ratio))
    elapsed = time.perf_counter() - t0
    ok = all(c[1] for c in checks) and elapsed < 1
    record(5, "table ratios 0.801 / 0.381 / 0.999 within 0.0005", ok,
           ", ".join(f"{n} {v:.4f}" for n, _, v in checks))


def test_c6_determinism_under_parallelism(c3_dir):
    d = c3_dir[0]
    ln_bytes, flag_bytes = set(), set()
    for w in (1, 4, 16):
        ln = _build(d, workers=w)
        ln_bytes.add(ln.read_bytes())
        flag_bytes.add((_detect(d, ln, f"det_w{w}") / "synth_flagged.json").read_bytes())
    record(6, "hash-identical outputs for workers 1/4/16", len(ln_bytes) == 1 and len(flag_bytes) == 1,
           f"{len(ln_bytes)} distinct linkability files, {len(flag_bytes)} distinct flag files")


def _saturating_case(seed):
    rng = random.Random(seed)
    n = 12
    g = nx.gnp_random_graph(n, 0.25, seed=seed, directed=True)
    cycle = [(i, (i + 1) % n) for i in range(n)]  # strongly connected
    edges = [(addr(v + 1), addr(u + 1)) for v, u in list(g.edges) + cycle]
    diameter = nx.diameter(nx.DiGraph(edges))
    owners = [addr(i + 1) for i in range(n)]
    traces = []
    for tok in range(6):
        owner = rng.choice(owners)
        moves = []
        for _ in range(rng.randint(2, 6)):
            nxt = rng.choice([o for o in owners if o != owner])
            moves.append((owner, nxt, rng.choice([0, 3, 8])))
            owner = nxt
        traces.append(trace_of(tok, moves))
    return edges, owners, traces, diameter


def test_c7_substituted_properties(c3_dir):
    ok = True
    details = []
    for seed in range(10):
        edges, owners, traces, diam = _saturating_case(seed)
        h_max = diam + 3
        ln = build_linkability_network(graph_from_edges(edges), owners, BfsConfig(h_max, workers=1))
        rows = depth_sweep(traces, ln, h_max)
        tf = [r.total_flagged for r in rows]
        pct = [r.pct_linked_accounts for r in rows]
        ok &= tf == sorted(tf) and pct == sorted(pct)
        tail = {(r.avg_wash_trades_per_token, r.pct_linked_accounts, r.total_flagged) for r in rows[diam - 1:]}
        ok &= len(tail) == 1
        ok &= pct[-1] == 100.0
        details.append(diam)

    out = c3_dir[2]
    vol_rows = (out / "volume_summary.csv").read_text().splitlines()[1:]
    stats_rows = (out / "synth_stats.csv").read_text().splitlines()[1:]
    totals = sum(Decimal(r.split(",")[1]) for r in stats_rows)
    for row in csv.reader(vol_rows):
        ok &= Decimal(row[1]) + Decimal(row[2]) == totals
    for row in csv.reader(stats_rows):
        ok &= Decimal(row[2]) <= Decimal(row[1])
    record(7, "saturating sweeps plateau past diameter; legit + washed = total", ok,
           f"diameters {details}; paper-scale 25.24% / 94% / Fig.2 inflection not reproducible without chain data")
