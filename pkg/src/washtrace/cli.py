"""washtrace command line.

Exit codes: 0 success, 1 usage/config error, 2 I/O error, 3 data error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from decimal import Decimal
from pathlib import Path
from typing import List, Optional

from . import detection, ingest, linkability, report, synth

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DATA = 0, 1, 2, 3

log = logging.getLogger("washtrace")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits 2 by default
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit_stats(stats_json: str, path: Optional[str]) -> None:
    if path:
        Path(path).write_text(stats_json + "\n", encoding="utf-8")
    else:
        print(stats_json, file=sys.stderr)


def cmd_build_linkability(args: argparse.Namespace) -> int:
    excl = ingest.load_address_list(args.exclusions) if args.exclusions else None
    owners = ingest.load_address_list(args.owners)
    graph, stats = ingest.load_transactions(args.transactions, excl, args.max_block)
    _emit_stats(stats.to_json(), args.stats_out)
    cfg = linkability.BfsConfig(max_hops=args.max_hops, workers=linkability.resolve_workers(args.workers))
    ln = linkability.build_linkability_network(graph, owners.addresses, cfg)
    ingest.write_linkability(args.out, ln)
    log.info("wrote %d links over %d owners to %s", len(ln), len(owners), args.out)
    return EXIT_OK


def _load_inputs(args: argparse.Namespace):
    traces, tstats = ingest.load_traces(args.traces)
    _emit_stats(tstats.to_json(), getattr(args, "stats_out", None))
    ln = ingest.read_linkability(args.linkability)
    return traces, ln


def cmd_detect(args: argparse.Namespace) -> int:
    traces, ln = _load_inputs(args)
    cfg = detection.DetectionConfig(max_link_hops=args.max_link_hops, strict_paper_mode=args.strict_paper)
    detection.check_depth(ln, cfg.max_link_hops)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ext = {"csv": "csv", "json": "json", "text": "txt"}[args.format]
    summaries = []
    for coll, coll_traces in traces.items():
        reports, summary = detection.collection_report(coll_traces, ln, cfg, coll)
        summaries.append(summary)
        stem = coll or "default"
        (out / f"{stem}_stats.{ext}").write_text(report.render_stats_table(reports, args.format), encoding="utf-8")
        (out / f"{stem}_histogram.csv").write_text(report.render_histogram(summary), encoding="utf-8")
        (out / f"{stem}_flagged.json").write_text(report.render_flagged(reports), encoding="utf-8")
        if args.dot:
            dot_dir = out / "dot"
            dot_dir.mkdir(exist_ok=True)
            by_id = {t.token_id: t for t in coll_traces}
            for r in reports:
                if r.wash_sales:
                    text = report.export_token_dot(by_id[r.token_id], ln, r)
                    (dot_dir / f"{stem}_{r.token_id}.dot").write_text(text, encoding="utf-8")
        log.info("%s: %d tokens, wash share %.3f", stem, summary.token_count, summary.wash_share)
    (out / "volume_summary.csv").write_text(report.render_volume_summary(summaries), encoding="utf-8")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    traces, ln = _load_inputs(args)
    all_traces = [t for ts in traces.values() for t in ts]
    rows = detection.depth_sweep(all_traces, ln, args.h_max)
    Path(args.out).write_text(report.render_sweep(rows), encoding="utf-8")
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    cfg = synth.SynthConfig(
        seed=args.seed,
        honest_accounts=args.honest_accounts,
        ring_count=args.ring_count,
        ring_size=args.ring_size,
        ring_size_max=args.ring_size_max,
        trades_per_ring=args.trades_per_ring,
        honest_trades=args.honest_trades,
        background_tx=args.background_tx,
        link_path_hops=args.link_path_hops,
        price_base_usd=Decimal(args.price_base_usd),
    )
    try:
        data = synth.generate(cfg)
    except synth.SynthConfigError as exc:
        raise UsageError(str(exc)) from None
    synth.write_synth(args.out_dir, data)
    return EXIT_OK


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="washtrace", description="NFT wash-trade detection with linkability networks.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("build-linkability", help="build a linkability network from transactions")
    b.add_argument("--transactions", required=True)
    b.add_argument("--owners", required=True)
    b.add_argument("--exclusions")
    b.add_argument("--max-hops", type=_positive, default=linkability.DEFAULT_MAX_HOPS)
    b.add_argument("--max-block", type=_nonneg, default=ingest.POS_CUTOFF_BLOCK)
    b.add_argument("--workers", type=_nonneg, default=None, help="0 = one per CPU (env WASHTRACE_WORKERS)")
    b.add_argument("--out", required=True)
    b.add_argument("--stats-out")
    b.set_defaults(func=cmd_build_linkability)

    d = sub.add_parser("detect", help="flag wash trades in NFT traces")
    d.add_argument("--traces", required=True)
    d.add_argument("--linkability", required=True)
    d.add_argument("--max-link-hops", type=_positive, default=4)
    d.add_argument("--strict-paper", action="store_true", help="cluster only accounts touched by transfers")
    d.add_argument("--out-dir", required=True)
    d.add_argument("--format", choices=("csv", "json", "text"), default="csv")
    d.add_argument("--dot", action="store_true", help="write a DOT graph per washed token")
    d.add_argument("--stats-out")
    d.set_defaults(func=cmd_detect)

    s = sub.add_parser("sweep", help="repeat detection over link thresholds 1..h-max")
    s.add_argument("--traces", required=True)
    s.add_argument("--linkability", required=True)
    s.add_argument("--h-max", type=_positive, default=20)
    s.add_argument("--out", required=True)
    s.add_argument("--stats-out")
    s.set_defaults(func=cmd_sweep)

    g = sub.add_parser("synth", help="generate a synthetic dataset with planted rings")
    dflt = synth.SynthConfig()
    g.add_argument("--seed", type=_nonneg, default=dflt.seed)
    g.add_argument("--out-dir", required=True)
    g.add_argument("--honest-accounts", type=_nonneg, default=dflt.honest_accounts)
    g.add_argument("--ring-count", type=_nonneg, default=dflt.ring_count)
    g.add_argument("--ring-size", type=_nonneg, default=dflt.ring_size)
    g.add_argument("--ring-size-max", type=_nonneg, default=None)
    g.add_argument("--trades-per-ring", type=_nonneg, default=dflt.trades_per_ring)
    g.add_argument("--honest-trades", type=_nonneg, default=dflt.honest_trades)
    g.add_argument("--background-tx", type=_nonneg, default=dflt.background_tx)
    g.add_argument("--link-path-hops", type=_positive, default=dflt.link_path_hops)
    g.add_argument("--price-base-usd", default=str(dflt.price_base_usd))
    g.set_defaults(func=cmd_synth)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"washtrace: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ingest.DataError, detection.DepthError) as exc:
        print(f"washtrace: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"washtrace: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
