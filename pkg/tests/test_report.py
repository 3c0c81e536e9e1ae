import csv
import io
import json
from decimal import Decimal

import pydot
import pytest

from washtrace.detection import CollectionSummary, DetectionConfig, collection_report, detect_wash_trades, summarize
from washtrace.model import LinkabilityNetwork, WashReport
from washtrace.report import (
    export_token_dot,
    read_stats_csv,
    reference_table,
    render_flagged,
    render_histogram,
    render_stats_table,
    render_volume_summary,
)

from conftest import addr, trace_of

a, b, c = addr(1), addr(2), addr(3)


def rep(token, total, washed, ws, ts):
    return WashReport(token, Decimal(total), Decimal(washed), ws, ts)


def _text_ratio(r):
    line = render_stats_table([r], "text").splitlines()[1]
    return line.split()[-1]


def test_text_ratio_rounding():
    assert _text_ratio(rep(8475, 179325909, 179166551, 273, 275)) == "0.999"
    assert _text_ratio(rep(7165, 877981, 334449, 12, 16)) == "0.381"


def test_empty_documents():
    assert render_stats_table([], "csv") == "token_id,total_volume,washed_volume,wash_sales,total_sales,ratio\n"
    assert json.loads(render_stats_table([], "json")) == []
    assert render_stats_table([], "text").split() == ["token_id", "total_volume", "washed_volume",
                                                      "wash_sales", "total_sales", "ratio"]


def test_csv_round_trip_and_order():
    rows = [rep(1, 100, 10, 1, 3), rep(2, 40, 40, 2, 2), rep(3, 0, 0, 0, 0)]
    text = render_stats_table(rows, "csv")
    back = read_stats_csv(text)
    assert [r.token_id for r in back] == [2, 1, 3]
    assert {(r.token_id, r.total_volume_usd, r.washed_volume_usd) for r in back} == {
        (r.token_id, r.total_volume_usd, r.washed_volume_usd) for r in rows}
    assert float(next(csv.DictReader(io.StringIO(text)))["ratio"]) == 1.0


def test_json_has_flagged_events():
    r = detect_wash_trades(trace_of(1, [(a, b, 0), (b, a, 4)]), LinkabilityNetwork({}, [], 4))
    doc = json.loads(render_stats_table([r], "json"))
    assert doc[0]["flagged_events"] == [1]


def test_unknown_format():
    with pytest.raises(ValueError):
        render_stats_table([], "xml")


def _hist(counts):
    return summarize([rep(i, 1, 0, n, n) for i, n in enumerate(counts)])


def test_histogram_buckets():
    rows = dict(csv.reader(io.StringIO(render_histogram(_hist([1, 1, 5, 6])))))
    assert rows == {"bucket": "count", "0": "0", "1": "2", "2": "0", "3": "0", "4": "0", "5": "1", ">5": "1"}
    rows = dict(csv.reader(io.StringIO(render_histogram(_hist([0] * 10)))))
    assert rows["0"] == "10"
    rows = dict(csv.reader(io.StringIO(render_histogram(_hist([7])))))
    assert rows[">5"] == "1"


def test_volume_summary():
    s = [
        CollectionSummary("meebits", 1, Decimal("9.350e9"), Decimal("8.77e9")),
        CollectionSummary("clean", 1, Decimal(40), Decimal(0)),
        CollectionSummary("fixture", 1, Decimal(40), Decimal(10)),
    ]
    rows = list(csv.DictReader(io.StringIO(render_volume_summary(s))))
    assert abs(Decimal(rows[0]["legit_volume"]) - Decimal("0.58e9")) <= Decimal("0.01e9")
    assert Decimal(rows[1]["legit_volume"]) == 40
    assert Decimal(rows[2]["legit_volume"]) == 30
    for row, summ in zip(rows, s):
        assert Decimal(row["legit_volume"]) + Decimal(row["washed_volume"]) == summ.total_volume


def test_meebits_share_arithmetic():
    s = CollectionSummary("meebits", 1, Decimal("9.350e9"), Decimal("8.77e9"))
    assert f"{s.wash_share:.0%}" == "94%"


def test_reference_table_ratios():
    for r, printed in reference_table():
        assert abs(r.ratio - printed) <= 0.0005
        assert _text_ratio(r) == f"{printed:.3f}"


def _parse_dot(text):
    (g,) = pydot.graph_from_dot_data(text)
    return g


def test_dot_two_events_one_link():
    t = trace_of(5, [(a, b, 0), (b, c, 12)], "ape")
    ln = LinkabilityNetwork({(b, c): 2}, [a, b, c], 4)
    r = detect_wash_trades(t, ln)
    g = _parse_dot(export_token_dot(t, ln, r))
    edges = g.get_edges()
    assert len(edges) == 3
    assert sum(e.get("style") == "dotted" for e in edges) == 1
    trade = [e for e in edges if e.get("kind") == "trade"][0]
    assert trade.get("flagged") == "true"
    assert trade.get("label") == '"$12"'
    assert len(g.get_nodes()) == 3


def test_dot_link_threshold():
    t = trace_of(5, [(a, b, 12)])
    ln = LinkabilityNetwork({(a, b): 3}, [a, b], 4)
    r = detect_wash_trades(t, ln, DetectionConfig(max_link_hops=2))
    assert "kind=link" not in export_token_dot(t, ln, r)


def test_dot_empty_trace():
    t = trace_of(9, [])
    text = export_token_dot(t, LinkabilityNetwork({}, [], 4), rep(9, 0, 0, 0, 0))
    g = _parse_dot(text)
    assert g.get_edges() == [] and g.get_nodes() == []


def test_flagged_json_shape():
    doc = json.loads(render_flagged([WashReport(3, Decimal(1), Decimal(1), 1, 1, (2,))]))
    assert doc == {"wash_events": [{"token_id": 3, "seq": 2}]}
