from decimal import Decimal

import pytest

from washtrace.model import NftTrace, TraceEvent, make_trace


def addr(i: int) -> str:
    return "0x%040x" % i


def trace_of(token_id, moves, collection=""):
    """Build a trace from (src, dst, usd) tuples, one block per move."""
    events = [
        TraceEvent(token_id, 0, s, d, Decimal(str(v)), 100 + k, 0, 1_000 + k)
        for k, (s, d, v) in enumerate(moves)
    ]
    return make_trace(token_id, events, collection)


@pytest.fixture
def accounts():
    return [addr(i) for i in range(1, 11)]


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
