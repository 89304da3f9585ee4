import json

import pytest
from hypothesis import strategies as st

from structsynth.dataset import Attribute, AttributeKind, Dataset, Schema

NUM = AttributeKind.NUMERICAL
CAT = AttributeKind.CATEGORICAL


def make(columns, rows, label=None, task="none"):
    """Build a Dataset from ``[(name, kind), ...]`` and row tuples."""
    schema = Schema(tuple(Attribute(n, k) for n, k in columns), label, task)
    return Dataset(schema, tuple(tuple(r) for r in rows))


@st.composite
def datasets(draw, min_cols=2, max_cols=4, min_rows=0, max_rows=12, missing=True):
    k = draw(st.integers(min_cols, max_cols))
    kinds = draw(st.lists(st.sampled_from([NUM, CAT]), min_size=k, max_size=k))
    names = [f"c{i}" for i in range(k)]
    n = draw(st.integers(min_rows, max_rows))
    num = st.floats(-1e6, 1e6, allow_nan=False).map(lambda x: round(x, 3))
    cat = st.sampled_from(["a", "b", "c", "d e", "x,y", 'q"t'])
    rows = []
    for _ in range(n):
        row = []
        for kind in kinds:
            base = num if kind is NUM else cat
            row.append(draw(st.one_of(st.none(), base) if missing else base))
        rows.append(tuple(row))
    return make(list(zip(names, kinds)), rows)


@pytest.fixture
def write_json(tmp_path):
    def _write(name, obj):
        p = tmp_path / name
        p.write_text(json.dumps(obj), encoding="utf-8")
        return p
    return _write


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report_line():
    """Record one pass/fail line for the acceptance summary."""
    def _add(number, ok, detail):
        line = f"[{number}] {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return _add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
