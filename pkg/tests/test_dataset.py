import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from structsynth.dataset import (
    Schema,
    category_domains,
    format_number,
    load_csv,
    project,
    split,
    subsample,
    to_markdown,
    write_csv,
)
from structsynth.errors import (
    DataIOError,
    FormatError,
    InvalidFraction,
    NotEnoughRows,
    SchemaMismatch,
    UnknownColumn,
)

from conftest import CAT, NUM, datasets, make


def _csv(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_inference_numeric_and_categorical(tmp_path):
    d = load_csv(_csv(tmp_path, "a,b\n1,x\n2,y\n"))
    assert [(a.name, a.kind) for a in d.schema.attributes] == [("a", NUM), ("b", CAT)]
    assert d.rows == ((1.0, "x"), (2.0, "y"))


def test_one_non_numeric_cell_makes_column_categorical(tmp_path):
    d = load_csv(_csv(tmp_path, "a,b\n1,x\nfoo,y\n"))
    assert d.schema.kind("a") is CAT
    assert d.column("a") == ["1", "foo"]


def test_empty_cells_are_missing(tmp_path):
    d = load_csv(_csv(tmp_path, "a,b\n1,\n,y\n"))
    assert d.schema.kind("a") is NUM
    assert d.rows == ((1.0, None), (None, "y"))


def test_ragged_rows_rejected(tmp_path):
    with pytest.raises(FormatError):
        load_csv(_csv(tmp_path, "a,b\n1,2\n3\n"))


def test_duplicate_header_rejected(tmp_path):
    with pytest.raises(FormatError):
        load_csv(_csv(tmp_path, "a,a\n1,2\n"))


def test_missing_file_names_path(tmp_path):
    with pytest.raises(DataIOError, match="nope.csv"):
        load_csv(tmp_path / "nope.csv")


def test_hint_reorders_and_forces_kinds(tmp_path):
    hint = make([("b", CAT), ("a", CAT)], []).schema
    d = load_csv(_csv(tmp_path, "a,b\n1,x\n"), hint)
    assert d.names == ("b", "a")
    assert d.rows == (("x", "1"),)


def test_hint_column_absent_is_mismatch(tmp_path):
    hint = make([("a", NUM), ("zz", CAT)], []).schema
    with pytest.raises(SchemaMismatch, match="zz"):
        load_csv(_csv(tmp_path, "a,b\n1,x\n"), hint)


def test_hint_non_numeric_cell(tmp_path):
    hint = make([("a", NUM), ("b", CAT)], []).schema
    with pytest.raises(FormatError):
        load_csv(_csv(tmp_path, "a,b\nabc,x\n"), hint)


def test_schema_invariants():
    with pytest.raises(SchemaMismatch):
        make([("a", NUM), ("a", CAT)], [])
    with pytest.raises(SchemaMismatch):
        make([("a", NUM)], [])
    with pytest.raises(SchemaMismatch):
        make([("a", NUM), ("b", CAT)], [], label="c")


def test_cell_kind_checked():
    with pytest.raises(Exception):
        make([("a", NUM), ("b", CAT)], [("x", "y")])
    with pytest.raises(Exception):
        make([("a", NUM), ("b", CAT)], [(1.0,)])


def test_schema_json_round_trip(tmp_path):
    s = make([("a", NUM), ("b", CAT)], [], label="b", task="binary_classification").schema
    p = tmp_path / "s.json"
    import json
    p.write_text(json.dumps(s.to_json()))
    assert Schema.load(p) == s


def test_split_sizes_and_partition():
    d = make([("i", NUM), ("c", CAT)], [(float(i), "x") for i in range(10)])
    train, test = split(d, 0.2, 42)
    assert (len(train), len(test)) == (8, 2)
    assert sorted(train.rows + test.rows) == sorted(d.rows)
    assert not set(train.rows) & set(test.rows)
    assert split(d, 0.2, 42) == (train, test)


@pytest.mark.parametrize("frac", [0.0, 1.0, -0.1, 1.5])
def test_split_fraction_bounds(frac):
    d = make([("i", NUM), ("c", CAT)], [(1.0, "x"), (2.0, "y")])
    with pytest.raises(InvalidFraction):
        split(d, frac, 0)


def test_subsample():
    d = make([("i", NUM), ("c", CAT)], [(float(i), "x") for i in range(100)])
    full = subsample(d, 100, 3)
    assert sorted(full.rows) == sorted(d.rows)
    empty = subsample(d, 0, 3)
    assert len(empty) == 0 and empty.schema == d.schema
    with pytest.raises(NotEnoughRows):
        subsample(d, 101, 3)


def test_project():
    d = make([("a", NUM), ("b", CAT)], [(1.0, "x"), (2.0, "y")])
    assert project(d, ["a", "b"]) == d
    only_b = project(d, ["b"])
    assert only_b.names == ("b",) and only_b.rows == (("x",), ("y",))
    assert project(d, ["b", "a"]).rows == (("x", 1.0), ("y", 2.0))
    with pytest.raises(UnknownColumn):
        project(d, ["z"])


def test_markdown():
    d = make([("a", NUM), ("b", CAT)], [(39.0, "x")])
    text = to_markdown(project(d, ["a"]))
    assert "| a |" in text and "| 39 |" in text
    lines = to_markdown(d.with_rows([])).splitlines()
    assert len(lines) == 2 and set(lines[1]) <= {"|", "-"}
    five = d.with_rows([(float(i), "x") for i in range(5)])
    assert len(to_markdown(five, max_rows=3).splitlines()) == 2 + 3


def test_markdown_missing_and_shortest_number():
    d = make([("a", NUM), ("b", CAT)], [(None, "x"), (0.1, None)])
    lines = to_markdown(d).splitlines()
    assert lines[2] == "|  | x |"
    assert lines[3] == "| 0.1 |  |"
    assert format_number(2.5) == "2.5" and format_number(-3.0) == "-3"


def test_category_domains():
    d = make([("a", NUM), ("b", CAT), ("c", CAT)], [(1.0, "x", None), (2.0, "y", None), (3.0, "x", None)])
    doms = category_domains(d)
    assert doms == {"b": frozenset({"x", "y"}), "c": frozenset()}


@settings(max_examples=60, deadline=None)
@given(datasets(min_rows=2), st.floats(0.05, 0.95), st.integers(0, 2**31))
def test_split_union_is_input_multiset(d, frac, seed):
    train, test = split(d, frac, seed)
    key = lambda r: tuple((c is None, str(c)) for c in r)
    assert sorted(train.rows + test.rows, key=key) == sorted(d.rows, key=key)


@settings(max_examples=60, deadline=None)
@given(datasets(), st.integers(0, 20))
def test_markdown_row_count(d, m):
    assert len(to_markdown(d, m).splitlines()) - 2 == min(len(d), m)
    assert project(d, d.names) == d


@settings(max_examples=80, deadline=None)
@given(datasets(min_rows=1))
def test_csv_round_trip(tmp_path_factory, d):
    path = tmp_path_factory.mktemp("rt") / "d.csv"
    write_csv(d, path)
    assert load_csv(path, d.schema) == d
