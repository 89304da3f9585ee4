"""Schema and value model for small mixed-type tables.

Cells are plain Python values: ``float`` under numerical attributes, ``str``
under categorical attributes and ``None`` for a missing cell. Datasets are
frozen; every operation returns a new object.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import (
    DataIOError,
    FormatError,
    InvalidFraction,
    NotEnoughRows,
    SchemaMismatch,
    UnknownColumn,
)

Cell = Union[float, str, None]
Row = tuple

_DECIMAL = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


class AttributeKind(str, enum.Enum):
    NUMERICAL = "numerical"
    CATEGORICAL = "categorical"


class Task(str, enum.Enum):
    BINARY = "binary_classification"
    MULTICLASS = "multi_classification"
    REGRESSION = "regression"
    NONE = "none"

    @property
    def is_classification(self) -> bool:
        return self in (Task.BINARY, Task.MULTICLASS)


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: AttributeKind


@dataclass(frozen=True)
class Schema:
    attributes: tuple[Attribute, ...]
    label: str | None = None
    task: Task = Task.NONE

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        object.__setattr__(self, "task", Task(self.task))
        names = [a.name for a in self.attributes]
        if any(not n for n in names):
            raise SchemaMismatch("attribute names must be non-empty")
        if len(set(names)) != len(names):
            raise SchemaMismatch(f"duplicate attribute names in {names}")
        if len(names) < 2:
            raise SchemaMismatch("a schema needs at least two attributes")
        if self.label is not None and self.label not in names:
            raise SchemaMismatch(f"label {self.label!r} is not an attribute")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    def kind(self, name: str) -> AttributeKind:
        for a in self.attributes:
            if a.name == name:
                return a.kind
        raise UnknownColumn(f"unknown column {name!r}")

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownColumn(f"unknown column {name!r}") from None

    def is_numerical(self, name: str) -> bool:
        return self.kind(name) is AttributeKind.NUMERICAL

    def restrict(self, columns: Sequence[str]) -> "Schema":
        """Schema over ``columns`` in the given order; used by projections.

        Single-column projections are legal here even though a user-facing
        schema needs two attributes, so the K >= 2 check is bypassed.
        """
        attrs = tuple(Attribute(c, self.kind(c)) for c in columns)
        label = self.label if self.label in columns else None
        obj = object.__new__(Schema)
        object.__setattr__(obj, "attributes", attrs)
        object.__setattr__(obj, "label", label)
        object.__setattr__(obj, "task", self.task if label else Task.NONE)
        return obj

    def to_json(self) -> dict:
        return {
            "attributes": [{"name": a.name, "kind": a.kind.value} for a in self.attributes],
            "label": self.label,
            "task": self.task.value,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "Schema":
        try:
            attrs = tuple(
                Attribute(a["name"], AttributeKind(a["kind"].lower())) for a in obj["attributes"]
            )
        except (KeyError, ValueError, AttributeError, TypeError) as exc:
            raise SchemaMismatch(f"malformed schema description: {exc}") from exc
        task = obj.get("task") or "none"
        return cls(attrs, obj.get("label"), Task(task))

    @classmethod
    def load(cls, path: str | Path) -> "Schema":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_json(json.load(fh))
        except OSError as exc:
            raise DataIOError(f"cannot read schema file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise FormatError(f"schema file {path} is not valid JSON: {exc}") from exc


@dataclass(frozen=True)
class Dataset:
    schema: Schema
    rows: tuple[Row, ...] = field(default_factory=tuple)

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.rows)
        kinds = [a.kind for a in self.schema.attributes]
        k = len(kinds)
        for i, row in enumerate(rows):
            if len(row) != k:
                raise SchemaMismatch(f"row {i} has {len(row)} cells, schema has {k}")
            for cell, kind, name in zip(row, kinds, self.schema.names):
                if cell is None:
                    continue
                if kind is AttributeKind.NUMERICAL:
                    if isinstance(cell, str) or not math.isfinite(cell):
                        raise SchemaMismatch(f"row {i}: {name!r} needs a finite number, got {cell!r}")
                elif not isinstance(cell, str):
                    raise SchemaMismatch(f"row {i}: {name!r} needs a category, got {cell!r}")
        rows = tuple(
            tuple(float(c) if (c is not None and kd is AttributeKind.NUMERICAL) else c
                  for c, kd in zip(r, kinds))
            for r in rows
        )
        object.__setattr__(self, "rows", rows)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def names(self) -> tuple[str, ...]:
        return self.schema.names

    def column(self, name: str) -> list[Cell]:
        j = self.schema.index(name)
        return [r[j] for r in self.rows]

    def records(self) -> list[dict[str, Cell]]:
        names = self.names
        return [dict(zip(names, r)) for r in self.rows]

    @classmethod
    def from_records(cls, schema: Schema, records: Iterable[Mapping[str, Cell]]) -> "Dataset":
        return cls(schema, tuple(tuple(rec[n] for n in schema.names) for rec in records))

    def with_rows(self, rows: Iterable[Row]) -> "Dataset":
        return Dataset(self.schema, tuple(rows))

    def concat(self, other: "Dataset") -> "Dataset":
        if other.schema.names != self.schema.names:
            raise SchemaMismatch("cannot concatenate datasets with different columns")
        return Dataset(self.schema, self.rows + other.rows)


def format_number(x: float) -> str:
    """Shortest text that parses back to exactly ``x`` (integers without '.0')."""
    if x == int(x) and abs(x) < 1e17:
        return str(int(x))
    return repr(float(x))


def format_cell(cell: Cell) -> str:
    if cell is None:
        return ""
    if isinstance(cell, str):
        return cell
    return format_number(cell)


def parse_number(text: str) -> float | None:
    """Parse a plain decimal literal; returns None for anything else."""
    text = text.strip()
    if not _DECIMAL.match(text):
        return None
    value = float(text)
    return value if math.isfinite(value) else None


def load_csv(path: str | Path, schema_hint: Schema | None = None) -> Dataset:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            records = list(csv.reader(fh))
    except OSError as exc:
        raise DataIOError(f"cannot read {path}: {exc}") from exc
    if not records:
        raise FormatError(f"{path}: missing header row")
    header, body = records[0], records[1:]
    if len(set(header)) != len(header):
        raise FormatError(f"{path}: duplicate header names")
    for i, rec in enumerate(body, start=2):
        if len(rec) != len(header):
            raise FormatError(f"{path}: line {i} has {len(rec)} fields, header has {len(header)}")

    if schema_hint is not None:
        missing = [n for n in schema_hint.names if n not in header]
        if missing:
            raise SchemaMismatch(f"{path}: column {missing[0]!r} missing from header")
        extra = [h for h in header if h not in schema_hint.names]
        if extra:
            raise SchemaMismatch(f"{path}: unexpected column {extra[0]!r}")
        schema = schema_hint
    else:
        attrs = []
        for j, name in enumerate(header):
            cells = [rec[j] for rec in body if rec[j] != ""]
            numeric = all(parse_number(c) is not None for c in cells)
            attrs.append(Attribute(name, AttributeKind.NUMERICAL if numeric else AttributeKind.CATEGORICAL))
        schema = Schema(tuple(attrs))

    order = [header.index(n) for n in schema.names]
    rows = []
    for i, rec in enumerate(body, start=2):
        row = []
        for j, attr in zip(order, schema.attributes):
            raw = rec[j]
            if raw == "":
                row.append(None)
            elif attr.kind is AttributeKind.NUMERICAL:
                value = parse_number(raw)
                if value is None:
                    raise FormatError(f"{path}: line {i}: {attr.name!r} value {raw!r} is not a number")
                row.append(value)
            else:
                row.append(raw)
        rows.append(tuple(row))
    return Dataset(schema, tuple(rows))


def write_csv(d: Dataset, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(d.names)
        for row in d.rows:
            writer.writerow([format_cell(c) for c in row])


def split(d: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Shuffle with ``seed`` and cut off ``round(test_fraction * n)`` test rows."""
    if not 0.0 < test_fraction < 1.0:
        raise InvalidFraction(f"test_fraction must lie in (0, 1), got {test_fraction}")
    if len(d) < 2:
        raise NotEnoughRows("splitting needs at least two rows")
    perm = np.random.default_rng(seed).permutation(len(d))
    n_test = int(math.floor(test_fraction * len(d) + 0.5))
    test_idx, train_idx = perm[:n_test], perm[n_test:]
    return (d.with_rows(d.rows[i] for i in train_idx),
            d.with_rows(d.rows[i] for i in test_idx))


def subsample(d: Dataset, n: int = 100, seed: int = 0) -> Dataset:
    if n > len(d):
        raise NotEnoughRows(f"asked for {n} rows, dataset has {len(d)}")
    if n < 0:
        raise NotEnoughRows("n must be non-negative")
    perm = np.random.default_rng(seed).permutation(len(d))
    return d.with_rows(d.rows[i] for i in perm[:n])


def few_shot_sample(train: Dataset, k: int = 10, seed: int = 0) -> Dataset:
    """In-context exemplars: the first ``k`` rows of the seeded shuffle of ``train``."""
    return subsample(train, k, seed)


def project(d: Dataset, columns: Sequence[str]) -> Dataset:
    columns = list(columns)
    idx = [d.schema.index(c) for c in columns]
    if columns == list(d.names):
        return d
    schema = d.schema.restrict(columns)
    return Dataset(schema, tuple(tuple(r[j] for j in idx) for r in d.rows))


def to_markdown(d: Dataset, max_rows: int | None = None) -> str:
    rows = d.rows if max_rows is None else d.rows[:max_rows]
    lines = ["| " + " | ".join(d.names) + " |",
             "|" + "|".join("-" * (len(n) + 2) for n in d.names) + "|"]
    for row in rows:
        lines.append("| " + " | ".join(format_cell(c) for c in row) + " |")
    return "\n".join(lines)


def category_domains(d: Dataset) -> dict[str, frozenset[str]]:
    out = {}
    for j, attr in enumerate(d.schema.attributes):
        if attr.kind is AttributeKind.CATEGORICAL:
            out[attr.name] = frozenset(r[j] for r in d.rows if r[j] is not None)
    return out
