"""Extract structured payloads from free-form completion text."""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from ..dataset import AttributeKind, Cell, Schema, parse_number
from ..errors import Unparseable, WrongColumns

_FENCE = re.compile(r"```(?:json|JSON)?\s*\n?(.*?)```", re.DOTALL)
_THOUSANDS = re.compile(r"[+-]?\d{1,3}(,\d{3})+(\.\d*)?")
_SEPARATOR = re.compile(r"^\|?\s*:?-{2,}:?\s*(\|\s*:?-{2,}:?\s*)*\|?$")


@dataclass(frozen=True)
class SuccessorProposal:
    successor: str
    rationale: str


class Rejection(str, enum.Enum):
    ARITY = "arity"
    MISSING_VALUE = "missing_value"
    BAD_NUMBER = "bad_number"
    DOMAIN_VIOLATION = "domain_violation"


@dataclass
class ParsedTable:
    """Accepted rows keep their 0-based position in the emitted table."""

    columns: list[str]
    rows: list[dict[str, Cell]] = field(default_factory=list)
    positions: list[int] = field(default_factory=list)
    rejected: list[tuple[int, Rejection, str]] = field(default_factory=list)

    @property
    def n_emitted(self) -> int:
        return len(self.rows) + len(self.rejected)


def extract_json(text: str, want: type | tuple[type, ...] = (list, dict)) -> Any:
    """Return the first well-formed JSON value of type ``want`` in ``text``."""
    candidates = [m.group(1) for m in _FENCE.finditer(text)] + [text]
    decoder = json.JSONDecoder()
    for chunk in candidates:
        for i, ch in enumerate(chunk):
            if ch not in "[{":
                continue
            try:
                value, _ = decoder.raw_decode(chunk, i)
            except json.JSONDecodeError:
                continue
            if isinstance(value, want):
                return value
    raise Unparseable("no JSON payload found in response")


def parse_source_response(text: str) -> list[str]:
    value = extract_json(text, (list, dict))
    if isinstance(value, dict):
        for key in ("source_nodes", "sources", "nodes"):
            if isinstance(value.get(key), list):
                value = value[key]
                break
        else:
            raise Unparseable("JSON object does not hold a list of source nodes")
    names = []
    for item in value:
        if isinstance(item, str) and item.strip() and item.strip() not in names:
            names.append(item.strip())
    return names


def parse_generate_response(text: str) -> list[SuccessorProposal]:
    value = extract_json(text, (list, dict))
    if isinstance(value, dict):
        inner = value.get("successors", value.get("edges"))
        if not isinstance(inner, list):
            raise Unparseable("JSON object does not hold a list of successors")
        value = inner
    out = []
    for item in value:
        if not isinstance(item, dict):
            continue
        succ = item.get("successor", item.get("to"))
        if not isinstance(succ, str) or not succ.strip():
            continue
        rationale = item.get("rationale", "")
        out.append(SuccessorProposal(succ.strip(), str(rationale).strip()))
    return out


def parse_resolve_response(text: str) -> tuple[str, str]:
    value = extract_json(text, dict)
    src, dst = value.get("from"), value.get("to")
    if not isinstance(src, str) or not isinstance(dst, str):
        raise Unparseable('resolve answer needs string "from" and "to" fields')
    return src.strip(), dst.strip()


def _split_row(line: str) -> list[str]:
    line = line.strip()
    if line.startswith("|"):
        line = line[1:]
    if line.endswith("|"):
        line = line[:-1]
    return [c.strip() for c in line.split("|")]


def _first_table(text: str) -> tuple[list[str], list[list[str]]]:
    lines = text.splitlines()
    for i in range(len(lines) - 1):
        if "|" in lines[i] and _SEPARATOR.match(lines[i + 1].strip()):
            header = _split_row(lines[i])
            body = []
            for line in lines[i + 2:]:
                if "|" not in line or not line.strip():
                    break
                body.append(_split_row(line))
            return header, body
    raise Unparseable("no markdown table found in response")


def parse_table_response(text: str, expected_columns: Sequence[str], schema: Schema,
                         domains: Mapping[str, frozenset[str]]) -> ParsedTable:
    """Parse the first markdown table, keeping only schema- and domain-valid rows.

    Header names match case-insensitively; categorical values are matched
    case-insensitively against ``domains`` and rewritten to the training
    spelling.
    """
    header, body = _first_table(text)
    expected = list(expected_columns)
    canon = {c.casefold(): c for c in expected}
    mapped = [canon.get(h.casefold()) for h in header]
    if None in mapped or sorted(mapped) != sorted(expected):
        raise WrongColumns(f"table header {header} does not match expected columns {expected}")

    lookup = {name: {v.strip().casefold(): v for v in values} for name, values in domains.items()}
    result = ParsedTable(columns=expected)
    for pos, cells in enumerate(body):
        if len(cells) != len(mapped):
            result.rejected.append((pos, Rejection.ARITY, f"{len(cells)} cells"))
            continue
        rec: dict[str, Cell] = {}
        problem = None
        for name, raw in zip(mapped, cells):
            if raw == "":
                problem = (Rejection.MISSING_VALUE, name)
                break
            if schema.kind(name) is AttributeKind.NUMERICAL:
                if _THOUSANDS.fullmatch(raw):
                    raw = raw.replace(",", "")
                value = parse_number(raw)
                if value is None:
                    problem = (Rejection.BAD_NUMBER, f"{name}={raw!r}")
                    break
                rec[name] = value
            else:
                hit = lookup.get(name, {}).get(raw.strip().casefold())
                if hit is None:
                    problem = (Rejection.DOMAIN_VIOLATION, f"{name}={raw!r}")
                    break
                rec[name] = hit
        if problem:
            result.rejected.append((pos, problem[0], problem[1]))
        else:
            result.rows.append({c: rec[c] for c in expected})
            result.positions.append(pos)
    return result
