"""Pairwise association measures and their prompt rendering.

The measure is picked from the kinds of the two attributes: Pearson's r for
two numerical columns, the correlation ratio (eta) for a categorical and a
numerical column, and Cramer's V (no bias correction) for two categorical
columns. Missing cells are dropped pairwise. Degenerate inputs (a constant
column, a single category) score 0 and are flagged rather than raising.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .dataset import AttributeKind, Dataset
from .errors import TooFewSamples


class Measure(str, enum.Enum):
    PEARSON_R = "pearson_r"
    CORRELATION_RATIO = "correlation_ratio"
    CRAMERS_V = "cramers_v"


class Level(str, enum.Enum):
    VERY_HIGH = "Very High"
    HIGH = "High"
    MODERATE = "Moderate"
    LOW = "Low"
    VERY_LOW = "Very Low"

    @classmethod
    def of(cls, value: float) -> "Level":
        v = abs(value)
        if v > 0.8:
            return cls.VERY_HIGH
        if v > 0.6:
            return cls.HIGH
        if v > 0.4:
            return cls.MODERATE
        if v > 0.2:
            return cls.LOW
        return cls.VERY_LOW


LEGEND = "(Levels: >0.8 Very High, >0.6 High, >0.4 Moderate, >0.2 Low, <=0.2 Very Low)"


@dataclass(frozen=True)
class AssociationScore:
    source: str
    target: str
    value: float
    measure: Measure
    degenerate: bool = False

    @property
    def level(self) -> Level:
        return Level.of(self.value)


@dataclass(frozen=True)
class AssociationVector:
    subject: str
    scores: tuple[AssociationScore, ...]

    def __len__(self):
        return len(self.scores)

    def get(self, target: str) -> AssociationScore:
        for s in self.scores:
            if s.target == target:
                return s
        raise KeyError(target)


def _pairs(x: Sequence, y: Sequence) -> tuple[list, list]:
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    kept = [(a, b) for a, b in zip(x, y) if a is not None and b is not None]
    if len(kept) < 2:
        raise TooFewSamples(f"need at least 2 complete pairs, have {len(kept)}")
    return [a for a, _ in kept], [b for _, b in kept]


def _pearson(x, y) -> tuple[float, bool]:
    xs, ys = _pairs(x, y)
    xa = np.asarray(xs, dtype=float)
    ya = np.asarray(ys, dtype=float)
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        return 0.0, True
    r = float(dx @ dy) / np.sqrt(sxx * syy)
    return float(np.clip(r, -1.0, 1.0)), False


def _eta(groups, values) -> tuple[float, bool]:
    gs, vs = _pairs(groups, values)
    y = np.asarray(vs, dtype=float)
    _, codes = np.unique(np.asarray(gs, dtype=object).astype(str), return_inverse=True)
    total = float(((y - y.mean()) ** 2).sum())
    if total == 0.0:
        return 0.0, True
    counts = np.bincount(codes)
    means = np.bincount(codes, weights=y) / counts
    between = float((counts * (means - y.mean()) ** 2).sum())
    return float(np.sqrt(min(between / total, 1.0))), False


def _cramers(a, b) -> tuple[float, bool]:
    xs, ys = _pairs(a, b)
    _, ia = np.unique(np.asarray(xs, dtype=object).astype(str), return_inverse=True)
    _, ib = np.unique(np.asarray(ys, dtype=object).astype(str), return_inverse=True)
    r, c = ia.max() + 1, ib.max() + 1
    if r < 2 or c < 2:
        return 0.0, True
    table = np.zeros((r, c))
    np.add.at(table, (ia, ib), 1.0)
    n = table.sum()
    expected = np.outer(table.sum(axis=1), table.sum(axis=0)) / n
    chi2 = float(((table - expected) ** 2 / expected).sum())
    v = np.sqrt(chi2 / (n * min(r - 1, c - 1)))
    return float(min(v, 1.0)), False


def pearson_r(x: Sequence[float | None], y: Sequence[float | None]) -> float:
    """Sample Pearson correlation; 0 when either side has zero variance."""
    return _pearson(x, y)[0]


def correlation_ratio(groups: Sequence[Hashable | None], values: Sequence[float | None]) -> float:
    """Correlation ratio eta of ``values`` grouped by ``groups``, in [0, 1]."""
    return _eta(groups, values)[0]


def cramers_v(a: Sequence[Hashable | None], b: Sequence[Hashable | None]) -> float:
    """Cramer's V of two categorical sequences, in [0, 1]."""
    return _cramers(a, b)[0]


def quantile_bins(values: np.ndarray, q: int) -> np.ndarray:
    """Interior edges of ``q`` equal-frequency bins (duplicates collapsed)."""
    edges = np.quantile(values, np.linspace(0.0, 1.0, q + 1))
    return np.unique(edges[1:-1])


def assign_bins(values: np.ndarray, interior: np.ndarray) -> np.ndarray:
    # right-closed bins: a value equal to an edge belongs to the lower bin
    return np.searchsorted(interior, values, side="left")


def measure_for(kind_a: AttributeKind, kind_b: AttributeKind) -> Measure:
    num_a = kind_a is AttributeKind.NUMERICAL
    num_b = kind_b is AttributeKind.NUMERICAL
    if num_a and num_b:
        return Measure.PEARSON_R
    if num_a or num_b:
        return Measure.CORRELATION_RATIO
    return Measure.CRAMERS_V


def pair_score(d: Dataset, source: str, target: str) -> AssociationScore:
    """Kind-dispatched association between two columns of ``d``."""
    ka, kb = d.schema.kind(source), d.schema.kind(target)
    xa, xb = d.column(source), d.column(target)
    measure = measure_for(ka, kb)
    try:
        if measure is Measure.PEARSON_R:
            value, degen = _pearson(xa, xb)
        elif measure is Measure.CORRELATION_RATIO:
            if ka is AttributeKind.CATEGORICAL:
                value, degen = _eta(xa, xb)
            else:
                value, degen = _eta(xb, xa)
        else:
            value, degen = _cramers(xa, xb)
    except TooFewSamples:
        value, degen = 0.0, True
    return AssociationScore(source, target, value, measure, degen)


def association_vector(d: Dataset, subject: str) -> AssociationVector:
    d.schema.index(subject)
    scores = tuple(pair_score(d, subject, t) for t in d.names if t != subject)
    return AssociationVector(subject, scores)


def score_text(v: AssociationVector) -> str:
    lines = [f"Association scores for '{v.subject}', scaled 0 to 1.", LEGEND]
    if v.scores:
        lines.append("")
    # stable sort keeps schema order among equal magnitudes
    for s in sorted(v.scores, key=lambda s: -abs(s.value)):
        lines.append(f"- {s.target}: {s.value:.2f} ({s.level.value})")
    return "\n".join(lines)
