"""Downstream utility, nearest-neighbour privacy risk and pairwise fidelity."""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .association import _pearson, assign_bins, quantile_bins
from .dataset import AttributeKind, Cell, Dataset, Schema, Task, format_cell
from .errors import (
    ConstantTarget,
    EmptyInput,
    NoLabel,
    NotNormalized,
    SchemaMismatch,
    SingleClass,
    TooFewSamples,
)

TIE_TOL = 1e-12


def _check_same_schema(*datasets: Dataset) -> None:
    first = datasets[0].schema
    for d in datasets[1:]:
        if d.schema.attributes != first.attributes:
            a, b = set(first.names), set(d.schema.names)
            odd = sorted(a ^ b) or [x.name for x, y in zip(first.attributes, d.schema.attributes) if x != y]
            raise SchemaMismatch(f"schemas differ at column {odd[0]!r}" if odd else "schemas differ")


# -- privacy ------------------------------------------------------------------

def mixed_distance(a: Sequence[Cell], b: Sequence[Cell], schema: Schema,
                   scaling: Mapping[str, float] | None = None) -> float:
    """L1 over (scaled) numerical cells plus a mismatch count over categorical cells.

    A missing cell against a present one contributes 1; two missing cells 0.
    """
    if len(a) != len(schema.attributes) or len(b) != len(schema.attributes):
        raise SchemaMismatch("rows do not match the schema width")
    total = 0.0
    for x, y, attr in zip(a, b, schema.attributes):
        if x is None or y is None:
            total += 0.0 if x is y else 1.0
        elif attr.kind is AttributeKind.NUMERICAL:
            scale = (scaling or {}).get(attr.name, 1.0) or 1.0
            total += abs(x - y) / scale
        else:
            total += float(x != y)
    return total


def numeric_ranges(d: Dataset) -> dict[str, float]:
    out = {}
    for attr in d.schema.attributes:
        if attr.kind is AttributeKind.NUMERICAL:
            vals = [v for v in d.column(attr.name) if v is not None]
            rng = (max(vals) - min(vals)) if vals else 0.0
            out[attr.name] = rng if rng > 0 else 1.0
    return out


def _distance_matrix(queries: Dataset, refs: Dataset, scaling: Mapping[str, float]) -> np.ndarray:
    dist = np.zeros((len(queries), len(refs)))
    for attr in queries.schema.attributes:
        qa, ra = queries.column(attr.name), refs.column(attr.name)
        q_miss = np.array([v is None for v in qa])
        r_miss = np.array([v is None for v in ra])
        if attr.kind is AttributeKind.NUMERICAL:
            qv = np.array([0.0 if v is None else v for v in qa])
            rv = np.array([0.0 if v is None else v for v in ra])
            part = np.abs(qv[:, None] - rv[None, :]) / (scaling.get(attr.name, 1.0) or 1.0)
        else:
            codes = {v: i for i, v in enumerate(sorted({v for v in qa + ra if v is not None}))}
            qc = np.array([codes.get(v, -1) for v in qa])
            rc = np.array([codes.get(v, -1) for v in ra])
            part = (qc[:, None] != rc[None, :]).astype(float)
        one_missing = q_miss[:, None] ^ r_miss[None, :]
        both_missing = q_miss[:, None] & r_miss[None, :]
        dist += np.where(one_missing, 1.0, np.where(both_missing, 0.0, part))
    return dist


def balance(train: Dataset, test: Dataset, seed: int) -> tuple[Dataset, Dataset]:
    """Downsample the larger of the two sets to the size of the smaller."""
    rng = np.random.default_rng(seed)
    if len(train) > len(test):
        keep = np.sort(rng.choice(len(train), size=len(test), replace=False))
        return train.with_rows(train.rows[i] for i in keep), test
    if len(test) > len(train):
        keep = np.sort(rng.choice(len(test), size=len(train), replace=False))
        return train, test.with_rows(test.rows[i] for i in keep)
    return train, test


def privacy_risk(synth: Dataset, train: Dataset, test: Dataset, seed: int = 0,
                 raw_distance: bool = False) -> float:
    """Share of synthetic rows whose nearest real neighbour comes from ``train``.

    Ties between a train and a test neighbour count as test.
    """
    _check_same_schema(train, test, synth)
    if len(train) == 0 or len(test) == 0 or len(synth) == 0:
        raise EmptyInput("privacy risk needs non-empty synthetic, train and test sets")
    train_b, test_b = balance(train, test, seed)
    real = train_b.concat(test_b)
    scaling = {} if raw_distance else numeric_ranges(real)
    n_train = len(train_b)
    hits = 0
    for start in range(0, len(synth), 512):
        chunk = synth.with_rows(synth.rows[start:start + 512])
        dist = _distance_matrix(chunk, real, scaling)
        nearest = dist.min(axis=1, keepdims=True)
        tied = dist <= nearest + TIE_TOL
        hits += int((~tied[:, n_train:].any(axis=1)).sum())
    return hits / len(synth)


# -- fidelity -----------------------------------------------------------------

def _as_table(p) -> dict:
    if isinstance(p, Mapping):
        return {k: float(v) for k, v in p.items()}
    arr = np.asarray(p, dtype=float)
    return {idx: float(v) for idx, v in np.ndenumerate(arr)}


def tvd(p, q, tol: float = 1e-9) -> float:
    """Half the L1 distance between two joint distributions over the union of their cells.

    Accepts mappings from cell key to probability, or equally-shaped arrays.
    """
    pt, qt = _as_table(p), _as_table(q)
    for name, t in (("p", pt), ("q", qt)):
        if abs(sum(t.values()) - 1.0) > tol:
            raise NotNormalized(f"{name} sums to {sum(t.values())!r}")
    keys = set(pt) | set(qt)
    return 0.5 * sum(abs(pt.get(k, 0.0) - qt.get(k, 0.0)) for k in keys)


def joint_distribution(u: Sequence, v: Sequence) -> dict:
    pairs = [(a, b) for a, b in zip(u, v) if a is not None and b is not None]
    if not pairs:
        return {}
    out: dict = {}
    for pair in pairs:
        out[pair] = out.get(pair, 0.0) + 1.0
    n = len(pairs)
    return {k: c / n for k, c in out.items()}


@dataclass(frozen=True)
class PairDelta:
    col_i: str
    col_j: str
    delta: float
    degenerate: bool = False


def _binned(values: Sequence, interior: np.ndarray) -> list:
    present = [v for v in values if v is not None]
    bins = iter(assign_bins(np.asarray(present, dtype=float), interior).tolist())
    return [None if v is None else next(bins) for v in values]


def _constant(values: Sequence) -> bool:
    return len({v for v in values if v is not None}) <= 1


def _tvd_or_extreme(p: dict, q: dict) -> float:
    if not p and not q:
        return 0.0
    if not p or not q:
        return 1.0
    return tvd(p, q)


def _pair_delta(col_i: str, col_j: str, real: Dataset, synth: Dataset, q: int) -> PairDelta:
    ki, kj = real.schema.kind(col_i), real.schema.kind(col_j)
    ri, rj = real.column(col_i), real.column(col_j)
    si, sj = synth.column(col_i), synth.column(col_j)
    degenerate = any(_constant(c) for c in (ri, rj, si, sj))
    num_i, num_j = ki is AttributeKind.NUMERICAL, kj is AttributeKind.NUMERICAL
    if num_i and num_j:
        rho = []
        for x, y in ((ri, rj), (si, sj)):
            try:
                r, degen = _pearson(x, y)
            except TooFewSamples:
                r, degen = 0.0, True
            rho.append(r)
            degenerate |= degen
        return PairDelta(col_i, col_j, abs(rho[0] - rho[1]), degenerate)
    if num_i or num_j:
        if num_j:
            ri, rj, si, sj = rj, ri, sj, si
        observed = np.array([v for v in ri if v is not None], dtype=float)
        interior = quantile_bins(observed, q) if observed.size else np.array([])
        ri, si = _binned(ri, interior), _binned(si, interior)
        p, r = joint_distribution(ri, rj), joint_distribution(si, sj)
    else:
        p, r = joint_distribution(ri, rj), joint_distribution(si, sj)
    return PairDelta(col_i, col_j, _tvd_or_extreme(p, r), degenerate)


def pair_delta(col_i: str, col_j: str, real: Dataset, synth: Dataset, q: int = 10) -> float:
    """Kind-dispatched difference of one column pair between real and synthetic data.

    Numerical pairs compare Pearson correlations; mixed pairs bin the numerical
    column into ``q`` quantiles of the real data and compare joint tables by
    TVD, as do categorical pairs.
    """
    return _pair_delta(col_i, col_j, real, synth, q).delta


@dataclass(frozen=True)
class FidelityResult:
    score: float
    pairs: tuple[PairDelta, ...]


def statistical_fidelity(real: Dataset, synth: Dataset, q: int = 10) -> FidelityResult:
    _check_same_schema(real, synth)
    if len(synth) == 0 or len(real) == 0:
        raise EmptyInput("fidelity needs non-empty real and synthetic data")
    pairs = tuple(_pair_delta(a, b, real, synth, q) for a, b in itertools.combinations(real.names, 2))
    return FidelityResult(float(np.mean([p.delta for p in pairs])), pairs)


# -- downstream utility -------------------------------------------------------

def auc(scores: Sequence[float], labels: Sequence[int | bool]) -> float:
    """Rank-based (Mann-Whitney) ROC AUC; tied scores count one half."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels).astype(bool)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("AUC needs both positive and negative labels")
    ranks = rankdata(s)
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def r_squared(pred: Sequence[float], target: Sequence[float]) -> float:
    p = np.asarray(pred, dtype=float)
    t = np.asarray(target, dtype=float)
    if len(p) != len(t) or len(t) < 2:
        raise ValueError("r_squared needs two equal-length sequences of at least two values")
    ss_tot = float(((t - t.mean()) ** 2).sum())
    if ss_tot == 0.0:
        raise ConstantTarget("target is constant")
    return 1.0 - float(((t - p) ** 2).sum()) / ss_tot


@dataclass
class FeatureEncoder:
    """Standardizes numericals (missing -> mean) and one-hot encodes categoricals."""

    schema: Schema
    columns: list[str]
    means: dict[str, float] = field(default_factory=dict)
    stds: dict[str, float] = field(default_factory=dict)
    categories: dict[str, list[str]] = field(default_factory=dict)

    @classmethod
    def fit(cls, d: Dataset, columns: Sequence[str]) -> "FeatureEncoder":
        enc = cls(d.schema, list(columns))
        for c in enc.columns:
            vals = [v for v in d.column(c) if v is not None]
            if d.schema.is_numerical(c):
                arr = np.asarray(vals, dtype=float)
                enc.means[c] = float(arr.mean()) if arr.size else 0.0
                sd = float(arr.std()) if arr.size else 0.0
                enc.stds[c] = sd if sd > 0 else 1.0
            else:
                enc.categories[c] = sorted(set(vals))
        return enc

    def transform(self, d: Dataset) -> np.ndarray:
        blocks = []
        for c in self.columns:
            col = d.column(c)
            if c in self.means:
                x = np.array([self.means[c] if v is None else v for v in col], dtype=float)
                blocks.append(((x - self.means[c]) / self.stds[c])[:, None])
            else:
                cats = self.categories[c]
                index = {v: i for i, v in enumerate(cats)}
                m = np.zeros((len(col), len(cats)))
                for r, v in enumerate(col):
                    if v in index:
                        m[r, index[v]] = 1.0
                blocks.append(m)
        if not blocks:
            return np.zeros((len(d), 0))
        return np.hstack(blocks)


@dataclass
class DownstreamModel:
    """Linear model fit by fixed-length full-batch gradient descent from zero.

    Classification uses one logistic unit per class (one-vs-rest; a single unit
    for binary tasks), regression a least-squares unit on the standardized
    target.
    """

    task: Task
    encoder: FeatureEncoder
    weights: np.ndarray
    bias: np.ndarray
    classes: list[str] = field(default_factory=list)
    y_mean: float = 0.0
    y_std: float = 1.0

    def decision(self, d: Dataset) -> np.ndarray:
        return self.encoder.transform(d) @ self.weights + self.bias

    def predict_proba(self, d: Dataset) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-self.decision(d)))

    def predict(self, d: Dataset) -> np.ndarray:
        if self.task.is_classification:
            z = self.decision(d)
            if z.shape[1] == 1:
                return np.where(z[:, 0] > 0, self.classes[1], self.classes[0])
            return np.asarray(self.classes)[z.argmax(axis=1)]
        return self.decision(d)[:, 0] * self.y_std + self.y_mean


GD_ITERATIONS = 2000
L2_PENALTY = 1e-4


def _label_key(v: Cell) -> str:
    return format_cell(v)


def _gradient_descent(x: np.ndarray, y: np.ndarray, logistic: bool,
                      iterations: int = GD_ITERATIONS, l2: float = L2_PENALTY) -> tuple[np.ndarray, np.ndarray]:
    n, d = x.shape
    xb = np.hstack([x, np.ones((n, 1))])
    curvature = float(np.linalg.eigvalsh(xb.T @ xb / n).max())
    if logistic:
        curvature *= 0.25
    lr = 1.0 / (curvature + l2)
    w = np.zeros((d + 1, y.shape[1]))
    penal = np.ones((d + 1, 1))
    penal[-1] = 0.0
    for _ in range(iterations):
        z = xb @ w
        out = 1.0 / (1.0 + np.exp(-z)) if logistic else z
        grad = xb.T @ (out - y) / n + l2 * penal * w
        w -= lr * grad
    return w[:-1], w[-1]


def train_downstream(train_aug: Dataset, task: Task | str | None = None) -> DownstreamModel:
    schema = train_aug.schema
    if schema.label is None:
        raise NoLabel("schema declares no label column")
    task = Task(task) if task is not None else schema.task
    if task is Task.NONE:
        task = Task.REGRESSION if schema.is_numerical(schema.label) else Task.BINARY
    data = train_aug.with_rows(r for r in train_aug.rows if r[schema.index(schema.label)] is not None)
    features = [n for n in schema.names if n != schema.label]
    encoder = FeatureEncoder.fit(data, features)
    x = encoder.transform(data)
    labels = data.column(schema.label)

    if task.is_classification:
        keys = [_label_key(v) for v in labels]
        classes = sorted(set(keys))
        if len(classes) < 2:
            raise SingleClass("training labels contain a single class")
        if len(classes) == 2:
            y = np.array([[k == classes[1]] for k in keys], dtype=float)
        else:
            y = np.array([[k == c for c in classes] for k in keys], dtype=float)
        w, b = _gradient_descent(x, y, logistic=True)
        return DownstreamModel(task, encoder, w, b, classes)

    t = np.asarray(labels, dtype=float)
    mean, sd = float(t.mean()), float(t.std()) or 1.0
    w, b = _gradient_descent(x, ((t - mean) / sd)[:, None], logistic=False)
    return DownstreamModel(task, encoder, w, b, y_mean=mean, y_std=sd)


def score_model(model: DownstreamModel, test: Dataset) -> float:
    """Macro one-vs-rest AUC for classification, R^2 for regression."""
    label = test.schema.label
    test = test.with_rows(r for r in test.rows if r[test.schema.index(label)] is not None)
    if not model.task.is_classification:
        return r_squared(model.predict(test), test.column(label))
    keys = [_label_key(v) for v in test.column(label)]
    probs = model.predict_proba(test)
    if probs.shape[1] == 1:
        return auc(probs[:, 0], [k == model.classes[1] for k in keys])
    aucs = []
    for j, c in enumerate(model.classes):
        y = [k == c for k in keys]
        if 0 < sum(y) < len(y):
            aucs.append(auc(probs[:, j], y))
    if not aucs:
        raise SingleClass("test labels contain a single class")
    return float(np.mean(aucs))


def downstream_utility(train: Dataset, synth: Dataset, test: Dataset, task: Task | str | None = None) -> float:
    _check_same_schema(train, synth, test)
    model = train_downstream(train.concat(synth), task)
    return score_model(model, test)


# -- report -------------------------------------------------------------------

@dataclass
class EvaluationReport:
    privacy_risk: float
    fidelity: float
    pair_breakdown: list[PairDelta]
    downstream: dict | None = None
    config: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "downstream": self.downstream,
            "privacy_risk": self.privacy_risk,
            "fidelity": self.fidelity,
            "pair_breakdown": [asdict(p) for p in self.pair_breakdown],
            "config": self.config,
        }

    def table(self) -> str:
        lines = [f"{'metric':<16}{'value':>10}"]
        if self.downstream:
            lines.append(f"{self.downstream['metric']:<16}{self.downstream['value']:>10.4f}")
        lines.append(f"{'privacy_risk':<16}{self.privacy_risk:>10.4f}")
        lines.append(f"{'fidelity':<16}{self.fidelity:>10.4f}")
        return "\n".join(lines)


def evaluate(train: Dataset, test: Dataset, synth: Dataset, q: int = 10, raw_distance: bool = False,
             seed: int = 0, task: Task | str | None = None) -> EvaluationReport:
    """All three metrics; fidelity compares ``synth`` against ``train``."""
    _check_same_schema(train, test, synth)
    fid = statistical_fidelity(train, synth, q)
    report = EvaluationReport(
        privacy_risk=privacy_risk(synth, train, test, seed, raw_distance),
        fidelity=fid.score,
        pair_breakdown=list(fid.pairs),
        config={"q": q, "raw_distance": raw_distance, "seed": seed},
    )
    if train.schema.label is not None:
        model_task = Task(task) if task is not None else train.schema.task
        value = downstream_utility(train, synth, test, model_task if model_task is not Task.NONE else None)
        is_reg = (model_task is Task.REGRESSION
                  or (model_task is Task.NONE and train.schema.is_numerical(train.schema.label)))
        report.downstream = {"metric": "R2" if is_reg else "AUC", "value": value}
    return report
