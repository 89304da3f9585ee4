"""Structure-guided row generation and the ablation generators."""

from __future__ import annotations

import enum
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .association import assign_bins, quantile_bins
from .dataset import AttributeKind, Cell, Dataset, Row, category_domains, few_shot_sample, project
from .depgraph import DependencyGraph, is_acyclic, parents, subgraph, topological_layers
from .errors import CyclicInput, GenerationStalled, MissingAttribute, OverlappingAttribute, Unparseable
from .llm import (
    Backend,
    Exchange,
    ParsedTable,
    ask,
    parse_table_response,
    render_data_gen_iso_prompt,
    render_data_gen_prompt,
)

log = logging.getLogger(__name__)


class Ablation(str, enum.Enum):
    FULL = "full"
    NO_TOPOLOGICAL_ORDER = "no_topological_order"
    NO_STRUCTURE = "no_structure"
    BAYESIAN = "bayesian"


@dataclass(frozen=True)
class SynthConfig:
    s: int = 1000
    batch: int = 20
    ablation: Ablation = Ablation.FULL
    seed: int = 0
    max_row_retries: int = 3
    few_shot_k: int = 10
    # a batch keeping fewer than this fraction of requested rows counts as failed
    min_yield: float = 0.05
    q_bins: int = 10
    smoothing: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "ablation", Ablation(self.ablation))
        if self.s < 0 or self.batch < 1:
            raise ValueError("need s >= 0 and batch >= 1")


@dataclass
class SynthStats:
    requested: int
    generated: int = 0
    rejected_by_reason: Counter = field(default_factory=Counter)
    llm_calls: int = 0
    batches: int = 0

    def to_json(self) -> dict:
        return {
            "requested": self.requested,
            "generated": self.generated,
            "rejected_by_reason": dict(sorted(self.rejected_by_reason.items())),
            "llm_calls": self.llm_calls,
            "batches": self.batches,
        }


@dataclass
class SynthResult:
    data: Dataset
    stats: SynthStats
    transcript: list[Exchange]


@dataclass(frozen=True)
class _Step:
    columns: list[str]
    graph: DependencyGraph | None
    examples: Dataset
    subject: str


def assemble_row(graph_part: Mapping[str, Cell], iso_part: Mapping[str, Cell], names: Sequence[str]) -> Row:
    overlap = set(graph_part) & set(iso_part)
    if overlap:
        raise OverlappingAttribute(f"attribute(s) generated twice: {sorted(overlap)}")
    merged = {**graph_part, **iso_part}
    missing = [n for n in names if n not in merged]
    if missing:
        raise MissingAttribute(f"attribute(s) never generated: {missing}")
    extra = set(merged) - set(names)
    if extra:
        raise OverlappingAttribute(f"attribute(s) outside the schema: {sorted(extra)}")
    return tuple(merged[n] for n in names)


def _in_schema_order(names: Sequence[str], subset) -> list[str]:
    subset = set(subset)
    return [n for n in names if n in subset]


def _plan(train: Dataset, g: DependencyGraph, few_shot: Dataset, mode: Ablation) -> tuple[list[_Step], list[str]]:
    names = train.names
    graph_nodes = _in_schema_order(names, g.nodes)
    if mode is Ablation.NO_STRUCTURE or not graph_nodes:
        return [], list(names)
    iso = [n for n in names if n not in g.nodes]
    if mode is Ablation.NO_TOPOLOGICAL_ORDER:
        return [_Step(graph_nodes, g, project(few_shot, graph_nodes), "all")], iso
    steps = []
    for i, layer in enumerate(topological_layers(g), start=1):
        cols = _in_schema_order(names, layer)
        related = layer | parents(g, layer)
        steps.append(_Step(cols, subgraph(g, related), project(few_shot, _in_schema_order(names, related)), f"L{i}"))
    return steps, iso


def synthesize(train: Dataset, g: DependencyGraph, backend: Backend | None,
               cfg: SynthConfig = SynthConfig()) -> SynthResult:
    unknown = g.nodes - set(train.names)
    if unknown:
        raise MissingAttribute(f"graph nodes outside the schema: {sorted(unknown)}")
    if not is_acyclic(g.nodes, g.edges):
        raise CyclicInput("synthesis needs an acyclic graph")
    if cfg.ablation is Ablation.BAYESIAN:
        data = bayesian_sample(train, g, cfg.s, cfg.q_bins, cfg.smoothing, cfg.seed)
        return SynthResult(data, SynthStats(cfg.s, len(data)), [])
    if backend is None:
        raise ValueError(f"{cfg.ablation.value} synthesis needs a backend")

    few_shot = few_shot_sample(train, min(cfg.few_shot_k, len(train)), cfg.seed)
    domains = category_domains(train)
    steps, iso = _plan(train, g, few_shot, cfg.ablation)
    iso_examples = project(few_shot, iso) if iso else None

    stats = SynthStats(cfg.s)
    transcript: list[Exchange] = []
    rows: list[Row] = []
    failures = 0
    while len(rows) < cfg.s:
        want = min(cfg.batch, cfg.s - len(rows))
        got = _run_batch(train, steps, iso, iso_examples, want, backend, domains, stats, transcript)
        stats.batches += 1
        rows.extend(got[: cfg.s - len(rows)])
        if len(got) < max(1, math.ceil(cfg.min_yield * want)):
            failures += 1
            if failures > cfg.max_row_retries:
                stats.generated = len(rows)
                raise GenerationStalled(
                    f"{failures} consecutive batches below the yield floor; "
                    f"{len(rows)}/{cfg.s} rows generated", stats.to_json())
        else:
            failures = 0
    stats.generated = len(rows)
    return SynthResult(train.with_rows(rows), stats, transcript)


def _record_rejections(parsed: ParsedTable, limit: int, stats: SynthStats) -> None:
    for _, reason, _ in parsed.rejected:
        stats.rejected_by_reason[reason.value] += 1
    surplus = sum(1 for p in parsed.positions if p >= limit)
    if surplus:
        stats.rejected_by_reason["surplus"] += surplus
    short = limit - parsed.n_emitted
    if short > 0:
        stats.rejected_by_reason["not_returned"] += short


def _call_table(backend, prompt, columns, schema, domains, stats, transcript, limit) -> ParsedTable | None:
    stats.llm_calls += 1
    try:
        parsed = ask(backend, prompt, lambda t: parse_table_response(t, columns, schema, domains), transcript)
    except Unparseable as exc:
        log.info("batch step %s failed: %s", prompt.key, exc)
        stats.rejected_by_reason["unparseable"] += limit
        return None
    _record_rejections(parsed, limit, stats)
    return parsed


def _run_batch(train, steps, iso, iso_examples, want, backend, domains, stats, transcript) -> list[Row]:
    """One batch: layered calls (row k continues prefix row k), then the isolated call."""
    schema = train.schema
    prefix: list[dict[str, Cell]] = [{} for _ in range(want)]
    done_cols: list[str] = []
    for step in steps:
        prompt = render_data_gen_prompt(prefix, done_cols, step.graph, step.columns, step.examples,
                                        len(prefix), step.subject)
        parsed = _call_table(backend, prompt, step.columns, schema, domains, stats, transcript, len(prefix))
        if parsed is None:
            return []
        prefix = [{**prefix[p], **row} for row, p in zip(parsed.rows, parsed.positions) if p < len(prefix)]
        done_cols += step.columns
        if not prefix:
            return []
    if not iso:
        return [assemble_row(rec, {}, train.names) for rec in prefix]
    prompt = render_data_gen_iso_prompt(prefix, done_cols, iso, iso_examples, len(prefix), "iso")
    parsed = _call_table(backend, prompt, iso, schema, domains, stats, transcript, len(prefix))
    if parsed is None:
        return []
    return [assemble_row(prefix[p], row, train.names)
            for row, p in zip(parsed.rows, parsed.positions) if p < len(prefix)]


# -- Bayesian sampler ---------------------------------------------------------

@dataclass
class _Variable:
    name: str
    codes: np.ndarray            # per training row, -1 for missing
    n_states: int
    categories: list[str] | None = None
    bin_ranges: list[tuple[float, float]] | None = None

    def realize(self, state: int, rng: np.random.Generator) -> Cell:
        if self.categories is not None:
            return self.categories[state]
        lo, hi = self.bin_ranges[state]
        return float(lo) if lo == hi else float(rng.uniform(lo, hi))


def _encode(train: Dataset, name: str, q_bins: int) -> _Variable:
    col = train.column(name)
    present = np.array([c is not None for c in col], dtype=bool)
    codes = np.full(len(col), -1, dtype=int)
    if train.schema.kind(name) is AttributeKind.CATEGORICAL:
        cats = sorted({c for c in col if c is not None})
        index = {c: i for i, c in enumerate(cats)}
        for i, c in enumerate(col):
            if c is not None:
                codes[i] = index[c]
        return _Variable(name, codes, len(cats), categories=cats)
    values = np.array([c if c is not None else np.nan for c in col], dtype=float)
    if not present.any():
        return _Variable(name, codes, 0, bin_ranges=[])
    raw = assign_bins(values[present], quantile_bins(values[present], q_bins))
    used, dense = np.unique(raw, return_inverse=True)
    codes[present] = dense
    observed = values[present]
    ranges = [(observed[dense == k].min(), observed[dense == k].max()) for k in range(len(used))]
    return _Variable(name, codes, len(used), bin_ranges=ranges)


def _draw(probs: np.ndarray, rng: np.random.Generator) -> int:
    cdf = np.cumsum(probs)
    return int(min(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"), len(probs) - 1))


def bayesian_sample(train: Dataset, g: DependencyGraph, s: int, q_bins: int = 10,
                    smoothing: float = 1.0, seed: int = 0) -> Dataset:
    """Fit discrete conditional tables along ``g`` and sample ancestrally.

    Numerical columns are cut into ``q_bins`` equal-frequency bins; a sampled
    bin is realized as a uniform draw over the training values it held.
    Attributes outside the graph, and parent configurations never seen in
    training, fall back to the (smoothed) marginal.
    """
    if len(train) == 0:
        raise ValueError("bayesian_sample needs training rows")
    rng = np.random.default_rng(seed)
    names = train.names
    variables = {n: _encode(train, n, q_bins) for n in names}

    order = [n for layer in topological_layers(g) for n in sorted(layer)]
    order += [n for n in names if n not in g.nodes]
    parent_of = {n: sorted(parents(g, {n})) if n in g.nodes else [] for n in names}

    def marginal(var: _Variable) -> np.ndarray:
        counts = np.bincount(var.codes[var.codes >= 0], minlength=var.n_states).astype(float)
        return counts + smoothing if (counts + smoothing).sum() > 0 else np.ones(var.n_states)

    tables = {}
    for n in order:
        var = variables[n]
        if var.n_states == 0:
            continue
        pa = [variables[p] for p in parent_of[n] if variables[p].n_states > 0]
        cpt: dict[tuple, np.ndarray] = {}
        if pa:
            mask = var.codes >= 0
            for p in pa:
                mask &= p.codes >= 0
            for i in np.flatnonzero(mask):
                key = tuple(int(p.codes[i]) for p in pa)
                cpt.setdefault(key, np.zeros(var.n_states))[var.codes[i]] += 1.0
        tables[n] = ([p.name for p in pa], cpt, marginal(var))

    out = []
    for _ in range(s):
        state: dict[str, int] = {}
        for n in order:
            if n not in tables:
                continue
            pa, cpt, fallback = tables[n]
            probs = fallback
            if pa:
                counts = cpt.get(tuple(state[p] for p in pa))
                if counts is not None and (counts + smoothing).sum() > 0:
                    probs = counts + smoothing
            state[n] = _draw(probs, rng)
        out.append(tuple(variables[n].realize(state[n], rng) if n in state else None for n in names))
    return train.with_rows(out)
