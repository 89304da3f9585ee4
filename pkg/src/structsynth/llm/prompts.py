"""Prompt templates for discovery and generation calls.

Every template ends with an output contract; the parsers in
:mod:`structsynth.llm.parsing` accept exactly what these contracts ask for.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping, Sequence

from ..association import AssociationVector, score_text
from ..dataset import Cell, Dataset, Schema, format_cell, to_markdown
from ..depgraph import Cycle, DependencyGraph, edge_block, graph_text
from ..errors import DegenerateCycle

REPAIR_SUFFIX = "\n\nRespond with only the requested format and nothing else."
NO_CONDITIONING = "(no conditioning values: these are root features)"

SOURCE_CONTRACT = 'Answer with a JSON array of feature names, for example ["Age", "Sex"].'
GENERATE_CONTRACT = (
    'Answer with a JSON array of objects, one per proposed edge, for example\n'
    '[{"successor": "Occupation", "rationale": "Education level shapes the jobs a person can hold."}]\n'
    "Answer [] if the feature has no direct effects."
)
RESOLVE_CONTRACT = (
    'Answer with a JSON object naming the edge to remove, for example\n'
    '{"from": "Salary", "to": "Education"}'
)


class PromptKind(str, enum.Enum):
    SOURCE = "source"
    GENERATE = "generate"
    RESOLVE = "resolve"
    DATA_GEN = "data_gen"
    DATA_GEN_ISO = "data_gen_iso"


@dataclass(frozen=True)
class Prompt:
    kind: PromptKind
    text: str
    subject: str | None = None

    @property
    def key(self) -> str:
        return f"{self.kind.value}:{self.subject or ''}"

    def repaired(self) -> "Prompt":
        return Prompt(self.kind, self.text + REPAIR_SUFFIX, self.subject)


def feature_list(schema: Schema) -> str:
    lines = []
    for a in schema.attributes:
        note = ", prediction target" if a.name == schema.label else ""
        lines.append(f"- {a.name} ({a.kind.value}{note})")
    return "\n".join(lines)


def _section(title: str, body: str) -> str:
    return f"### {title}\n{body}"


def render_source_prompt(features: Schema, few_shot: Dataset) -> Prompt:
    text = "\n\n".join([
        "You are an expert data analyst.",
        _section("Task Description",
                 'Identify the initial "source nodes" of a dependency graph over the features below. '
                 "A source node is a root feature: nothing else in this dataset influences it."),
        _section("All Feature Descriptions", feature_list(features)),
        _section("Example Data", to_markdown(few_shot)),
        _section("Instructions",
                 "- Look only at the feature descriptions and the example rows.\n"
                 "- Pick the features that are most plausibly causes rather than effects of the others.\n"
                 "- Use the feature names exactly as written above."),
        _section("Output Format", SOURCE_CONTRACT),
    ])
    return Prompt(PromptKind.SOURCE, text)


def render_generate_prompt(subject: str, g: DependencyGraph, scores: AssociationVector,
                           few_shot: Dataset, features: Schema | None = None) -> Prompt:
    features = features or few_shot.schema
    text = "\n\n".join([
        "You are an expert data analyst extending a dependency graph.",
        _section("Task Description",
                 f"Propose the direct successors (effects) of the feature '{subject}' among the candidate "
                 "features, and give a short evidence-based rationale for each one."),
        _section("Current Graph State", "Current dependency graph structure with rationales:\n" + graph_text(g)),
        _section("All Candidate Features", feature_list(features)),
        _section("Statistical Evidence (Association Scores)", score_text(scores)),
        _section("Example Data", to_markdown(few_shot)),
        _section("Instructions",
                 f"- Focus only on '{subject}'.\n"
                 f"- Weigh the association scores, the example rows and the current graph to decide which "
                 f"features '{subject}' directly affects.\n"
                 "- Every proposed edge needs a concise rationale.\n"
                 "- Do not propose an edge that creates an obvious logical contradiction with the existing graph.\n"
                 "- Use feature names exactly as written above."),
        _section("Output Format", GENERATE_CONTRACT),
    ])
    return Prompt(PromptKind.GENERATE, text, subject)


def render_resolve_prompt(c: Cycle) -> Prompt:
    if len(c.edges) < 2:
        raise DegenerateCycle("a cycle to resolve needs at least two edges")
    blocks = "\n\n".join(edge_block(e) for e in c.edges)
    text = "\n\n".join([
        "You are a logical reasoning expert. Your job is to resolve the contradiction created by a cycle "
        "in a dependency graph.",
        _section("Task Description",
                 "The edges below form a cycle, which a dependency graph cannot contain. Read each edge's "
                 "rationale and pick the single weakest link: the edge whose rationale is least plausible, "
                 "least supported or most likely spurious."),
        _section("Conflicting Cycle with Rationales", blocks),
        _section("Output Format", RESOLVE_CONTRACT + "\nThe edge must be one of the edges listed above."),
    ])
    return Prompt(PromptKind.RESOLVE, text, str(c))


def conditioning_table(conditioning: Sequence[Mapping[str, Cell]], columns: Sequence[str]) -> str:
    if not columns:
        return NO_CONDITIONING
    lines = ["| row | " + " | ".join(columns) + " |",
             "|-----|" + "|".join("-" * (len(c) + 2) for c in columns) + "|"]
    for k, rec in enumerate(conditioning, start=1):
        lines.append(f"| {k} | " + " | ".join(format_cell(rec.get(c)) for c in columns) + " |")
    return "\n".join(lines)


def table_contract(columns: Sequence[str], batch: int, conditioned: bool) -> str:
    header = "| " + " | ".join(columns) + " |"
    text = (f"Answer with a markdown table with exactly these columns, in this order:\n{header}\n"
            f"followed by a separator row and exactly {batch} data rows.")
    if conditioned:
        text += (f"\nData row k must continue conditioning row k (rows 1 to {batch}). "
                 "Do not repeat the conditioning columns and do not add a row-number column.")
    return text


def render_data_gen_prompt(conditioning: Sequence[Mapping[str, Cell]], conditioning_columns: Sequence[str],
                           gi: DependencyGraph, layer: Sequence[str], few_shot_slice: Dataset,
                           batch: int, subject: str | None = None) -> Prompt:
    layer = list(layer)
    if not layer:
        raise ValueError("layer must not be empty")
    cols = ", ".join(layer)
    conditioned = bool(conditioning_columns)
    text = "\n\n".join([
        "You are a helpful assistant that generates realistic tabular data following known dependencies.",
        _section("Task Description",
                 f"Generate a realistic synthetic table with exactly these columns: [{cols}]. "
                 "The values must be conditioned on the parent feature values given as conditioning data."),
        _section("Conditioning Data (Current Results)", conditioning_table(conditioning, conditioning_columns)),
        _section("Relevant Dependency Structure", graph_text(gi)),
        _section("Example Data", to_markdown(few_shot_slice)),
        _section("Instructions",
                 f"- Generate values for [{cols}] only.\n"
                 "- Each generated row must be conditioned on its matching conditioning row; those are the "
                 "parent values that drive the new features.\n"
                 "- The dependency structure shows how the conditioning features relate to the new ones.\n"
                 "- Follow the example data for format, range and typical values.\n"
                 "- Keep values plausible and consistent with the dependencies."),
        _section("Output Format", table_contract(layer, batch, conditioned)),
    ])
    return Prompt(PromptKind.DATA_GEN, text, subject)


def render_data_gen_iso_prompt(graph_values: Sequence[Mapping[str, Cell]], graph_columns: Sequence[str],
                               iso: Sequence[str], few_shot_iso: Dataset, batch: int,
                               subject: str | None = None) -> Prompt:
    iso = list(iso)
    if not iso:
        raise ValueError("iso must not be empty")
    conditioned = bool(graph_columns)
    text = "\n\n".join([
        "You are a helpful assistant that completes tabular records by filling in the remaining features.",
        _section("Task Description",
                 "The structurally dependent features of each record are already generated. Generate plausible "
                 "values for the remaining isolated features so that each record stays statistically consistent."),
        _section("Conditioning Data (Generated Graph-Based Features)",
                 conditioning_table(graph_values, graph_columns)),
        _section("Features to Generate (Isolated Features)", "\n".join(f"- {c}" for c in iso)),
        _section("Example Data", to_markdown(few_shot_iso)),
        _section("Instructions",
                 "- Generate values for the isolated features only.\n"
                 "- Each generated row must be conditioned on its matching conditioning row.\n"
                 "- These features have no parent-child links in the graph, but values must still make sense "
                 "for the whole record.\n"
                 "- Follow the example data for format and typical values."),
        _section("Output Format", table_contract(iso, batch, conditioned)),
    ])
    return Prompt(PromptKind.DATA_GEN_ISO, text, subject)
