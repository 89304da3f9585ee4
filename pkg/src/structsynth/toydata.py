"""Known-structure toy data.

Two three-node chains. The mixed chain Group -> Score -> Outcome has a
categorical root with a fixed prior, a Gaussian Score whose mean depends on
the group, and a Bernoulli Outcome with log-odds linear in Score. The linear
chain x -> y -> z is standard Gaussian at every node, each child being
``rho * parent + sqrt(1 - rho^2) * noise``.
"""

from __future__ import annotations

import json

import numpy as np

from .dataset import Attribute, AttributeKind, Dataset, Schema, Task
from .depgraph import DependencyGraph, Edge, Origin

GROUPS = ("g0", "g1", "g2")
GROUP_PRIOR = (0.5, 0.3, 0.2)
SCORE_MEAN = (0.0, 2.5, 5.0)
SCORE_SD = 1.0
OUTCOME_SLOPE = 2.0
OUTCOME_MIDPOINT = 2.5

CHAIN_SCHEMA = Schema(
    (Attribute("group", AttributeKind.CATEGORICAL),
     Attribute("score", AttributeKind.NUMERICAL),
     Attribute("outcome", AttributeKind.CATEGORICAL)),
    label="outcome",
    task=Task.BINARY,
)


def chain_graph() -> DependencyGraph:
    return DependencyGraph(
        frozenset(CHAIN_SCHEMA.names),
        (Edge("group", "score", "group membership shifts the score", Origin.MANUAL),
         Edge("score", "outcome", "higher scores raise the odds of a positive outcome", Origin.MANUAL)),
    )


def sample_chain(n: int, seed: int) -> Dataset:
    rng = np.random.default_rng(seed)
    g = rng.choice(len(GROUPS), size=n, p=GROUP_PRIOR)
    score = rng.normal(np.asarray(SCORE_MEAN)[g], SCORE_SD)
    p_yes = 1.0 / (1.0 + np.exp(-OUTCOME_SLOPE * (score - OUTCOME_MIDPOINT)))
    yes = rng.random(n) < p_yes
    rows = tuple((GROUPS[gi], round(float(s), 3), "yes" if y else "no") for gi, s, y in zip(g, score, yes))
    return Dataset(CHAIN_SCHEMA, rows)


LINEAR_RHO = 0.8

LINEAR_SCHEMA = Schema(
    (Attribute("x", AttributeKind.NUMERICAL),
     Attribute("y", AttributeKind.NUMERICAL),
     Attribute("z", AttributeKind.NUMERICAL)),
    label="z",
    task=Task.REGRESSION,
)


def linear_chain_graph() -> DependencyGraph:
    return DependencyGraph(
        frozenset(LINEAR_SCHEMA.names),
        (Edge("x", "y", "y is a noisy copy of x", Origin.MANUAL),
         Edge("y", "z", "z is a noisy copy of y", Origin.MANUAL)),
    )


def sample_linear_chain(n: int, seed: int, rho: float = LINEAR_RHO) -> Dataset:
    if not -1.0 < rho < 1.0:
        raise ValueError("rho must lie strictly between -1 and 1")
    rng = np.random.default_rng(seed)
    noise = np.sqrt(1.0 - rho * rho)
    x = rng.normal(size=n)
    y = rho * x + noise * rng.normal(size=n)
    z = rho * y + noise * rng.normal(size=n)
    rows = tuple((round(float(a), 3), round(float(b), 3), round(float(c), 3)) for a, b, c in zip(x, y, z))
    return Dataset(LINEAR_SCHEMA, rows)


def markdown_table(columns, rows) -> str:
    lines = ["| " + " | ".join(columns) + " |", "|" + "---|" * len(columns)]
    lines += ["| " + " | ".join(str(c) for c in r) + " |" for r in rows]
    return "\n".join(lines)


def chain_mock_script(batches: int, batch: int = 20, seed: int = 0) -> dict[str, list[str]]:
    """Canned completions that discover the mixed chain and then fill ``batches`` batches.

    Keys follow the mock backend's ``kind:subject`` convention; layer subjects
    are ``L1``..``L3`` because the chain has one node per layer.
    """
    def successor(name, why):
        return json.dumps([{"successor": name, "rationale": why}])

    rng = np.random.default_rng(seed)
    script = {
        "source": ['```json\n["group"]\n```'],
        "generate:group": [successor("score", "group membership shifts the score")],
        "generate:score": [successor("outcome", "high scores mean yes")],
        "generate:outcome": ["[]"],
        "data_gen:L1": [], "data_gen:L2": [], "data_gen:L3": [],
    }
    for _ in range(batches):
        g = rng.choice(len(GROUPS), size=batch, p=GROUP_PRIOR)
        s = rng.normal(np.asarray(SCORE_MEAN)[g], SCORE_SD).round(2)
        script["data_gen:L1"].append("Generated rows:\n\n" + markdown_table(["group"], [(GROUPS[i],) for i in g]))
        script["data_gen:L2"].append(markdown_table(["score"], [(v,) for v in s]))
        script["data_gen:L3"].append(markdown_table(
            ["outcome"], [("yes" if v > OUTCOME_MIDPOINT else "no",) for v in s]))
    return script
