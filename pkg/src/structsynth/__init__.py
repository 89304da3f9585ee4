"""Structure-guided synthetic tabular data.

Stage one asks a language model to grow a dependency DAG over the columns of a
small training table, guided by pairwise association scores. Stage two walks
the DAG layer by layer and asks the model for rows conditioned on the parents
already generated. :mod:`structsynth.evaluation` scores the output.
"""

from .dataset import (
    Attribute,
    AttributeKind,
    Dataset,
    Schema,
    Task,
    load_csv,
    project,
    split,
    subsample,
    to_markdown,
    write_csv,
)
from .depgraph import DependencyGraph, Edge, detect_cycles, topological_layers
from .discovery import DiscoveryConfig, discover_structure
from .evaluation import evaluate, privacy_risk, statistical_fidelity
from .synthesis import Ablation, SynthConfig, bayesian_sample, synthesize

__version__ = "0.1.0"
