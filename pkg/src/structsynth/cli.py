"""``structsynth`` command line: discover, synthesize, evaluate, pipeline."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .dataset import load_csv, write_csv
from .depgraph import DependencyGraph
from .discovery import discover_structure
from .errors import (
    BackendError,
    ConfigError,
    DataIOError,
    EmptySourceSet,
    StructSynthError,
)
from .evaluation import evaluate
from .config import PipelineConfig, load_config
from .llm import write_transcript
from .synthesis import Ablation, synthesize

log = logging.getLogger("structsynth")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BACKEND = 3
EXIT_VALIDATION = 4

GRAPH_FILE = "graph.json"
SYNTH_FILE = "synth.csv"


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


def cmd_discover(cfg: PipelineConfig) -> dict[str, Path]:
    train, _ = cfg.load_data()
    result = discover_structure(train, cfg.make_backend(), cfg.discovery)
    cfg.out.mkdir(parents=True, exist_ok=True)
    graph_path = cfg.out / GRAPH_FILE
    graph_path.write_text(result.graph.dumps(), encoding="utf-8")
    transcript = cfg.out / "discover_transcript.jsonl"
    write_transcript(result.transcript, transcript)
    log.info("graph with %d nodes and %d edges written to %s",
             len(result.graph.nodes), len(result.graph.edges), graph_path)
    return {"graph": graph_path, "discover_transcript": transcript}


def cmd_synthesize(cfg: PipelineConfig, graph_path: Path | None = None) -> dict[str, Path]:
    graph_path = graph_path or cfg.out / GRAPH_FILE
    try:
        text = Path(graph_path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataIOError(f"cannot read graph {graph_path}: {exc}") from exc
    graph = DependencyGraph.loads(text)
    train, _ = cfg.load_data()
    backend = None if cfg.synthesis.ablation is Ablation.BAYESIAN else cfg.make_backend()
    result = synthesize(train, graph, backend, cfg.synthesis)
    cfg.out.mkdir(parents=True, exist_ok=True)
    synth_path = cfg.out / SYNTH_FILE
    write_csv(result.data, synth_path)
    stats_path = cfg.out / "synth_stats.json"
    _write_json(stats_path, result.stats.to_json())
    transcript = cfg.out / "synth_transcript.jsonl"
    write_transcript(result.transcript, transcript)
    return {"synth": synth_path, "synth_stats": stats_path, "synth_transcript": transcript}


def cmd_evaluate(cfg: PipelineConfig, synth_path: Path | None = None) -> dict[str, Path]:
    synth_path = synth_path or cfg.out / SYNTH_FILE
    train, test = cfg.load_data()
    synth = load_csv(synth_path, train.schema)
    ev = cfg.evaluation
    report = evaluate(train, test, synth, q=ev.q, raw_distance=ev.raw_distance, seed=cfg.seed, task=ev.task)
    cfg.out.mkdir(parents=True, exist_ok=True)
    report_path = cfg.out / "report.json"
    _write_json(report_path, report.to_json())
    print(report.table())
    return {"report": report_path}


def cmd_pipeline(cfg: PipelineConfig) -> dict[str, Path]:
    artifacts: dict[str, Path] = {}
    for stage, run in (("discover", lambda: cmd_discover(cfg)),
                       ("synthesize", lambda: cmd_synthesize(cfg)),
                       ("evaluate", lambda: cmd_evaluate(cfg))):
        try:
            artifacts.update(run())
        except StructSynthError as exc:
            exc.stage = stage
            raise
    manifest = cfg.out / "manifest.json"
    _write_json(manifest, {
        "artifacts": {k: v.name for k, v in sorted(artifacts.items())},
        "ablation": cfg.synthesis.ablation.value,
        "seed": cfg.seed,
    })
    artifacts["manifest"] = manifest
    return artifacts


def _exit_code(exc: StructSynthError) -> int:
    if isinstance(exc, (ConfigError, DataIOError)):
        return EXIT_CONFIG
    if isinstance(exc, (BackendError, EmptySourceSet)):
        return EXIT_BACKEND
    return EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="structsynth", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("discover", "synthesize", "evaluate", "pipeline"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", type=Path)
        p.add_argument("--seed", type=int)
        p.add_argument("--ablation", choices=[a.value for a in Ablation])
        p.add_argument("--mock-script", type=Path)
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "synthesize":
            p.add_argument("--graph", type=Path)
        if name == "evaluate":
            p.add_argument("--synth", type=Path)
            p.add_argument("--raw-distance", action="store_true", default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.mock_script).with_overrides(args.out, args.seed, args.ablation)
        if getattr(args, "raw_distance", None):
            cfg.evaluation.raw_distance = True
        if args.command == "discover":
            cmd_discover(cfg)
        elif args.command == "synthesize":
            cmd_synthesize(cfg, args.graph)
        elif args.command == "evaluate":
            cmd_evaluate(cfg, args.synth)
        else:
            cmd_pipeline(cfg)
    except StructSynthError as exc:
        stage = getattr(exc, "stage", None)
        prefix = f"{stage} failed: " if stage else ""
        print(f"structsynth: error: {prefix}{exc}", file=sys.stderr)
        return _exit_code(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
