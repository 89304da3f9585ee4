"""Pipeline configuration: one JSON file, relative paths resolved against it."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .dataset import Dataset, Schema, Task, load_csv, split, subsample
from .discovery import DiscoveryConfig
from .errors import ConfigError, DataIOError
from .llm import Backend, HttpBackend, LlmParams, MockBackend
from .synthesis import SynthConfig


@dataclass
class DataConfig:
    train: Path | None = None
    test: Path | None = None
    raw: Path | None = None
    test_fraction: float = 0.2
    n: int | None = None
    schema: Path | None = None
    label: str | None = None
    task: str | None = None


@dataclass
class BackendConfig:
    mock_script: Path | None = None
    endpoint: str | None = None
    params: LlmParams = field(default_factory=LlmParams)
    max_in_flight: int = 4

    @property
    def configured(self) -> bool:
        return self.mock_script is not None or self.endpoint is not None


@dataclass
class EvalConfig:
    q: int = 10
    raw_distance: bool = False
    task: str | None = None


@dataclass
class PipelineConfig:
    data: DataConfig
    backend: BackendConfig = field(default_factory=BackendConfig)
    discovery: DiscoveryConfig = field(default_factory=DiscoveryConfig)
    synthesis: SynthConfig = field(default_factory=SynthConfig)
    evaluation: EvalConfig = field(default_factory=EvalConfig)
    seed: int = 0
    out: Path = Path("out")

    def with_overrides(self, out=None, seed=None, ablation=None, mock_script=None) -> "PipelineConfig":
        cfg = self
        if out is not None:
            cfg = dataclasses.replace(cfg, out=Path(out))
        if seed is not None:
            cfg = dataclasses.replace(cfg, seed=seed)
        if ablation is not None:
            cfg = dataclasses.replace(cfg, synthesis=dataclasses.replace(cfg.synthesis, ablation=ablation))
        if mock_script is not None:
            path = Path(mock_script)
            if not path.exists():
                raise ConfigError(f"mock script not found: {path}")
            cfg = dataclasses.replace(cfg, backend=dataclasses.replace(cfg.backend, mock_script=path,
                                                                      endpoint=None))
        # the top-level seed drives every stage
        return dataclasses.replace(
            cfg,
            discovery=dataclasses.replace(cfg.discovery, seed=cfg.seed),
            synthesis=dataclasses.replace(cfg.synthesis, seed=cfg.seed),
        )

    def make_backend(self) -> Backend:
        b = self.backend
        if b.mock_script is not None:
            return MockBackend.from_file(b.mock_script)
        if b.endpoint is not None:
            return HttpBackend(b.endpoint, b.params, max_in_flight=b.max_in_flight)
        raise ConfigError("no backend configured: set backend.mock_script or backend.endpoint")

    def load_data(self) -> tuple[Dataset, Dataset]:
        d = self.data
        hint = Schema.load(d.schema) if d.schema else None
        if d.raw is not None:
            full = _with_label(load_csv(d.raw, hint), d)
            train, test = split(full, d.test_fraction, self.seed)
        else:
            train = _with_label(load_csv(d.train, hint), d)
            test = load_csv(d.test, train.schema)
        if d.n is not None:
            train = subsample(train, d.n, self.seed)
        return train, test


def _with_label(ds: Dataset, d: DataConfig) -> Dataset:
    if d.label is None and d.task is None:
        return ds
    s = ds.schema
    schema = Schema(s.attributes, d.label or s.label, Task(d.task) if d.task else s.task)
    return Dataset(schema, ds.rows)


def _path(base: Path, value: Any, what: str, must_exist: bool = True) -> Path | None:
    if value is None:
        return None
    p = Path(value)
    if not p.is_absolute():
        p = base / p
    if must_exist and not p.exists():
        raise DataIOError(f"{what} not found: {p}")
    return p


def _fields(cls, obj: dict, what: str) -> dict:
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(obj) - names
    if unknown:
        raise ConfigError(f"unknown {what} option(s): {sorted(unknown)}")
    return obj


def load_config(path: str | Path, mock_script: str | Path | None = None) -> PipelineConfig:
    """Read a JSON config; ``mock_script`` replaces any configured backend before validation."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataIOError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    if mock_script is not None:
        backend = {k: v for k, v in raw.get("backend", {}).items() if k not in ("mock_script", "endpoint")}
        raw = {**raw, "backend": {**backend, "mock_script": str(Path(mock_script).resolve())}}
    return config_from_dict(raw, path.parent)


def config_from_dict(raw: dict, base: Path = Path(".")) -> PipelineConfig:
    base = Path(base)
    try:
        data_raw = dict(_fields(DataConfig, raw.get("data", {}), "data"))
        for key, what in (("train", "train CSV"), ("test", "test CSV"), ("raw", "raw CSV"),
                          ("schema", "schema file")):
            data_raw[key] = _path(base, data_raw.get(key), what)
        data = DataConfig(**data_raw)
        if (data.raw is None) == (data.train is None):
            raise ConfigError("set exactly one of data.raw or data.train")
        if data.train is not None and data.test is None:
            raise ConfigError("data.test is required alongside data.train")
        if data.task is not None:
            Task(data.task)

        b_raw = dict(_fields(BackendConfig, raw.get("backend", {}), "backend"))
        b_raw["mock_script"] = _path(base, b_raw.get("mock_script"), "mock script")
        b_raw["params"] = LlmParams(**b_raw.get("params", {}))
        backend = BackendConfig(**b_raw)
        if backend.mock_script is not None and backend.endpoint is not None:
            raise ConfigError("configure either backend.mock_script or backend.endpoint, not both")

        disc = DiscoveryConfig(**_fields(DiscoveryConfig, raw.get("discovery", {}), "discovery"))
        synth = SynthConfig(**_fields(SynthConfig, raw.get("synthesis", {}), "synthesis"))
        ev = EvalConfig(**_fields(EvalConfig, raw.get("evaluation", {}), "evaluation"))
        out = _path(base, raw.get("out", "out"), "out", must_exist=False)
        cfg = PipelineConfig(data, backend, disc, synth, ev, int(raw.get("seed", 0)), out)
    except TypeError as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad config value: {exc}") from exc
    return cfg.with_overrides()
