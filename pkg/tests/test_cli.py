import json
import shutil

import pytest

from structsynth.cli import main
from structsynth.config import load_config
from structsynth.dataset import load_csv
from structsynth.depgraph import DependencyGraph
from structsynth.errors import ConfigError, DataIOError

from scenarios import write_chain_fixture


@pytest.fixture
def fixture_dir(tmp_path):
    return tmp_path / "toy"


def run(*args):
    return main([str(a) for a in args])


def test_discover_writes_parsable_graph(fixture_dir):
    cfg = write_chain_fixture(fixture_dir)
    assert run("discover", "--config", cfg) == 0
    g = DependencyGraph.loads((fixture_dir / "out" / "graph.json").read_text())
    assert {e.key for e in g.edges} == {("group", "score"), ("score", "outcome")}
    lines = (fixture_dir / "out" / "discover_transcript.jsonl").read_text().splitlines()
    assert len(lines) == 4 and json.loads(lines[0])["kind"] == "source"


def test_discover_rerun_is_byte_identical(fixture_dir, tmp_path):
    cfg = write_chain_fixture(fixture_dir)
    run("discover", "--config", cfg, "--out", tmp_path / "a")
    run("discover", "--config", cfg, "--out", tmp_path / "b")
    for name in ("graph.json", "discover_transcript.jsonl"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_missing_csv_names_path(fixture_dir, capsys):
    cfg = write_chain_fixture(fixture_dir)
    (fixture_dir / "train.csv").unlink()
    assert run("discover", "--config", cfg) == 2
    assert "train.csv" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert run("discover", "--config", tmp_path / "none.json") == 2
    assert "none.json" in capsys.readouterr().err


def test_bayesian_synthesis_offline(fixture_dir):
    cfg = write_chain_fixture(fixture_dir)
    run("discover", "--config", cfg)
    # an empty mock script proves no completions are requested
    (fixture_dir / "mock.json").write_text("{}")
    assert run("synthesize", "--config", cfg, "--ablation", "bayesian") == 0
    synth = load_csv(fixture_dir / "out" / "synth.csv")
    assert len(synth) == 50
    stats = json.loads((fixture_dir / "out" / "synth_stats.json").read_text())
    assert stats["requested"] == 50 and stats["generated"] == 50 and stats["llm_calls"] == 0


def test_synthesize_zero_rows(fixture_dir):
    cfg = write_chain_fixture(fixture_dir, extra={"synthesis": {"s": 0}})
    run("discover", "--config", cfg)
    assert run("synthesize", "--config", cfg) == 0
    assert (fixture_dir / "out" / "synth.csv").read_text() == "group,score,outcome\n"


def test_corrupt_graph(fixture_dir, tmp_path):
    cfg = write_chain_fixture(fixture_dir)
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("synthesize", "--config", cfg, "--graph", bad) != 0


def test_evaluate_train_as_synth(fixture_dir, capsys):
    cfg = write_chain_fixture(fixture_dir)
    assert run("evaluate", "--config", cfg, "--synth", fixture_dir / "train.csv") == 0
    out = capsys.readouterr().out
    assert "fidelity" in out and "0.0000" in out.split("fidelity")[1]
    report = json.loads((fixture_dir / "out" / "report.json").read_text())
    assert report["fidelity"] == 0.0
    assert set(report) == {"downstream", "privacy_risk", "fidelity", "pair_breakdown", "config"}
    assert report["downstream"]["metric"] == "AUC" and 0 <= report["downstream"]["value"] <= 1
    assert 0 <= report["privacy_risk"] <= 1
    for p in report["pair_breakdown"]:
        assert set(p) == {"col_i", "col_j", "delta", "degenerate"}


def test_evaluate_schema_mismatch_names_column(fixture_dir, tmp_path, capsys):
    cfg = write_chain_fixture(fixture_dir)
    odd = tmp_path / "odd.csv"
    odd.write_text("group,points,outcome\ng0,1,yes\n")
    assert run("evaluate", "--config", cfg, "--synth", odd) == 4
    err = capsys.readouterr().err
    assert "'score'" in err or "'points'" in err


def test_pipeline_mock_run(fixture_dir):
    cfg = write_chain_fixture(fixture_dir)
    assert run("pipeline", "--config", cfg) == 0
    manifest = json.loads((fixture_dir / "out" / "manifest.json").read_text())
    assert set(manifest["artifacts"]) >= {"graph", "synth", "report"}
    assert manifest["artifacts"]["synth"] == "synth.csv"
    assert len(load_csv(fixture_dir / "out" / "synth.csv")) == 50


def test_pipeline_is_byte_stable(fixture_dir, tmp_path):
    cfg = write_chain_fixture(fixture_dir)
    for name in ("a", "b"):
        assert run("pipeline", "--config", cfg, "--out", tmp_path / name) == 0
    for f in sorted(p.name for p in (tmp_path / "a").iterdir()):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes(), f


def test_bayesian_pipeline_seed_changes_synth_not_graph(fixture_dir, tmp_path):
    cfg = write_chain_fixture(fixture_dir)
    for seed in (1, 2):
        out = tmp_path / f"s{seed}"
        assert run("pipeline", "--config", cfg, "--ablation", "bayesian", "--seed", seed, "--out", out) == 0
    assert (tmp_path / "s1" / "graph.json").read_bytes() == (tmp_path / "s2" / "graph.json").read_bytes()
    assert (tmp_path / "s1" / "synth.csv").read_bytes() != (tmp_path / "s2" / "synth.csv").read_bytes()


def test_pipeline_failure_names_stage(fixture_dir, capsys):
    cfg = write_chain_fixture(fixture_dir)
    script = json.loads((fixture_dir / "mock.json").read_text())
    del script["data_gen:L1"]
    (fixture_dir / "mock.json").write_text(json.dumps(script))
    assert run("pipeline", "--config", cfg) == 3
    assert "synthesize failed" in capsys.readouterr().err


def test_no_writes_outside_out_dir(fixture_dir):
    cfg = write_chain_fixture(fixture_dir)
    before = {p.name for p in fixture_dir.iterdir()}
    run("pipeline", "--config", cfg)
    assert {p.name for p in fixture_dir.iterdir()} - before == {"out"}


def test_mock_script_override(fixture_dir, tmp_path):
    cfg = write_chain_fixture(fixture_dir)
    moved = tmp_path / "elsewhere.json"
    shutil.move(fixture_dir / "mock.json", moved)
    assert run("discover", "--config", cfg) == 2
    assert run("discover", "--config", cfg, "--mock-script", moved) == 0


def test_config_validation(tmp_path, write_json):
    (tmp_path / "t.csv").write_text("a,b\n1,x\n")
    with pytest.raises(ConfigError):
        load_config(write_json("c1.json", {"data": {"train": "t.csv", "test": "t.csv", "bogus": 1}}))
    with pytest.raises(ConfigError):
        load_config(write_json("c2.json", {"data": {"train": "t.csv", "test": "t.csv"},
                                           "backend": {"mock_script": "t.csv", "endpoint": "http://x"}}))
    with pytest.raises(ConfigError, match="binary"):
        load_config(write_json("c5.json", {"data": {"train": "t.csv", "test": "t.csv", "task": "binary"}}))
    with pytest.raises(DataIOError):
        load_config(write_json("c3.json", {"data": {"train": "missing.csv", "test": "t.csv"}}))
    cfg = load_config(write_json("c4.json", {"data": {"train": "t.csv", "test": "t.csv"}, "seed": 7}))
    assert cfg.synthesis.seed == 7 and cfg.discovery.seed == 7
    with pytest.raises(ConfigError):
        cfg.make_backend()


def test_raw_data_split(tmp_path, write_json):
    rows = "\n".join(f"{i},{'ab'[i % 2]}" for i in range(50))
    (tmp_path / "raw.csv").write_text("a,b\n" + rows + "\n")
    cfg = load_config(write_json("c.json", {"data": {"raw": "raw.csv", "test_fraction": 0.2, "n": 30}}))
    train, test = cfg.load_data()
    assert (len(train), len(test)) == (30, 10)
