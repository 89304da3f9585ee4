"""Write a self-contained toy run directory: CSVs, a replayable mock script and a config.

    python3 scripts/make_toy_fixture.py runs/toy
    structsynth pipeline --config runs/toy/config.json
"""

import argparse
import json
from pathlib import Path

from structsynth.dataset import write_csv
from structsynth.toydata import chain_mock_script, sample_chain


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("directory", type=Path)
    ap.add_argument("--n-train", type=int, default=200)
    ap.add_argument("--n-test", type=int, default=80)
    ap.add_argument("--rows", type=int, default=100, help="synthetic rows to request")
    ap.add_argument("--batch", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    d = args.directory
    d.mkdir(parents=True, exist_ok=True)
    write_csv(sample_chain(args.n_train, args.seed), d / "train.csv")
    write_csv(sample_chain(args.n_test, args.seed + 1), d / "test.csv")
    batches = -(-args.rows // args.batch)
    script = chain_mock_script(batches, batch=args.batch, seed=args.seed)
    (d / "mock.json").write_text(json.dumps(script, indent=2) + "\n", encoding="utf-8")
    config = {
        "data": {"train": "train.csv", "test": "test.csv", "label": "outcome", "task": "binary_classification"},
        "backend": {"mock_script": "mock.json"},
        "synthesis": {"s": args.rows, "batch": args.batch},
        "seed": args.seed,
        "out": "out",
    }
    (d / "config.json").write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {d}/config.json")


if __name__ == "__main__":
    main()
