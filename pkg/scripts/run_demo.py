#!/usr/bin/env python
"""End-to-end demo on a generated toy dataset.

Builds the dataset, validates it, runs an unsupervised and a hybrid
cross-validated run, trains a standalone checkpoint, and re-sweeps its
predictions. All artifacts land under the chosen directory.

Usage:
    python scripts/run_demo.py --out demo/ --seed 7
"""

from __future__ import annotations

import argparse
import subprocess
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from contextcurate.cli import main as cli


def run(argv: list[str]) -> None:
    print(f"$ contextcurate {' '.join(argv)}")
    code = cli(argv)
    if code != 0:
        raise SystemExit(code)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="demo")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    out = Path(args.out)
    data = out / "data"
    subprocess.run(
        [
            sys.executable,
            str(Path(__file__).with_name("make_toy_dataset.py")),
            "--out",
            str(data),
            "--seed",
            str(args.seed),
        ],
        check=True,
    )

    corpus = str(data / "corpus.jsonl")
    features = str(data / "features.csv")
    bundles = str(data / "bundles.ctxemb")
    seed = str(args.seed)

    run(["validate", "--corpus", corpus, "--features", features, "--bundles", bundles])
    run(
        ["cv", "--corpus", corpus, "--bundles", bundles, "--model-spec", "unsupervised",
         "--k", "3", "--seed", seed, "--out", str(out / "run-unsupervised")]
    )
    run(
        ["cv", "--corpus", corpus, "--bundles", bundles, "--features", features,
         "--model-spec", "hybrid", "--k", "3", "--seed", seed,
         "--hidden-dims", "32,32", "--epochs", "60", "--batch-size", "8",
         "--out", str(out / "run-hybrid")]
    )
    run(
        ["train", "--corpus", corpus, "--bundles", bundles, "--model-spec", "supervised",
         "--hidden-dims", "32,32", "--epochs", "60", "--batch-size", "8", "--seed", seed,
         "--out", str(out / "head.ckpt"), "--loss-trace", str(out / "loss.csv")]
    )
    run(
        ["score", "--corpus", corpus, "--bundles", bundles, "--model-spec", "supervised",
         "--checkpoint", str(out / "head.ckpt"), "--out", str(out / "predictions.csv")]
    )
    run(
        ["sweep", "--predictions", str(out / "predictions.csv"),
         "--out", str(out / "resweep")]
    )

    print("\nartifacts:")
    for p in sorted(out.rglob("*")):
        if p.is_file():
            print(f"  {p}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
