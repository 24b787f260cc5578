#!/usr/bin/env python
"""Generate a small synthetic dataset: corpus, features, embedding bundles.

The gold labels are planted on a recoverable signal: each context's rating
distribution is centered on a squashed linear function of its (synthetic)
EOS vector, so a trained head has something real to find, while the rest of
the pipeline sees an ordinary corpus. Everything is a pure function of the
seed.

Usage:
    python scripts/make_toy_dataset.py --out toy/ --seed 7
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from contextcurate.corpus import ContextRecord, TargetWord
from contextcurate.embed import synthetic_bundle_for, write_bundles

FILLERS = (
    "the a an old new small large bright dark quiet heavy light plain "
    "river stone garden window market letter bridge winter summer morning "
    "evening farmer teacher sailor doctor neighbor stranger child family "
    "walked carried opened closed watched followed gathered repaired "
    "painted planted borrowed returned finished started remembered forgot "
    "near under over behind beside between through against during without "
    "slowly quickly carefully quietly suddenly finally usually rarely "
    "however because although meanwhile instead together apart again once"
).split()

TARGETS = (
    "lucid verdant tacit candor zephyr placid furtive quaint "
    "austere languid pensive sonorous"
)


def make_snippet(rng: np.random.Generator, lemma: str) -> tuple[str, list[list[int]]]:
    n_words = int(rng.integers(42, 66))
    words = [FILLERS[i] for i in rng.integers(0, len(FILLERS), n_words)]
    n_occ = 2 if rng.random() < 0.3 else 1
    positions = sorted(rng.choice(n_words, size=n_occ, replace=False).tolist())
    for p in positions:
        words[p] = lemma
    spans = []
    offset = 0
    for i, w in enumerate(words):
        if i in positions:
            spans.append([offset, offset + len(w)])
        offset += len(w) + 1
    return " ".join(words), spans


def ratings_for(rng: np.random.Generator, center: float, n_raters: int = 10) -> list[int]:
    out = []
    for _ in range(n_raters):
        r = int(np.clip(round(center + rng.normal(0.0, 0.35)), -1, 2))
        out.append(r)
    return out


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--dim", type=int, default=16)
    parser.add_argument("--bands", default="2,5,8", help="comma-separated band numbers")
    parser.add_argument("--words-per-band", type=int, default=4)
    parser.add_argument("--contexts-per-word", type=int, default=6)
    args = parser.parse_args()

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    bands = [int(b) for b in args.bands.split(",")]
    lemmas = list(TARGETS.split())
    needed = len(bands) * args.words_per_band
    if needed > len(lemmas):
        parser.error(f"need {needed} target words, have {len(lemmas)}")

    # Planted signal directions for the label center and the side feature.
    w_label = rng.normal(0.0, 1.0, args.dim)
    w_label /= np.linalg.norm(w_label)
    w_feat = rng.normal(0.0, 1.0, args.dim)
    w_feat /= np.linalg.norm(w_feat)

    rows = []
    feature_rows = []
    bundles = []
    idx = 0
    for band in bands:
        for _ in range(args.words_per_band):
            lemma = lemmas[idx]
            idx += 1
            word = TargetWord(lemma=lemma, band=band)
            for j in range(args.contexts_per_word):
                cid = f"{lemma}-{j:03d}"
                snippet, spans = make_snippet(rng, lemma)
                probe = ContextRecord(
                    id=cid,
                    word=word,
                    snippet=snippet,
                    occurrences=tuple((a, b) for a, b in spans),
                    ratings=(0,),
                    gold=0.0,
                )
                bundle = synthetic_bundle_for(probe, dim=args.dim, seed=args.seed, with_eos=True)
                # Center in [-0.9, 1.9]: both tails of the rating scale occur.
                center = 0.5 + 1.4 * math.tanh(
                    2.5 * float(w_label @ bundle.eos_vector) / math.sqrt(args.dim)
                )
                ratings = ratings_for(rng, center)
                rows.append(
                    {
                        "id": cid,
                        "word": lemma,
                        "band": band,
                        "snippet": snippet,
                        "spans": spans,
                        "ratings": ratings,
                    }
                )
                signal = float(w_feat @ bundle.eos_vector) + float(rng.normal(0.0, 0.05))
                feature_rows.append(
                    (cid, f"{signal!r}", str(len(snippet.split())), str(len(spans)))
                )
                bundles.append(bundle)

    corpus_path = out_dir / "corpus.jsonl"
    with corpus_path.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")

    features_path = out_dir / "features.csv"
    with features_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "signal", "snippet_word_count", "occurrence_count"])
        writer.writerows(feature_rows)

    index_path = out_dir / "bundles.ctxemb"
    bin_path = write_bundles(bundles, index_path)

    print(f"wrote {corpus_path} ({len(rows)} contexts, {needed} words)")
    print(f"wrote {features_path}")
    print(f"wrote {index_path} + {bin_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
