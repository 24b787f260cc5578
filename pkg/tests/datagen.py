"""Builders for toy corpora, bundles, and feature tables used across tests."""

import csv

import numpy as np

from contextcurate.corpus import (
    ContextRecord,
    Corpus,
    TargetWord,
    aggregate_label,
)
from contextcurate.embed import synthetic_bundle_for

FILLERS = (
    "river stone garden window market letter bridge winter summer morning "
    "evening farmer teacher sailor doctor neighbor stranger child family "
    "walked carried opened closed watched followed gathered repaired slowly"
).split()

# Rating presets cycled across contexts so every gold category occurs.
RATING_MIX = (
    (-1, -1, 0),
    (0, 0, 1),
    (2, 2, 1),
    (1, 0, 0),
    (2, 2, 2),
    (-1, 0, 0),
    (1, 1, 2),
    (0, 1, 1),
)


def make_record(
    cid: str,
    lemma: str,
    band: int,
    rng: np.random.Generator,
    ratings,
    n_words: int = 48,
    n_occurrences: int = 1,
) -> ContextRecord:
    words = [FILLERS[i] for i in rng.integers(0, len(FILLERS), n_words)]
    positions = sorted(rng.choice(n_words, size=n_occurrences, replace=False).tolist())
    for p in positions:
        words[p] = lemma
    spans = []
    offset = 0
    for i, w in enumerate(words):
        if i in positions:
            spans.append((offset, offset + len(w)))
        offset += len(w) + 1
    return ContextRecord(
        id=cid,
        word=TargetWord(lemma=lemma, band=band),
        snippet=" ".join(words),
        occurrences=tuple(spans),
        ratings=tuple(ratings),
        gold=aggregate_label(ratings),
    )


def make_corpus(
    rng: np.random.Generator,
    bands=(2, 5),
    words_per_band: int = 3,
    contexts_per_word: int = 4,
) -> Corpus:
    records = []
    words = []
    counter = 0
    for band in bands:
        for w in range(words_per_band):
            lemma = f"zq{band}x{w}"
            words.append(TargetWord(lemma=lemma, band=band))
            for j in range(contexts_per_word):
                ratings = RATING_MIX[counter % len(RATING_MIX)]
                counter += 1
                records.append(
                    make_record(f"{lemma}-{j:02d}", lemma, band, rng, ratings)
                )
    return Corpus(records=tuple(records), words=tuple(words))


def make_bundles(corpus: Corpus, dim: int = 8, seed: int = 0, with_eos: bool = True):
    return {
        r.id: synthetic_bundle_for(r, dim=dim, seed=seed, with_eos=with_eos)
        for r in corpus.records
    }


def write_feature_csv(corpus: Corpus, path, rng: np.random.Generator) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "f_a", "f_b"])
        for r in corpus.records:
            writer.writerow([r.id, repr(float(rng.normal())), repr(float(rng.uniform(0, 5)))])
