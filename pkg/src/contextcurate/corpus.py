"""Corpus model: target words, contexts, human ratings, and gold labels.

A corpus is a set of short textual snippets ("contexts"), each containing a
target vocabulary word at least once. Every context carries a list of ordinal
human ratings in {-1, 0, +1, +2}; the gold label is their arithmetic mean and
therefore lies in [-1, +2]. Contexts with gold < 0 are "misdirective" (likely
to confuse a learner), contexts with gold > 1 are "directive" (likely to teach
the word), and everything in between is "middle".
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

ALLOWED_RATINGS = (-1, 0, 1, 2)
BAND_RANGE = range(1, 11)

# Snippets in the source data run 42-65 words; smaller synthetic fixtures are
# legal, so length is a warning rather than an error.
SNIPPET_WORDS_MIN = 42
SNIPPET_WORDS_MAX = 65

MISDIRECTIVE = "misdirective"
MIDDLE = "middle"
DIRECTIVE = "directive"


class DataQualityWarning(UserWarning):
    """Non-fatal data oddity (short snippet, lonely word, missing cell)."""


class CorpusLoadError(Exception):
    """Raised when a corpus file contains invalid rows.

    ``errors`` holds (line_number, message) pairs, one per rejected row, so
    callers can print a line-numbered report.
    """

    def __init__(self, errors: list[tuple[int, str]]):
        self.errors = list(errors)
        lines = "; ".join(f"line {n}: {m}" for n, m in self.errors[:20])
        extra = "" if len(self.errors) <= 20 else f" (+{len(self.errors) - 20} more)"
        super().__init__(f"{len(self.errors)} invalid row(s): {lines}{extra}")


@dataclass(frozen=True)
class TargetWord:
    """A vocabulary item to teach, with its difficulty band (1-10)."""

    lemma: str
    band: int

    def __post_init__(self):
        if not self.lemma:
            raise ValueError("target word lemma must be non-empty")
        if self.band not in BAND_RANGE:
            raise ValueError(f"band must be in 1..10, got {self.band}")


@dataclass(frozen=True)
class ContextRecord:
    """One (target word, snippet, ratings) unit of the corpus.

    ``occurrences`` are character spans (start, end) into ``snippet`` where
    the word appears; ``gold`` is the arithmetic mean of ``ratings``.
    """

    id: str
    word: TargetWord
    snippet: str
    occurrences: tuple[tuple[int, int], ...]
    ratings: tuple[int, ...]
    gold: float


@dataclass(frozen=True)
class Corpus:
    records: tuple[ContextRecord, ...]
    words: tuple[TargetWord, ...]

    def __len__(self) -> int:
        return len(self.records)

    def by_id(self) -> dict[str, ContextRecord]:
        return {r.id: r for r in self.records}

    def contexts_of(self, lemma: str) -> list[ContextRecord]:
        return [r for r in self.records if r.word.lemma == lemma]


@dataclass
class CorpusSummary:
    n_contexts: int
    n_words: int
    band_word_counts: dict[int, int]
    gold_mean: float
    gold_sd: float  # sample (n-1) estimator; 0.0 for a single record
    frac_misdirective: float
    frac_directive: float


def aggregate_label(ratings: Sequence[int]) -> float:
    """Arithmetic mean of ordinal ratings, unrounded.

    Each rating must be one of {-1, 0, +1, +2}; the result lies in [-1, +2].
    """
    if len(ratings) == 0:
        raise ValueError("cannot aggregate an empty rating list")
    for r in ratings:
        if r not in ALLOWED_RATINGS:
            raise ValueError(f"rating {r!r} outside {{-1,0,1,2}}")
    return sum(ratings) / len(ratings)


def categorize(gold: float) -> str:
    """Partition a gold label into misdirective (<0), directive (>1), or middle."""
    if not -1.0 <= gold <= 2.0:
        raise ValueError(f"gold label {gold} outside [-1, 2]")
    if gold < 0:
        return MISDIRECTIVE
    if gold > 1:
        return DIRECTIVE
    return MIDDLE


def summarize(corpus: Corpus) -> CorpusSummary:
    """Counts and label statistics over a non-empty corpus.

    The standard deviation is the sample (n-1) estimator, reported as 0.0
    when the corpus has a single record.
    """
    if not corpus.records:
        raise ValueError("cannot summarize an empty corpus")
    golds = [r.gold for r in corpus.records]
    n = len(golds)
    mean = sum(golds) / n
    sd = math.sqrt(sum((g - mean) ** 2 for g in golds) / (n - 1)) if n > 1 else 0.0
    band_counts: dict[int, int] = {}
    for w in corpus.words:
        band_counts[w.band] = band_counts.get(w.band, 0) + 1
    n_mis = sum(1 for g in golds if g < 0)
    n_dir = sum(1 for g in golds if g > 1)
    return CorpusSummary(
        n_contexts=n,
        n_words=len(corpus.words),
        band_word_counts=dict(sorted(band_counts.items())),
        gold_mean=mean,
        gold_sd=sd,
        frac_misdirective=n_mis / n,
        frac_directive=n_dir / n,
    )


def _check_snippet_length(snippet: str, context_id: str) -> None:
    n_words = len(snippet.split())
    if not SNIPPET_WORDS_MIN <= n_words <= SNIPPET_WORDS_MAX:
        warnings.warn(
            f"context {context_id!r}: snippet has {n_words} words, "
            f"outside the expected {SNIPPET_WORDS_MIN}-{SNIPPET_WORDS_MAX}",
            DataQualityWarning,
            stacklevel=3,
        )


def _build_record(
    context_id: str,
    lemma: str,
    band: int,
    snippet: str,
    spans: Sequence[Sequence[int]],
    ratings: Sequence[int],
) -> ContextRecord:
    """Validate one row and build its record; raises ValueError on violation."""
    word = TargetWord(lemma=lemma, band=band)
    if not spans:
        raise ValueError("occurrence not found: empty span list")
    occ = []
    for s in spans:
        if len(s) != 2:
            raise ValueError(f"span {s!r} is not a [start, end] pair")
        start, end = int(s[0]), int(s[1])
        if not (0 <= start < end <= len(snippet)):
            raise ValueError(f"span ({start},{end}) outside snippet of length {len(snippet)}")
        # Web text capitalizes sentence-initial words, so the match is
        # case-insensitive even though the inflection itself is exact.
        if snippet[start:end].lower() != lemma.lower():
            raise ValueError(
                f"occurrence not found: snippet[{start}:{end}]={snippet[start:end]!r} "
                f"does not match word {lemma!r}"
            )
        occ.append((start, end))
    gold = aggregate_label(ratings)
    _check_snippet_length(snippet, context_id)
    return ContextRecord(
        id=context_id,
        word=word,
        snippet=snippet,
        occurrences=tuple(occ),
        ratings=tuple(int(r) for r in ratings),
        gold=gold,
    )


def _assemble(rows: Iterable[tuple[int, ContextRecord]], errors: list[tuple[int, str]]) -> Corpus:
    records: list[ContextRecord] = []
    seen_ids: dict[str, int] = {}
    word_bands: dict[str, int] = {}
    words: list[TargetWord] = []
    for line_no, rec in rows:
        if rec.id in seen_ids:
            errors.append((line_no, f"duplicate id {rec.id!r} (first seen line {seen_ids[rec.id]})"))
            continue
        prev_band = word_bands.get(rec.word.lemma)
        if prev_band is not None and prev_band != rec.word.band:
            errors.append(
                (line_no, f"word {rec.word.lemma!r} listed with bands {prev_band} and {rec.word.band}")
            )
            continue
        seen_ids[rec.id] = line_no
        if prev_band is None:
            word_bands[rec.word.lemma] = rec.word.band
            words.append(rec.word)
        records.append(rec)
    if errors:
        raise CorpusLoadError(errors)
    return Corpus(records=tuple(records), words=tuple(words))


def load_corpus(path: str | Path) -> Corpus:
    """Load and validate a JSON-lines corpus file.

    One object per line with keys ``id``, ``word``, ``band``, ``snippet``,
    ``spans`` (array of [start, end] character offsets into the snippet) and
    ``ratings`` (array of integers in {-1, 0, 1, 2}). All invalid rows are
    collected and reported together in a CorpusLoadError.
    """
    path = Path(path)
    errors: list[tuple[int, str]] = []
    rows: list[tuple[int, ContextRecord]] = []
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                rec = _build_record(
                    context_id=str(obj["id"]),
                    lemma=str(obj["word"]),
                    band=int(obj["band"]),
                    snippet=str(obj["snippet"]),
                    spans=obj["spans"],
                    ratings=[int(r) for r in obj["ratings"]],
                )
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                errors.append((line_no, _describe(exc)))
                continue
            rows.append((line_no, rec))
    return _assemble(rows, errors)


def load_corpus_csv(path: str | Path) -> Corpus:
    """Load the CSV flavor: columns id,word,band,snippet,spans,ratings.

    ``spans`` is "s1-e1;s2-e2" and ``ratings`` is ";"-separated integers.
    """
    path = Path(path)
    errors: list[tuple[int, str]] = []
    rows: list[tuple[int, ContextRecord]] = []
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"id", "word", "band", "snippet", "spans", "ratings"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise CorpusLoadError([(1, f"CSV header must contain {sorted(required)}")])
        for line_no, row in enumerate(reader, start=2):
            try:
                spans = [
                    [int(p) for p in chunk.split("-")]
                    for chunk in row["spans"].split(";")
                    if chunk
                ]
                ratings = [int(r) for r in row["ratings"].split(";") if r]
                rec = _build_record(
                    context_id=row["id"],
                    lemma=row["word"],
                    band=int(row["band"]),
                    snippet=row["snippet"],
                    spans=spans,
                    ratings=ratings,
                )
            except (KeyError, TypeError, ValueError) as exc:
                errors.append((line_no, _describe(exc)))
                continue
            rows.append((line_no, rec))
    return _assemble(rows, errors)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Serialize to the JSON-lines input format (round-trips via load_corpus)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for r in corpus.records:
            obj = {
                "id": r.id,
                "word": r.word.lemma,
                "band": r.word.band,
                "snippet": r.snippet,
                "spans": [list(s) for s in r.occurrences],
                "ratings": list(r.ratings),
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def _describe(exc: Exception) -> str:
    if isinstance(exc, KeyError):
        return f"missing key {exc.args[0]!r}"
    if isinstance(exc, json.JSONDecodeError):
        return f"malformed JSON: {exc.msg}"
    return str(exc)
