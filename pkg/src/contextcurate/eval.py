"""Validation splits, cross-validation driver, and regression metrics.

Two split regimes. In the word-unseen regime every context of a given word
lands in exactly one fold, and folds are balanced within each difficulty
band, so a fold's test words are never seen in its training data. In the
word-seen regime each word keeps most of its contexts in train and donates
a seeded sample to a single holdout.

The cross-validation driver refits the feature normalizer and the head
inside every fold. A leakage guard checks train/test disjointness (and word
integrity for word-unseen) before any fitting happens.
"""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from .corpus import Corpus, DataQualityWarning
from .curate import ScoredSet
from .embed import EmbeddingBundle, proximity, require_eos
from .features import FeatureTable, NormStats, apply_normalizer, fit_normalizer
from .head import HeadConfig, MLPHead, TrainConfig, predict_batch, train

WORD_UNSEEN = "word_unseen"
WORD_SEEN = "word_seen"
MODEL_SPECS = ("unsupervised", "supervised", "hybrid")

# Train-side marker in word_seen assignments; holdout contexts get fold 0.
TRAIN_FOLD = -1

# Spacing for per-fold seed derivation; prime, so fold seeds never collide
# for any base seed within reach.
_FOLD_SEED_STRIDE = 1000003


class LeakageError(Exception):
    """A holdout context (or its word) was visible during fitting."""


@dataclass(frozen=True)
class FoldPlan:
    regime: str
    assignment: dict[str, int]
    seed: int | None = None
    k: int | None = None
    holdout_fraction: float | None = None

    def __post_init__(self):
        if self.regime not in (WORD_UNSEEN, WORD_SEEN):
            raise ValueError(f"unknown regime {self.regime!r}")

    def folds(self) -> Iterator[tuple[int, list[str], list[str]]]:
        """Yields (fold index, train ids, test ids), ids sorted."""
        if self.regime == WORD_UNSEEN:
            n_folds = max(self.assignment.values()) + 1
            for f in range(n_folds):
                test = sorted(i for i, a in self.assignment.items() if a == f)
                train_ids = sorted(i for i, a in self.assignment.items() if a != f)
                yield f, train_ids, test
        else:
            test = sorted(i for i, a in self.assignment.items() if a == 0)
            train_ids = sorted(i for i, a in self.assignment.items() if a == TRAIN_FOLD)
            yield 0, train_ids, test


@dataclass(frozen=True)
class MetricReport:
    rmse: float
    r2: float
    pearson_r: float
    spearman_rho: float
    n: int


def make_word_unseen_folds(corpus: Corpus, k: int = 10, seed: int = 0) -> FoldPlan:
    """Shuffle words within each band, deal them round-robin into k folds."""
    if k < 2:
        raise ValueError("k must be >= 2")
    by_band: dict[int, list[str]] = {}
    for word in corpus.words:
        by_band.setdefault(word.band, []).append(word.lemma)
    rng = np.random.default_rng(seed)
    fold_of_word: dict[str, int] = {}
    for band in sorted(by_band):
        lemmas = sorted(by_band[band])
        if len(lemmas) < k:
            warnings.warn(
                f"band {band} has {len(lemmas)} words for {k} folds; "
                "some folds will not test this band",
                DataQualityWarning,
                stacklevel=2,
            )
        order = rng.permutation(len(lemmas))
        for i, j in enumerate(order):
            fold_of_word[lemmas[j]] = i % k
    assignment = {rec.id: fold_of_word[rec.word.lemma] for rec in corpus.records}
    return FoldPlan(regime=WORD_UNSEEN, assignment=assignment, seed=seed, k=k)


def make_word_seen_split(corpus: Corpus, fraction: float = 0.1, seed: int = 0) -> FoldPlan:
    """Per word, hold out round(fraction * n) contexts, at least 1 when n >= 2.

    Rounding is half-up. The holdout never swallows a whole word: at most
    n - 1 contexts leave, and a single-context word stays entirely in train.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    assignment: dict[str, int] = {}
    for word in corpus.words:
        ids = sorted(r.id for r in corpus.contexts_of(word.lemma))
        n = len(ids)
        if n == 1:
            warnings.warn(
                f"word {word.lemma!r} has a single context; kept in train",
                DataQualityWarning,
                stacklevel=2,
            )
            assignment[ids[0]] = TRAIN_FOLD
            continue
        h = min(max(math.floor(fraction * n + 0.5), 1), n - 1)
        order = rng.permutation(n)
        held = {ids[j] for j in order[:h]}
        for cid in ids:
            assignment[cid] = 0 if cid in held else TRAIN_FOLD
    return FoldPlan(
        regime=WORD_SEEN, assignment=assignment, seed=seed, holdout_fraction=fraction
    )


def save_fold_plan(plan: FoldPlan, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["context_id", "fold"])
        for cid in sorted(plan.assignment):
            writer.writerow([cid, plan.assignment[cid]])


def load_fold_plan(path: str | Path) -> FoldPlan:
    """Rebuild a plan from its CSV; regime is inferred, seed is not stored."""
    assignment: dict[str, int] = {}
    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["context_id", "fold"]:
            raise ValueError(f"{path}: expected header context_id,fold")
        for row in reader:
            assignment[row[0]] = int(row[1])
    if not assignment:
        raise ValueError(f"{path}: empty fold plan")
    if TRAIN_FOLD in assignment.values():
        return FoldPlan(regime=WORD_SEEN, assignment=assignment)
    k = max(assignment.values()) + 1
    return FoldPlan(regime=WORD_UNSEEN, assignment=assignment, k=k)


def check_no_leakage(
    corpus: Corpus, train_ids: Sequence[str], test_ids: Sequence[str], regime: str
) -> None:
    overlap = set(train_ids) & set(test_ids)
    if overlap:
        raise LeakageError(f"contexts in both train and test: {sorted(overlap)[:5]}")
    if regime == WORD_UNSEEN:
        by_id = corpus.by_id()
        train_words = {by_id[i].word.lemma for i in train_ids}
        leaked = sorted({by_id[i].word.lemma for i in test_ids} & train_words)
        if leaked:
            raise LeakageError(f"test words present in training data: {leaked[:5]}")


def _fold_inputs(
    ids: Sequence[str],
    eos: Mapping[str, np.ndarray],
    features: FeatureTable | None,
    stats: NormStats | None,
) -> dict[str, np.ndarray]:
    out = {}
    for cid in ids:
        vec = eos[cid]
        if stats is not None:
            assert features is not None
            vec = np.concatenate([vec, apply_normalizer(stats, features.rows[cid])])
        out[cid] = vec
    return out


def _run_fold(args) -> tuple[int, dict[str, float]]:
    (fold, train_ids, test_ids, eos, features, labels, model_spec,
     head_config, train_config) = args
    stats = None
    if model_spec == "hybrid":
        stats = fit_normalizer(features, train_ids)
    fold_config = replace(
        train_config, seed=train_config.seed + fold * _FOLD_SEED_STRIDE
    )
    inputs = _fold_inputs(train_ids, eos, features, stats)
    head, _ = train(inputs, labels, train_ids, head_config, fold_config)
    preds = predict_batch(head, _fold_inputs(test_ids, eos, features, stats))
    return fold, preds


def cross_validate(
    corpus: Corpus,
    bundles: Mapping[str, EmbeddingBundle],
    model_spec: str,
    plan: FoldPlan,
    features: FeatureTable | None = None,
    head_config: HeadConfig | None = None,
    train_config: TrainConfig | None = None,
    jobs: int = 1,
) -> ScoredSet:
    """Out-of-sample predictions pooled over all folds, sorted by context id.

    The unsupervised spec ignores the plan's training sides entirely: it
    scores each holdout context by proximity, with nothing fitted. The
    supervised spec trains the head on per-fold EOS vectors; hybrid
    additionally fits the feature normalizer per fold and concatenates
    normalized features onto the EOS vector.
    """
    if model_spec not in MODEL_SPECS:
        raise ValueError(f"model_spec must be one of {MODEL_SPECS}")
    if model_spec == "hybrid" and features is None:
        raise ValueError("hybrid model requires a feature table")
    by_id = corpus.by_id()
    uncovered = sorted(set(by_id) - set(plan.assignment))
    if uncovered:
        raise ValueError(f"fold plan does not cover corpus: {uncovered[:5]}")

    folds = list(plan.folds())
    for _, train_ids, test_ids in folds:
        check_no_leakage(corpus, train_ids, test_ids, plan.regime)

    pooled: dict[str, float] = {}
    if model_spec == "unsupervised":
        for _, _, test_ids in folds:
            for cid in test_ids:
                rec = by_id[cid]
                pooled[cid] = proximity(rec, bundles[cid])
    else:
        all_ids = sorted(by_id)
        eos = require_eos(bundles, all_ids)
        labels = {cid: by_id[cid].gold for cid in all_ids}
        if train_config is None:
            train_config = TrainConfig(seed=plan.seed if plan.seed is not None else 0)
        if head_config is None:
            dim = len(next(iter(eos.values())))
            if model_spec == "hybrid":
                dim += features.n_features
            head_config = HeadConfig(input_dim=dim)
        tasks = [
            (fold, train_ids, test_ids, eos,
             features if model_spec == "hybrid" else None,
             labels, model_spec, head_config, train_config)
            for fold, train_ids, test_ids in folds
        ]
        if jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_run_fold, tasks))
        else:
            results = [_run_fold(t) for t in tasks]
        for _, preds in sorted(results):
            pooled.update(preds)

    return ScoredSet.from_pairs(
        (cid, pooled[cid], by_id[cid].gold) for cid in sorted(pooled)
    )


# ---------------------------------------------------------------------------
# Metrics. All take a ScoredSet and work on (score, gold) pairs.
# ---------------------------------------------------------------------------


def _columns(scored: ScoredSet) -> tuple[np.ndarray, np.ndarray]:
    if len(scored) < 2:
        raise ValueError("need at least two scored contexts")
    scores = np.array([e[1] for e in scored.entries], dtype=np.float64)
    golds = np.array([e[2] for e in scored.entries], dtype=np.float64)
    return scores, golds


def rmse(scored: ScoredSet) -> float:
    scores, golds = _columns(scored)
    return float(np.sqrt(np.mean((scores - golds) ** 2)))


def r2(scored: ScoredSet) -> float:
    scores, golds = _columns(scored)
    sst = float(np.sum((golds - golds.mean()) ** 2))
    if sst == 0.0:
        raise ValueError("gold labels have zero variance; r2 undefined")
    sse = float(np.sum((scores - golds) ** 2))
    return 1.0 - sse / sst


def pearson(scored: ScoredSet) -> float:
    scores, golds = _columns(scored)
    return _pearson_arrays(scores, golds)


def _pearson_arrays(x: np.ndarray, y: np.ndarray) -> float:
    dx = x - x.mean()
    dy = y - y.mean()
    denom = math.sqrt(float(np.sum(dx * dx)) * float(np.sum(dy * dy)))
    if denom == 0.0:
        raise ValueError("correlation undefined over a constant vector")
    return float(np.sum(dx * dy)) / denom


def _rankdata(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing the average of their positions."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(scored: ScoredSet) -> float:
    scores, golds = _columns(scored)
    return _pearson_arrays(_rankdata(scores), _rankdata(golds))


def null_model(train_golds: Sequence[float]) -> "ConstantPredictor":
    golds = list(train_golds)
    if not golds:
        raise ValueError("cannot fit a null model on no labels")
    return ConstantPredictor(mean=sum(golds) / len(golds))


@dataclass(frozen=True)
class ConstantPredictor:
    mean: float

    def __call__(self, _x=None) -> float:
        return self.mean

    def score_all(self, ids: Sequence[str]) -> dict[str, float]:
        return {cid: self.mean for cid in ids}


def compute_metrics(scored: ScoredSet) -> MetricReport:
    return MetricReport(
        rmse=rmse(scored),
        r2=r2(scored),
        pearson_r=pearson(scored),
        spearman_rho=spearman(scored),
        n=len(scored),
    )
