"""Curation of word-learning contexts by embedding-based quality scores."""

from .corpus import (
    ContextRecord,
    Corpus,
    CorpusLoadError,
    DataQualityWarning,
    TargetWord,
    aggregate_label,
    categorize,
    load_corpus,
    summarize,
)
from .curate import RCCurve, ScoredSet, SweepRow, decide, default_threshold_grid, rcc, sweep
from .embed import EmbeddingBundle, align_span, cosine, pool_pair, proximity
from .eval import FoldPlan, MetricReport, cross_validate, make_word_seen_split, make_word_unseen_folds
from .features import FeatureTable, NormStats, apply_normalizer, fit_normalizer, load_features
from .head import HeadConfig, MLPHead, TrainConfig, init_head, predict_batch, train

__version__ = "0.1.0"

__all__ = [
    "ContextRecord",
    "Corpus",
    "CorpusLoadError",
    "DataQualityWarning",
    "EmbeddingBundle",
    "FeatureTable",
    "FoldPlan",
    "HeadConfig",
    "MLPHead",
    "MetricReport",
    "NormStats",
    "RCCurve",
    "ScoredSet",
    "SweepRow",
    "TargetWord",
    "TrainConfig",
    "aggregate_label",
    "align_span",
    "apply_normalizer",
    "categorize",
    "cosine",
    "cross_validate",
    "decide",
    "default_threshold_grid",
    "fit_normalizer",
    "init_head",
    "load_corpus",
    "load_features",
    "make_word_seen_split",
    "make_word_unseen_folds",
    "pool_pair",
    "predict_batch",
    "proximity",
    "rcc",
    "summarize",
    "sweep",
    "train",
]
