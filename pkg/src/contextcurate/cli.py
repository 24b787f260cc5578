"""Command line front end: reproducible scoring, training, and CV runs.

Config resolution order, lowest to highest precedence: built-in defaults,
then a key=value config file, then the CONTEXTCURATE_SEED environment
variable (seed only), then explicit command line flags. Every run echoes
its fully resolved experiment config into the run directory, excluding
pure execution knobs (output paths, --jobs) so reruns compare clean.

Exit codes: 0 success, 1 bad input (missing files, malformed data, invalid
parameter values), 2 violated internal invariant.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import Corpus, CorpusLoadError, load_corpus, summarize
from .curate import (
    RCCurve,
    ScoredSet,
    SweepRow,
    default_threshold_grid,
    rcc,
    reference_point,
    sweep,
)
from .embed import proximity, read_bundles, require_eos
from .eval import (
    LeakageError,
    MetricReport,
    compute_metrics,
    cross_validate,
    make_word_seen_split,
    make_word_unseen_folds,
    null_model,
    r2 as r2_metric,
    rmse as rmse_metric,
    save_fold_plan,
    WORD_SEEN,
    WORD_UNSEEN,
)
from .features import FeatureTable, NormStats, apply_normalizer, fit_normalizer, load_features
from .head import (
    HeadConfig,
    TrainConfig,
    load_checkpoint,
    predict_batch,
    save_checkpoint,
    save_loss_trace,
    train,
)
from .report import (
    RunReport,
    render_metrics_csv,
    render_rcc_csv,
    render_rcc_svg,
    render_report_md,
    render_sweep_csv,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INTERNAL = 2

SEED_ENV_VAR = "CONTEXTCURATE_SEED"

PREDICTIONS_HEADER = "context_id,score,gold"


class InputError(Exception):
    """User-facing input problem; maps to exit code 1."""


@dataclass(frozen=True)
class RunConfig:
    corpus: str | None = None
    features: str | None = None
    bundles: str | None = None
    checkpoint: str | None = None
    out: str | None = None
    predictions: str | None = None
    run: str | None = None
    loss_trace: str | None = None
    model_spec: str = "unsupervised"
    regime: str = WORD_UNSEEN
    k: int = 10
    fraction: float = 0.1
    seed: int = 0
    learning_rate: float = 1e-3
    weight_decay: float = 0.01
    batch_size: int = 16
    epochs: int = 2
    huber_beta: float = 1.0
    hidden_dims: tuple[int, ...] = (512, 512)
    dropout: float = 0.1
    grid: str | None = None
    good_strict: bool = False
    jobs: int = 1
    target_throwout: float = 0.70

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            weight_decay=self.weight_decay,
            batch_size=self.batch_size,
            epochs=self.epochs,
            huber_beta=self.huber_beta,
            seed=self.seed,
        )

    def head_config(self, input_dim: int) -> HeadConfig:
        return HeadConfig(
            input_dim=input_dim,
            hidden_dims=self.hidden_dims,
            dropout_rate=self.dropout,
        )


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise InputError(f"expected a boolean, got {raw!r}")


def _parse_hidden_dims(raw: str) -> tuple[int, ...]:
    raw = raw.strip()
    if not raw or raw == "none":
        return ()
    try:
        return tuple(int(p) for p in raw.split(","))
    except ValueError:
        raise InputError(f"hidden_dims must be comma-separated integers, got {raw!r}") from None


_CONVERTERS = {
    "k": int,
    "seed": int,
    "batch_size": int,
    "epochs": int,
    "jobs": int,
    "fraction": float,
    "learning_rate": float,
    "weight_decay": float,
    "huber_beta": float,
    "dropout": float,
    "target_throwout": float,
    "good_strict": _parse_bool,
    "hidden_dims": _parse_hidden_dims,
}

# Keys echoed into config.toml: everything that defines the experiment.
# Output locations and --jobs are execution detail and stay out, so a
# 1-worker and a 4-worker run of the same experiment write identical bytes.
_ECHO_KEYS = (
    "bundles",
    "checkpoint",
    "corpus",
    "dropout",
    "epochs",
    "features",
    "fraction",
    "good_strict",
    "grid",
    "hidden_dims",
    "huber_beta",
    "k",
    "learning_rate",
    "model_spec",
    "regime",
    "seed",
    "target_throwout",
    "weight_decay",
    "batch_size",
)


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Flat `key = value` lines; blank lines and #-comments ignored."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"config file not found: {path}")
    known = {f.name for f in fields(RunConfig)}
    out: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise InputError(f"{path}:{lineno}: expected key = value, got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in known:
            raise InputError(f"{path}:{lineno}: unknown config key {key!r}")
        out[key] = value.strip()
    return out


def _coerce(key: str, raw: str):
    conv = _CONVERTERS.get(key)
    if conv is None:
        return raw
    try:
        return conv(raw)
    except (ValueError, TypeError):
        raise InputError(f"bad value for {key}: {raw!r}") from None


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = {f.name: getattr(RunConfig(), f.name) for f in fields(RunConfig)}
    if getattr(args, "config", None):
        for key, raw in parse_config_file(args.config).items():
            values[key] = _coerce(key, raw)
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        values["seed"] = _coerce("seed", env_seed)
    for key in values:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = _coerce(key, flag) if isinstance(flag, str) else flag
    cfg = RunConfig(**values)
    if cfg.model_spec not in ("unsupervised", "supervised", "hybrid"):
        raise InputError(f"unknown model_spec {cfg.model_spec!r}")
    if cfg.regime not in (WORD_UNSEEN, WORD_SEEN):
        raise InputError(f"unknown regime {cfg.regime!r}")
    return cfg


def render_config(cfg: RunConfig) -> str:
    lines = []
    for key in sorted(_ECHO_KEYS):
        value = getattr(cfg, key)
        if value is None:
            continue
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def parse_grid_spec(spec: str) -> list[float]:
    parts = spec.split(":")
    if len(parts) != 3:
        raise InputError(f"grid must be start:stop:step, got {spec!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise InputError(f"grid must be numeric, got {spec!r}") from None
    if step <= 0 or stop < start:
        raise InputError("grid needs stop >= start and step > 0")
    n = int(math.floor((stop - start) / step + 1e-9))
    return [start + i * step for i in range(n + 1)]


# ---------------------------------------------------------------------------
# Shared input loading
# ---------------------------------------------------------------------------


def _require(cfg: RunConfig, *keys: str) -> None:
    missing = [k for k in keys if getattr(cfg, k) is None]
    if missing:
        raise InputError("missing required option(s): " + ", ".join(f"--{k}" for k in missing))


def _load_corpus(cfg: RunConfig) -> Corpus:
    path = Path(cfg.corpus)
    if not path.exists():
        raise InputError(f"corpus file not found: {path}")
    return load_corpus(path)


def _load_bundles(cfg: RunConfig) -> dict:
    path = Path(cfg.bundles)
    if not path.exists():
        raise InputError(f"bundle index not found: {path}")
    return read_bundles(path)


def _load_feature_table(cfg: RunConfig) -> FeatureTable:
    if cfg.features is None:
        raise InputError("features required for the hybrid spec")
    path = Path(cfg.features)
    if not path.exists():
        raise InputError(f"feature file not found: {path}")
    return load_features(path)


def _check_coverage(label: str, needed: Sequence[str], available) -> None:
    missing = sorted(set(needed) - set(available))
    if missing:
        shown = " ".join(missing[:10])
        raise InputError(f"{label} missing for {len(missing)} context(s): {shown}")


def _write_predictions(scored: ScoredSet, path: Path) -> None:
    # repr floats round-trip exactly, so a re-sweep of this file reproduces
    # the run's sweep bit for bit.
    lines = [PREDICTIONS_HEADER]
    lines.extend(f"{cid},{score!r},{gold!r}" for cid, score, gold in scored.entries)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_predictions(path: str | Path) -> ScoredSet:
    path = Path(path)
    if not path.exists():
        raise InputError(f"predictions file not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != PREDICTIONS_HEADER:
        raise InputError(f"{path}: expected header {PREDICTIONS_HEADER}")
    triples = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != 3:
            raise InputError(f"{path}:{lineno}: expected 3 columns")
        try:
            triples.append((cells[0], float(cells[1]), float(cells[2])))
        except ValueError:
            raise InputError(f"{path}:{lineno}: non-numeric score or gold") from None
    if not triples:
        raise InputError(f"{path}: no prediction rows")
    try:
        return ScoredSet.from_pairs(triples)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def _norm_stats_payload(stats: NormStats, names: Sequence[str]) -> dict:
    return {
        "feature_names": list(names),
        "mean": [float(v) for v in stats.mean],
        "sd": [float(v) for v in stats.sd],
        "fitted_on": stats.fitted_on,
    }


def _norm_stats_from_payload(payload: dict) -> NormStats:
    return NormStats(
        mean=np.array(payload["mean"], dtype=np.float64),
        sd=np.array(payload["sd"], dtype=np.float64),
        fitted_on=int(payload["fitted_on"]),
    )


def _model_inputs(
    ids: Sequence[str],
    eos: Mapping[str, np.ndarray],
    table: FeatureTable | None,
    stats: NormStats | None,
) -> dict[str, np.ndarray]:
    out = {}
    for cid in ids:
        vec = eos[cid]
        if stats is not None:
            vec = np.concatenate([vec, apply_normalizer(stats, table.rows[cid])])
        out[cid] = vec
    return out


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_validate(cfg: RunConfig) -> int:
    _require(cfg, "corpus")
    corpus = _load_corpus(cfg)
    s = summarize(corpus)
    print(f"contexts: {s.n_contexts}")
    print(f"target words: {s.n_words}")
    print("words per band: " + ", ".join(f"{b}:{c}" for b, c in s.band_word_counts.items()))
    print(f"gold mean: {s.gold_mean:.4f}")
    print(f"gold sd: {s.gold_sd:.4f} (sample, n-1)")
    print(f"misdirective fraction: {s.frac_misdirective:.4f}")
    print(f"directive fraction: {s.frac_directive:.4f}")
    ids = sorted(r.id for r in corpus.records)
    if cfg.features is not None:
        table = _load_feature_table(cfg)
        missing = sorted(set(ids) - set(table.rows))
        if missing:
            shown = " ".join(missing[:10])
            print(
                f"warning: feature table missing {len(missing)} context(s): {shown}",
                file=sys.stderr,
            )
        else:
            print(f"features: {table.n_features} per context, all contexts covered")
    if cfg.bundles is not None:
        bundles = _load_bundles(cfg)
        missing = sorted(set(ids) - set(bundles))
        if missing:
            shown = " ".join(missing[:10])
            print(
                f"warning: bundles missing {len(missing)} context(s): {shown}",
                file=sys.stderr,
            )
        else:
            dim = next(iter(bundles.values())).dim if bundles else 0
            print(f"bundles: {len(bundles)} records, dim {dim}")
    return EXIT_OK


def _score_once(cfg: RunConfig, corpus: Corpus, bundles: dict) -> ScoredSet:
    by_id = corpus.by_id()
    ids = sorted(by_id)
    if cfg.model_spec == "unsupervised":
        _check_coverage("bundles", ids, bundles)
        return ScoredSet.from_pairs(
            (cid, proximity(by_id[cid], bundles[cid]), by_id[cid].gold) for cid in ids
        )
    if cfg.checkpoint is None:
        raise InputError("checkpoint required for supervised/hybrid scoring")
    ckpt_path = Path(cfg.checkpoint)
    if not ckpt_path.exists():
        raise InputError(f"checkpoint not found: {ckpt_path}")
    head, stats_payload = load_checkpoint(ckpt_path)
    try:
        eos = require_eos(bundles, ids)
    except KeyError as exc:
        raise InputError(str(exc)) from None
    table, stats = None, None
    if cfg.model_spec == "hybrid":
        table = _load_feature_table(cfg)
        _check_coverage("features", ids, table.rows)
        if stats_payload is None:
            raise InputError("checkpoint carries no normalization stats; train with --features")
        stats = _norm_stats_from_payload(stats_payload)
    preds = predict_batch(head, _model_inputs(ids, eos, table, stats))
    return ScoredSet.from_pairs((cid, preds[cid], by_id[cid].gold) for cid in ids)


def cmd_score(cfg: RunConfig) -> int:
    _require(cfg, "corpus", "bundles", "out")
    corpus = _load_corpus(cfg)
    bundles = _load_bundles(cfg)
    scored = _score_once(cfg, corpus, bundles)
    out = Path(cfg.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_predictions(scored, out)
    print(f"wrote {out} ({len(scored)} contexts)")
    return EXIT_OK


def cmd_train(cfg: RunConfig) -> int:
    _require(cfg, "corpus", "bundles", "out")
    if cfg.model_spec == "unsupervised":
        raise InputError("nothing to train for the unsupervised spec")
    corpus = _load_corpus(cfg)
    bundles = _load_bundles(cfg)
    by_id = corpus.by_id()
    ids = sorted(by_id)
    try:
        eos = require_eos(bundles, ids)
    except KeyError as exc:
        raise InputError(str(exc)) from None
    table, stats, payload = None, None, None
    if cfg.model_spec == "hybrid":
        table = _load_feature_table(cfg)
        _check_coverage("features", ids, table.rows)
        stats = fit_normalizer(table, ids)
        payload = _norm_stats_payload(stats, table.feature_names)
    inputs = _model_inputs(ids, eos, table, stats)
    labels = {cid: by_id[cid].gold for cid in ids}
    input_dim = len(next(iter(inputs.values())))
    head, losses = train(inputs, labels, ids, cfg.head_config(input_dim), cfg.train_config())
    out = Path(cfg.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(head, out, norm_stats=payload)
    if cfg.loss_trace is not None:
        save_loss_trace(losses, cfg.loss_trace)
    final = losses[-1] if losses else float("nan")
    print(f"wrote {out} ({len(ids)} contexts, final epoch loss {final:.6f})")
    return EXIT_OK


def _null_report(scored: ScoredSet) -> MetricReport:
    predictor = null_model([gold for _, _, gold in scored.entries])
    constant = ScoredSet.from_pairs(
        (cid, predictor(), gold) for cid, _, gold in scored.entries
    )
    return MetricReport(
        rmse=rmse_metric(constant),
        r2=r2_metric(constant),
        pearson_r=float("nan"),
        spearman_rho=float("nan"),
        n=len(constant),
    )


def _sweep_artifacts(
    cfg: RunConfig, scored: ScoredSet
) -> tuple[list[SweepRow], RCCurve, SweepRow]:
    if cfg.grid is not None:
        grid = parse_grid_spec(cfg.grid)
    else:
        grid = default_threshold_grid([s for _, s, _ in scored.entries])
    rows = sweep(scored, grid, good_strict=cfg.good_strict)
    curve = rcc(rows)
    ref = reference_point(rows, cfg.target_throwout)
    return rows, curve, ref


def cmd_cv(cfg: RunConfig) -> int:
    _require(cfg, "corpus", "bundles", "out")
    run_dir = Path(cfg.out)
    run_dir.mkdir(parents=True, exist_ok=True)
    marker = run_dir / "FAILED"
    if marker.exists():
        marker.unlink()
    try:
        corpus = _load_corpus(cfg)
        bundles = _load_bundles(cfg)
        ids = sorted(r.id for r in corpus.records)
        _check_coverage("bundles", ids, bundles)
        table = None
        if cfg.model_spec == "hybrid":
            table = _load_feature_table(cfg)
            _check_coverage("features", ids, table.rows)

        if cfg.regime == WORD_UNSEEN:
            plan = make_word_unseen_folds(corpus, k=cfg.k, seed=cfg.seed)
        else:
            plan = make_word_seen_split(corpus, fraction=cfg.fraction, seed=cfg.seed)
        save_fold_plan(plan, run_dir / "folds.csv")

        head_config = None
        if cfg.model_spec != "unsupervised":
            try:
                eos = require_eos(bundles, ids)
            except KeyError as exc:
                raise InputError(str(exc)) from None
            input_dim = len(next(iter(eos.values())))
            if cfg.model_spec == "hybrid":
                input_dim += table.n_features
            head_config = cfg.head_config(input_dim)
        scored = cross_validate(
            corpus,
            bundles,
            cfg.model_spec,
            plan,
            features=table,
            head_config=head_config,
            train_config=cfg.train_config(),
            jobs=cfg.jobs,
        )
        _write_predictions(scored, run_dir / "predictions.csv")

        rows, curve, ref = _sweep_artifacts(cfg, scored)
        (run_dir / "sweep.csv").write_text(render_sweep_csv(rows), encoding="utf-8")
        (run_dir / "rcc.csv").write_text(render_rcc_csv(curve), encoding="utf-8")
        (run_dir / "rcc.svg").write_text(
            render_rcc_svg([(cfg.model_spec, curve)], cfg.target_throwout),
            encoding="utf-8",
        )

        metrics = {cfg.model_spec: compute_metrics(scored), "null": _null_report(scored)}
        (run_dir / "metrics.csv").write_text(render_metrics_csv(metrics), encoding="utf-8")

        config_text = render_config(cfg)
        (run_dir / "config.toml").write_text(config_text, encoding="utf-8")
        run = RunReport(
            model_spec=cfg.model_spec,
            summary=summarize(corpus),
            sweep_rows=tuple(rows),
            curve=curve,
            reference=ref,
            metrics=metrics,
            config_echo={k: v for k, v in parse_config_file(run_dir / "config.toml").items()},
            seed=cfg.seed,
        )
        (run_dir / "report.md").write_text(render_report_md(run), encoding="utf-8")
    except BaseException as exc:
        marker.write_text(f"{type(exc).__name__}: {exc}\n", encoding="utf-8")
        raise
    print(f"run complete: {run_dir}")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    _require(cfg, "predictions", "out")
    scored = parse_predictions(cfg.predictions)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.grid is not None:
        grid = parse_grid_spec(cfg.grid)
    else:
        grid = default_threshold_grid([s for _, s, _ in scored.entries])
    rows = sweep(scored, grid, good_strict=cfg.good_strict)
    (out_dir / "sweep.csv").write_text(render_sweep_csv(rows), encoding="utf-8")
    try:
        curve = rcc(rows)
    except ValueError as exc:
        print(f"sweep written; retention curve skipped: {exc}", file=sys.stderr)
        return EXIT_INPUT
    (out_dir / "rcc.csv").write_text(render_rcc_csv(curve), encoding="utf-8")
    (out_dir / "rcc.svg").write_text(
        render_rcc_svg([("scores", curve)], cfg.target_throwout), encoding="utf-8"
    )
    print(f"wrote {out_dir / 'sweep.csv'} ({len(rows)} thresholds, AUC {curve.auc:.4f})")
    return EXIT_OK


def cmd_report(cfg: RunConfig) -> int:
    _require(cfg, "run")
    run_dir = Path(cfg.run)
    config_path = run_dir / "config.toml"
    predictions_path = run_dir / "predictions.csv"
    for p in (config_path, predictions_path):
        if not p.exists():
            raise InputError(f"run directory incomplete: {p} missing")
    stored = parse_config_file(config_path)
    values = {f.name: getattr(RunConfig(), f.name) for f in fields(RunConfig)}
    for key, raw in stored.items():
        values[key] = _coerce(key, raw)
    stored_cfg = RunConfig(**values)
    corpus = _load_corpus(stored_cfg)
    scored = parse_predictions(predictions_path)
    rows, curve, ref = _sweep_artifacts(stored_cfg, scored)
    metrics = {stored_cfg.model_spec: compute_metrics(scored), "null": _null_report(scored)}
    run = RunReport(
        model_spec=stored_cfg.model_spec,
        summary=summarize(corpus),
        sweep_rows=tuple(rows),
        curve=curve,
        reference=ref,
        metrics=metrics,
        config_echo=dict(stored),
        seed=stored_cfg.seed,
    )
    (run_dir / "report.md").write_text(render_report_md(run), encoding="utf-8")
    print(f"wrote {run_dir / 'report.md'}")
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "score": cmd_score,
    "train": cmd_train,
    "cv": cmd_cv,
    "sweep": cmd_sweep,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file")
    common.add_argument("--corpus", help="corpus JSONL path")
    common.add_argument("--features", help="feature CSV path")
    common.add_argument("--bundles", help="CTXEMB1 index path")
    common.add_argument("--checkpoint", help="trained head checkpoint")
    common.add_argument("--out", help="output file or run directory")
    common.add_argument("--predictions", help="predictions CSV (sweep input)")
    common.add_argument("--run", help="existing run directory (report input)")
    common.add_argument("--loss-trace", dest="loss_trace", help="per-epoch loss CSV path")
    common.add_argument(
        "--model-spec",
        dest="model_spec",
        choices=("unsupervised", "supervised", "hybrid"),
    )
    common.add_argument("--regime", choices=(WORD_UNSEEN, WORD_SEEN))
    common.add_argument("--k", type=int, help="fold count (word_unseen)")
    common.add_argument("--fraction", type=float, help="holdout fraction (word_seen)")
    common.add_argument("--seed", type=int)
    common.add_argument("--learning-rate", dest="learning_rate", type=float)
    common.add_argument("--weight-decay", dest="weight_decay", type=float)
    common.add_argument("--batch-size", dest="batch_size", type=int)
    common.add_argument("--epochs", type=int)
    common.add_argument("--huber-beta", dest="huber_beta", type=float)
    common.add_argument("--hidden-dims", dest="hidden_dims", help="e.g. 512,512")
    common.add_argument("--dropout", type=float)
    common.add_argument("--grid", help="threshold grid start:stop:step")
    common.add_argument("--good-strict", dest="good_strict", action="store_true", default=None)
    common.add_argument("--jobs", type=int, help="parallel fold workers")
    common.add_argument("--target-throwout", dest="target_throwout", type=float)

    parser = argparse.ArgumentParser(
        prog="contextcurate",
        description="Score, curate, and evaluate word-learning contexts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check corpus and companion files")
    sub.add_parser("score", parents=[common], help="write predictions for a corpus")
    sub.add_parser("train", parents=[common], help="train the regression head")
    sub.add_parser("cv", parents=[common], help="full cross-validated run directory")
    sub.add_parser("sweep", parents=[common], help="re-sweep an existing predictions file")
    sub.add_parser("report", parents=[common], help="re-render a run's report.md")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; those are input errors here.
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except CorpusLoadError as exc:
        for lineno, msg in exc.errors:
            print(f"line {lineno}: {msg}", file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, FileNotFoundError, KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (AssertionError, LeakageError) as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # anything else is a bug, not bad input
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
