"""Command-line front end: ctxexport export."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from contextcurate.corpus import CorpusLoadError

from .export import MODES, ExportJob, export_bundles
from .prompts import VARIANTS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctxexport",
        description="Encode a labeled corpus and write CTXEMB1 embedding bundles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    ex = sub.add_parser("export", help="run the encoder and write a bundle pair")
    ex.add_argument("--corpus", required=True, help="corpus JSONL path")
    ex.add_argument("--encoder", required=True, help="model id or local directory")
    ex.add_argument("--mode", choices=MODES, default="token_states")
    ex.add_argument("--variant", choices=VARIANTS, default="plain",
                    help="prompt variant for the EOS modes")
    ex.add_argument("--out", required=True,
                    help="bundle index path; the .bin payload lands alongside")
    ex.add_argument("--batch-size", type=int, default=64)
    ex.add_argument("--max-seq-len", type=int, default=512)
    ex.add_argument("--device", default="cpu")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = ExportJob(
            corpus=Path(args.corpus),
            encoder=args.encoder,
            out=Path(args.out),
            mode=args.mode,
            prompt_variant=args.variant,
            batch_size=args.batch_size,
            max_seq_len=args.max_seq_len,
        )
        report = export_bundles(job, device=args.device)
    except CorpusLoadError as exc:
        for lineno, message in exc.errors:
            print(f"{args.corpus}:{lineno}: {message}", file=sys.stderr)
        return 1
    except (FileNotFoundError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {report.n_exported} bundle(s) to {args.out}")
    if report.truncated_ids:
        print(f"truncated: {len(report.truncated_ids)} context(s)", file=sys.stderr)
    if report.skipped_ids:
        print(
            "skipped (target word beyond truncation): " + ", ".join(report.skipped_ids),
            file=sys.stderr,
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
