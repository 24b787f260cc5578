"""Run a pretrained encoder over a corpus and dump CTXEMB1 bundles.

Token mode writes final-layer states for the real-text tokens of each
snippet, aligned to character offsets from the tokenizer's offset mapping.
EOS mode writes the final hidden state at the end-of-sequence position of
an instruction-augmented input (prompt plus the plain snippet). The scoring
engine never loads a model; this tool is the only place inference happens,
and it talks to the engine purely through the bundle files.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

from contextcurate.corpus import ContextRecord, load_corpus
from contextcurate.embed import EmbeddingBundle, write_bundles

from .prompts import VARIANTS, compose_input

MODES = ("token_states", "eos_only", "both")

# Tokenizers report a ~1e30 sentinel when the checkpoint declares no limit.
_NO_LIMIT = 1_000_000


class TruncationWarning(UserWarning):
    """A context lost tokens to the max-sequence-length cut."""


@dataclass(frozen=True)
class ExportJob:
    """One corpus-to-bundles run. ``prompt_variant`` only matters for the
    EOS modes; token-state bundles carry no variant tag."""

    corpus: Path
    encoder: str
    out: Path
    mode: str = "token_states"
    prompt_variant: str = "plain"
    batch_size: int = 64
    max_seq_len: int = 512

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.prompt_variant not in VARIANTS:
            raise ValueError(
                f"unknown prompt variant {self.prompt_variant!r}; expected one of {VARIANTS}"
            )
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_seq_len < 4:
            raise ValueError("max_seq_len must be >= 4")


@dataclass
class ExportReport:
    n_exported: int = 0
    skipped_ids: list[str] = field(default_factory=list)
    truncated_ids: list[str] = field(default_factory=list)
    # Export-time pooled cosine per context, token modes only. Computed here
    # with plain float32 means, independently of the engine's pooling, so a
    # round-trip harness can compare the two implementations.
    pooled_cosines: dict[str, float] = field(default_factory=dict)


@dataclass
class Encoded:
    """One batch worth of encoder output, back on the host as numpy."""

    states: np.ndarray  # (batch, seq, hidden) float32
    offsets: np.ndarray  # (batch, seq, 2)
    special: np.ndarray  # (batch, seq) 1 = special token
    attention: np.ndarray  # (batch, seq) 1 = real position
    truncated: list[bool]

    def real_rows(self, i: int) -> tuple[np.ndarray, tuple[tuple[int, int], ...]]:
        """States and offsets for row i with padding, special tokens, and
        zero-width offsets dropped."""
        keep = (
            (self.attention[i] == 1)
            & (self.special[i] == 0)
            & (self.offsets[i, :, 0] < self.offsets[i, :, 1])
        )
        idx = np.nonzero(keep)[0]
        offs = tuple((int(s), int(e)) for s, e in self.offsets[i][idx])
        return self.states[i][idx], offs

    def eos_row(self, i: int) -> np.ndarray:
        last = int(np.nonzero(self.attention[i])[0][-1])
        return self.states[i][last]


class Encoder:
    """Tokenizer plus model in eval mode on a fixed device."""

    def __init__(self, name_or_path: str, device: str = "cpu"):
        self.tokenizer = AutoTokenizer.from_pretrained(name_or_path)
        if not getattr(self.tokenizer, "is_fast", False):
            raise ValueError(
                f"encoder {name_or_path!r} has no fast tokenizer; "
                "character offset mappings are required"
            )
        self.model = AutoModel.from_pretrained(name_or_path).to(device).eval()
        self.device = device

    @property
    def hidden_size(self) -> int:
        return int(self.model.config.hidden_size)

    @property
    def length_limit(self) -> int | None:
        limit = getattr(self.tokenizer, "model_max_length", None)
        if limit is None or limit > _NO_LIMIT:
            return None
        return int(limit)

    def encode(self, texts: Sequence[str], max_len: int) -> Encoded:
        enc = self.tokenizer(
            list(texts),
            padding=True,
            truncation=True,
            max_length=max_len,
            return_offsets_mapping=True,
            return_special_tokens_mask=True,
            return_tensors="pt",
        )
        inputs = {
            k: enc[k].to(self.device)
            for k in ("input_ids", "attention_mask", "token_type_ids")
            if k in enc
        }
        with torch.no_grad():
            states = self.model(**inputs).last_hidden_state
        full = self.tokenizer(list(texts), truncation=False)["input_ids"]
        return Encoded(
            states=states.cpu().numpy().astype(np.float32, copy=False),
            offsets=enc["offset_mapping"].numpy(),
            special=enc["special_tokens_mask"].numpy(),
            attention=enc["attention_mask"].numpy(),
            truncated=[len(ids) > max_len for ids in full],
        )


def pooled_cosine(
    states: np.ndarray,
    offsets: Sequence[tuple[int, int]],
    spans: Sequence[tuple[int, int]],
) -> float | None:
    """Cosine of (mean word rows, mean remaining rows) in raw float32.

    None when the pair is undefined: no token overlaps any span, the word
    covers every token, or a pooled vector has zero norm.
    """
    word = {
        i
        for i, (ts, te) in enumerate(offsets)
        if any(max(ts, s) < min(te, e) for s, e in spans)
    }
    if not word or len(word) == len(offsets):
        return None
    rest = [i for i in range(len(offsets)) if i not in word]
    w = states[sorted(word)].mean(axis=0)
    c = states[rest].mean(axis=0)
    denom = float(np.linalg.norm(w)) * float(np.linalg.norm(c))
    if denom == 0.0:
        return None
    return float(np.dot(w, c)) / denom


def export_bundles(job: ExportJob, device: str = "cpu") -> ExportReport:
    """Encode the corpus and write the bundle pair at ``job.out``.

    A context whose every target-word span falls beyond the truncation point
    cannot be scored and is skipped (listed in the report); truncation that
    leaves a span reachable is only a warning.
    """
    corpus = load_corpus(job.corpus)
    encoder = Encoder(job.encoder, device=device)
    limit = encoder.length_limit
    if limit is not None and job.max_seq_len > limit:
        raise ValueError(f"max_seq_len {job.max_seq_len} exceeds encoder limit {limit}")
    report = ExportReport()
    write_bundles(_generate(job, corpus.records, encoder, report), job.out)
    return report


def _generate(
    job: ExportJob,
    records: Sequence[ContextRecord],
    encoder: Encoder,
    report: ExportReport,
) -> Iterator[EmbeddingBundle]:
    hidden = encoder.hidden_size
    for batch in _batched(records, job.batch_size):
        token_enc = eos_enc = None
        if job.mode in ("token_states", "both"):
            token_enc = encoder.encode([r.snippet for r in batch], job.max_seq_len)
        if job.mode in ("eos_only", "both"):
            eos_enc = encoder.encode(
                [compose_input(job.prompt_variant, r.word.lemma, r.snippet) for r in batch],
                job.max_seq_len,
            )
        for i, record in enumerate(batch):
            if (token_enc is not None and token_enc.truncated[i]) or (
                eos_enc is not None and eos_enc.truncated[i]
            ):
                warnings.warn(
                    f"context {record.id!r}: truncated at {job.max_seq_len} tokens",
                    TruncationWarning,
                )
                report.truncated_ids.append(record.id)
            matrix = np.zeros((0, hidden), dtype=np.float32)
            offsets: tuple[tuple[int, int], ...] = ()
            if token_enc is not None:
                rows, offs = token_enc.real_rows(i)
                score = pooled_cosine(rows, offs, record.occurrences)
                if score is None:
                    report.skipped_ids.append(record.id)
                    continue
                report.pooled_cosines[record.id] = score
                matrix, offsets = rows, offs
            eos = eos_enc.eos_row(i) if eos_enc is not None else None
            yield EmbeddingBundle(
                context_id=record.id,
                dim=hidden,
                offsets=offsets,
                matrix=matrix,
                eos_vector=eos,
                prompt_variant=job.prompt_variant if eos_enc is not None else None,
            )
            report.n_exported += 1


def _batched(seq: Sequence, n: int) -> Iterator[Sequence]:
    for i in range(0, len(seq), n):
        yield seq[i : i + n]
