"""Embedding bundles, span-to-token alignment, mean pooling, and proximity.

A bundle holds one context's token-level vectors (final hidden states from
whatever encoder produced them) together with character offsets into the
snippet, plus an optional end-of-sequence vector for the supervised path.
The proximity score for a (word, context) pair is the cosine similarity
between the mean of the target word's token vectors and the mean of all
remaining token vectors. The engine never runs an encoder itself; bundles
are inputs, produced offline or by the synthetic embedder below.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import ContextRecord

CTXEMB_MAGIC = "CTXEMB1"
PROMPT_VARIANTS = ("plain", "instruction", "hybrid")

_TOKEN_RE = re.compile(r"\S+")


class AlignmentError(ValueError):
    """No token overlaps the requested span (tokenizer/offset mismatch)."""


@dataclass(frozen=True)
class EmbeddingBundle:
    """Token vectors for one context, aligned to snippet character offsets."""

    context_id: str
    dim: int
    offsets: tuple[tuple[int, int], ...]
    matrix: np.ndarray  # (n_tokens, dim)
    eos_vector: np.ndarray | None = None
    prompt_variant: str | None = None

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError("dim must be positive")
        if self.matrix.shape != (len(self.offsets), self.dim):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match "
                f"{len(self.offsets)} offsets x dim {self.dim}"
            )
        prev_start, prev_end = -1, 0
        for start, end in self.offsets:
            if start < prev_start:
                raise ValueError("token offsets must be non-decreasing in start")
            if start < prev_end:
                raise ValueError("token offsets must not overlap")
            prev_start, prev_end = start, end
        if self.eos_vector is not None and self.eos_vector.shape != (self.dim,):
            raise ValueError("eos_vector length must equal dim")
        if self.prompt_variant is not None and self.prompt_variant not in PROMPT_VARIANTS:
            raise ValueError(f"unknown prompt variant {self.prompt_variant!r}")

    @property
    def n_tokens(self) -> int:
        return len(self.offsets)


@dataclass(frozen=True)
class PooledPair:
    word_vec: np.ndarray
    context_vec: np.ndarray


def align_span(bundle: EmbeddingBundle, span: tuple[int, int]) -> set[int]:
    """Indices of tokens overlapping the character span by at least one char."""
    start, end = span
    hit = {
        i
        for i, (ts, te) in enumerate(bundle.offsets)
        if max(ts, start) < min(te, end)
    }
    if not hit:
        raise AlignmentError(
            f"context {bundle.context_id!r}: no token overlaps span ({start},{end})"
        )
    return hit


def pool_pair(bundle: EmbeddingBundle, word_token_indices: set[int]) -> PooledPair:
    """Mean of the word's token rows vs mean of all remaining rows."""
    if not word_token_indices:
        raise ValueError("word token index set is empty")
    all_indices = set(range(bundle.n_tokens))
    if not word_token_indices <= all_indices:
        raise ValueError("word token indices outside bundle")
    rest = sorted(all_indices - word_token_indices)
    if not rest:
        raise ValueError(
            f"context {bundle.context_id!r}: word tokens cover the whole snippet, "
            "nothing left to pool as context"
        )
    sel = sorted(word_token_indices)
    mat = np.asarray(bundle.matrix, dtype=np.float64)
    return PooledPair(word_vec=_row_mean(mat[sel]), context_vec=_row_mean(mat[rest]))


def _row_mean(rows: np.ndarray) -> np.ndarray:
    # Sorting each column first pins the summation order, so the pooled mean
    # is bit-identical under any permutation of the rows.
    return np.sort(rows, axis=0).sum(axis=0) / rows.shape[0]


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity, clipped into [-1, 1] against floating rounding."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine undefined for a zero-norm vector")
    return float(np.clip(float(u @ v) / (nu * nv), -1.0, 1.0))


def proximity(record: ContextRecord, bundle: EmbeddingBundle) -> float:
    """Cosine between the pooled word vector and the pooled context vector.

    All occurrences of the target word contribute their tokens to the word
    side of the pool; the context side is every remaining token.
    """
    if bundle.context_id != record.id:
        raise ValueError(
            f"bundle {bundle.context_id!r} does not belong to record {record.id!r}"
        )
    word_idx: set[int] = set()
    for span in record.occurrences:
        start, end = span
        word_idx.update(
            i for i, (ts, te) in enumerate(bundle.offsets) if max(ts, start) < min(te, end)
        )
    if not word_idx:
        raise AlignmentError(
            f"context {record.id!r}: no occurrence span aligns with any token"
        )
    pair = pool_pair(bundle, word_idx)
    return cosine(pair.word_vec, pair.context_vec)


def _token_rng(text: str, seed: int) -> np.random.Generator:
    digest = hashlib.blake2b(f"{seed}:{text}".encode("utf-8"), digest_size=8).digest()
    return np.random.default_rng(int.from_bytes(digest, "little"))


def synthetic_embed(snippet: str, dim: int, seed: int) -> EmbeddingBundle:
    """Deterministic offline test double for a real encoder.

    Whitespace tokenization with exact character offsets; each token's vector
    is uniform in [-1, 1], drawn from a PRNG keyed by (token text, seed), so
    identical token text always yields an identical row.
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    tokens = [(m.group(0), m.start(), m.end()) for m in _TOKEN_RE.finditer(snippet)]
    if not tokens:
        raise ValueError("cannot embed an empty snippet")
    matrix = np.stack([_token_rng(text, seed).uniform(-1.0, 1.0, dim) for text, _, _ in tokens])
    return EmbeddingBundle(
        context_id="",
        dim=dim,
        offsets=tuple((s, e) for _, s, e in tokens),
        matrix=matrix,
    )


def synthetic_bundle_for(
    record: ContextRecord, dim: int, seed: int, with_eos: bool = False
) -> EmbeddingBundle:
    """synthetic_embed applied to a record, tagged with its id.

    With ``with_eos`` a deterministic end-of-sequence vector keyed by the
    whole snippet is attached, standing in for an instruction-conditioned
    encoder output.
    """
    base = synthetic_embed(record.snippet, dim, seed)
    eos = _token_rng("<eos>" + record.snippet, seed).uniform(-1.0, 1.0, dim) if with_eos else None
    return EmbeddingBundle(
        context_id=record.id,
        dim=dim,
        offsets=base.offsets,
        matrix=base.matrix,
        eos_vector=eos,
    )


# ---------------------------------------------------------------------------
# CTXEMB1 bundle files: a JSON-lines index plus a flat little-endian float32
# binary. Per record the binary holds the token rows (row-major) followed by
# the optional EOS row; the index stores each record's byte offset.
# ---------------------------------------------------------------------------


def write_bundles(bundles: Iterable[EmbeddingBundle], index_path: str | Path) -> Path:
    """Write bundles as a CTXEMB1 pair; returns the binary path.

    The binary file sits next to the index with a ``.bin`` suffix.
    """
    index_path = Path(index_path)
    bin_path = index_path.with_suffix(".bin")
    offset = 0
    with index_path.open("w", encoding="utf-8") as idx, bin_path.open("wb") as bin_fh:
        idx.write(json.dumps({"format": CTXEMB_MAGIC}) + "\n")
        for b in bundles:
            rows = np.asarray(b.matrix, dtype="<f4")
            payload = rows.tobytes(order="C")
            if b.eos_vector is not None:
                payload += np.asarray(b.eos_vector, dtype="<f4").tobytes(order="C")
            entry = {
                "id": b.context_id,
                "dim": b.dim,
                "n_tokens": b.n_tokens,
                "offsets": [list(o) for o in b.offsets],
                "byte_offset": offset,
                "has_eos": b.eos_vector is not None,
                "prompt_variant": b.prompt_variant,
            }
            idx.write(json.dumps(entry) + "\n")
            bin_fh.write(payload)
            offset += len(payload)
    return bin_path


def read_bundles(index_path: str | Path) -> dict[str, EmbeddingBundle]:
    """Read a CTXEMB1 pair back into bundles keyed by context id.

    Row payloads are float32 and round-trip bit-exactly.
    """
    index_path = Path(index_path)
    bin_path = index_path.with_suffix(".bin")
    blob = bin_path.read_bytes()
    bundles: dict[str, EmbeddingBundle] = {}
    with index_path.open(encoding="utf-8") as idx:
        header = json.loads(idx.readline())
        if header.get("format") != CTXEMB_MAGIC:
            raise ValueError(f"{index_path}: not a {CTXEMB_MAGIC} index")
        for line in idx:
            if not line.strip():
                continue
            e = json.loads(line)
            dim, n_tokens = int(e["dim"]), int(e["n_tokens"])
            start = int(e["byte_offset"])
            n_rows = n_tokens + (1 if e["has_eos"] else 0)
            end = start + n_rows * dim * 4
            if end > len(blob):
                raise ValueError(f"{bin_path}: truncated payload for id {e['id']!r}")
            rows = np.frombuffer(blob[start:end], dtype="<f4").reshape(n_rows, dim)
            eos = rows[-1].copy() if e["has_eos"] else None
            bundles[e["id"]] = EmbeddingBundle(
                context_id=e["id"],
                dim=dim,
                offsets=tuple((int(s), int(t)) for s, t in e["offsets"]),
                matrix=rows[:n_tokens].copy(),
                eos_vector=eos,
                prompt_variant=e.get("prompt_variant"),
            )
    return bundles


def require_eos(bundles: dict[str, EmbeddingBundle], ids: Sequence[str]) -> dict[str, np.ndarray]:
    """EOS vectors (float64) for the given ids; raises if any are missing."""
    out: dict[str, np.ndarray] = {}
    missing = []
    for i in ids:
        b = bundles.get(i)
        if b is None or b.eos_vector is None:
            missing.append(i)
        else:
            out[i] = np.asarray(b.eos_vector, dtype=np.float64)
    if missing:
        raise KeyError(f"no EOS vector for context(s): {missing[:5]}")
    return out
