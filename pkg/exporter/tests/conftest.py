import os
import random

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")

import pytest
import torch
from tokenizers import Tokenizer
from tokenizers.models import WordPiece
from tokenizers.pre_tokenizers import Whitespace
from tokenizers.processors import TemplateProcessing
from transformers import BertConfig, BertModel, PreTrainedTokenizerFast

from contextcurate.corpus import Corpus, ContextRecord, TargetWord, aggregate_label, save_corpus

FILLER = (
    "the", "a", "an", "old", "new", "small", "large", "quiet", "bright", "dark",
    "river", "valley", "market", "garden", "window", "letter", "winter", "summer",
    "morning", "evening", "teacher", "student", "village", "city", "road", "bridge",
    "dog", "horse", "bird", "tree", "stone", "house", "door", "table", "chair",
    "walked", "stood", "looked", "carried", "opened", "closed", "watched", "found",
    "spoke", "waited", "returned", "crossed", "followed", "near", "under", "over",
    "between", "behind", "toward", "slowly", "quickly", "often", "rarely", "again",
)
LEMMAS = (
    "gavotte", "mizzen", "peripatetic", "susurrus", "vellum",
    "quixotic", "obstreperous", "numinous", "recondite", "halcyon",
)
# Words the prompt templates introduce, so EOS inputs tokenize cleanly too.
PROMPT_WORDS = (
    "rate", "how", "contextually", "informative", "context", "is", "about",
    "what", "definition", "of",
)

HIDDEN_SIZE = 32


def _vocab() -> dict[str, int]:
    words = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    words += sorted(set(FILLER) | set(LEMMAS) | set(PROMPT_WORDS))
    return {w: i for i, w in enumerate(words)}


@pytest.fixture(scope="session")
def encoder_dir(tmp_path_factory):
    """A tiny randomly initialized BERT whose vocab covers the toy corpus."""
    out = tmp_path_factory.mktemp("tinybert")
    vocab = _vocab()
    tk = Tokenizer(WordPiece(vocab, unk_token="[UNK]"))
    tk.pre_tokenizer = Whitespace()
    tk.post_processor = TemplateProcessing(
        single="[CLS]:0 $A:0 [SEP]:0",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])],
    )
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tk,
        unk_token="[UNK]",
        pad_token="[PAD]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        mask_token="[MASK]",
    )
    fast.model_max_length = 96
    fast.save_pretrained(out)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=HIDDEN_SIZE,
        num_hidden_layers=2,
        num_attention_heads=4,
        intermediate_size=64,
        max_position_embeddings=96,
    )
    torch.manual_seed(20240814)
    BertModel(config).eval().save_pretrained(out)
    return out


def make_snippet(rng, lemma, n_filler, lemma_positions):
    words = [rng.choice(FILLER) for _ in range(n_filler)]
    for pos in sorted(lemma_positions, reverse=True):
        words.insert(pos, lemma)
    spans = []
    offset = 0
    for w in words:
        if w == lemma:
            spans.append((offset, offset + len(w)))
        offset += len(w) + 1
    return " ".join(words), tuple(spans)


def build_corpus(n_contexts=50, seed=4242, n_filler=41, lemma_positions=None):
    """Toy corpus with the target word planted at known character spans.

    Filler words and lemmas are disjoint pools, so every span is exact.
    """
    rng = random.Random(seed)
    records = []
    for i in range(n_contexts):
        lemma = LEMMAS[i % len(LEMMAS)]
        band = (i % len(LEMMAS)) + 1
        positions = lemma_positions if lemma_positions is not None else sorted(
            rng.sample(range(n_filler), 2)
        )
        snippet, spans = make_snippet(rng, lemma, n_filler, positions)
        ratings = tuple(rng.choice((-1, 0, 1, 2)) for _ in range(3))
        records.append(
            ContextRecord(
                id=f"ctx-{i:03d}",
                word=TargetWord(lemma, band),
                snippet=snippet,
                occurrences=spans,
                ratings=ratings,
                gold=aggregate_label(ratings),
            )
        )
    words = tuple(sorted({r.word for r in records}, key=lambda w: (w.band, w.lemma)))
    return Corpus(records=tuple(records), words=words)


@pytest.fixture(scope="session")
def hidden_size():
    return HIDDEN_SIZE


@pytest.fixture(scope="session")
def corpus():
    return build_corpus()


@pytest.fixture(scope="session")
def corpus_path(tmp_path_factory, corpus):
    path = tmp_path_factory.mktemp("corpus") / "corpus.jsonl"
    save_corpus(corpus, path)
    return path


@pytest.fixture(scope="session")
def tail_corpus_path(tmp_path_factory):
    """Four contexts whose only target occurrence sits near the snippet end."""
    path = tmp_path_factory.mktemp("tailcorpus") / "corpus.jsonl"
    save_corpus(build_corpus(n_contexts=4, seed=99, lemma_positions=[40]), path)
    return path


@pytest.fixture(scope="session")
def mixed_corpus_path(tmp_path_factory):
    """Four contexts with one early and one late target occurrence."""
    path = tmp_path_factory.mktemp("mixedcorpus") / "corpus.jsonl"
    save_corpus(build_corpus(n_contexts=4, seed=99, lemma_positions=[1, 40]), path)
    return path
