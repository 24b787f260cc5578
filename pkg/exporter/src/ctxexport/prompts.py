"""Query-side prompt templates for instruction-conditioned export."""

from __future__ import annotations

TEMPLATES = {
    "plain": "{word}",
    "instruction": "Rate how contextually informative the context is about {word}",
    "hybrid": "What is the definition of {word}?",
}
VARIANTS = tuple(TEMPLATES)


def build_prompt(variant: str, target_word: str) -> str:
    """The query string for one variant. Byte-stable: downstream embeddings
    are only comparable when the prompt never drifts."""
    if not target_word:
        raise ValueError("target word must be non-empty")
    template = TEMPLATES.get(variant)
    if template is None:
        raise ValueError(f"unknown prompt variant {variant!r}; expected one of {VARIANTS}")
    return template.format(word=target_word)


def compose_input(variant: str, target_word: str, snippet: str) -> str:
    """Single-sequence input for EOS extraction: prompt, newline, then the
    plain text of the context."""
    return build_prompt(variant, target_word) + "\n" + snippet
