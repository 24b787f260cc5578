"""Encoder-to-bundle export tool for the contextcurate engine."""

from .export import MODES, Encoder, ExportJob, ExportReport, TruncationWarning, export_bundles, pooled_cosine
from .prompts import TEMPLATES, VARIANTS, build_prompt, compose_input

__all__ = [
    "MODES",
    "Encoder",
    "ExportJob",
    "ExportReport",
    "TruncationWarning",
    "export_bundles",
    "pooled_cosine",
    "TEMPLATES",
    "VARIANTS",
    "build_prompt",
    "compose_input",
]
