"""Deterministic renderers for sweep tables, retention curves, and reports.

Every renderer is a pure function from values to text: no timestamps, no
environment probes, no dict-order dependence. Two runs with the same inputs
must produce byte-identical artifacts, and the tests hold them to that.

Numeric surfaces: probabilities, rates, and ratios render with 4 decimals
and NaN renders as the literal ``nan``; thresholds render with 3 decimals
(the default grid lives on thousandths). The retention-curve CSV keeps full
float precision so downstream re-integration is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .corpus import CorpusSummary
from .curate import RCCurve, SweepRow
from .eval import MetricReport

SWEEP_HEADER = "threshold,p_y_lt_0,p_y_0_05,p_y_ge_1,throwout_rate,good_to_bad_ratio,n_accepted"

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


@dataclass(frozen=True)
class RunReport:
    """Everything a finished run needs to render its markdown summary."""

    model_spec: str
    summary: CorpusSummary
    sweep_rows: tuple[SweepRow, ...]
    curve: RCCurve
    reference: SweepRow
    metrics: dict[str, MetricReport]
    config_echo: dict[str, object]
    seed: int


def _fmt4(x: float) -> str:
    return "nan" if math.isnan(x) else f"{x:.4f}"


def _fmt_threshold(x: float) -> str:
    return f"{x:.3f}"


def _sweep_line(row: SweepRow) -> str:
    return ",".join(
        (
            _fmt_threshold(row.threshold),
            _fmt4(row.p_neg),
            _fmt4(row.p_mid),
            _fmt4(row.p_good),
            _fmt4(row.throwout),
            _fmt4(row.ratio),
            str(row.n_accepted),
        )
    )


def render_sweep_csv(rows: Sequence[SweepRow]) -> str:
    if not rows:
        raise ValueError("no sweep rows to render")
    lines = [SWEEP_HEADER]
    lines.extend(_sweep_line(r) for r in rows)
    return "\n".join(lines) + "\n"


def parse_sweep_csv(text: str) -> list[SweepRow]:
    lines = text.strip().split("\n")
    if not lines or lines[0] != SWEEP_HEADER:
        raise ValueError("unrecognized sweep CSV header")
    rows = []
    for line in lines[1:]:
        cells = line.split(",")
        if len(cells) != 7:
            raise ValueError(f"malformed sweep row: {line!r}")
        rows.append(
            SweepRow(
                threshold=float(cells[0]),
                p_neg=float(cells[1]),
                p_mid=float(cells[2]),
                p_good=float(cells[3]),
                throwout=float(cells[4]),
                ratio=float(cells[5]),
                n_accepted=int(cells[6]),
            )
        )
    return rows


def render_rcc_csv(curve: RCCurve) -> str:
    # repr floats: lossless, so AUC can be recomputed from the file exactly.
    lines = ["throwout,ratio"]
    lines.extend(f"{x!r},{y!r}" for x, y in curve.points)
    return "\n".join(lines) + "\n"


def render_metrics_csv(reports: Mapping[str, MetricReport]) -> str:
    if not reports:
        raise ValueError("no metric reports to render")
    lines = ["model,rmse,r2,pearson_r,spearman_rho,n"]
    for label in sorted(reports):
        m = reports[label]
        lines.append(
            f"{label},{m.rmse:.6f},{m.r2:.6f},{m.pearson_r:.6f},{m.spearman_rho:.6f},{m.n}"
        )
    return "\n".join(lines) + "\n"


def render_metrics_md(
    reports: Mapping[str, MetricReport],
    static_rows: Mapping[str, tuple[float, float]] | None = None,
) -> str:
    """Model-per-row table of RMSE and R^2; static rows carry fixed baselines."""
    lines = ["| model | RMSE | R^2 |", "| --- | --- | --- |"]
    for label in sorted(reports):
        m = reports[label]
        lines.append(f"| {label} | {m.rmse:.2f} | {m.r2:.2f} |")
    for label in sorted(static_rows or {}):
        rm, r2 = static_rows[label]
        lines.append(f"| {label} | {rm:.2f} | {r2:.2f} |")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# SVG. Hand-assembled so the output is dependency-free and byte-stable.
# Curves are the only <polyline> elements; axes, ticks, and the reference
# marker are <line> elements, which keeps structural tests unambiguous.
# ---------------------------------------------------------------------------

_W, _H = 640.0, 480.0
_LEFT, _RIGHT, _TOP, _BOTTOM = 70.0, 460.0, 20.0, 430.0


def _sx(throwout: float) -> float:
    return _LEFT + (_RIGHT - _LEFT) * throwout


def _sy(ratio: float, ymax: float) -> float:
    return _BOTTOM - (_BOTTOM - _TOP) * (ratio / ymax)


def render_rcc_svg(
    curves: Sequence[tuple[str, RCCurve]], reference_throwout: float = 0.70
) -> str:
    if not curves:
        raise ValueError("no curves to plot")
    for label, curve in curves:
        if len(curve.points) < 2:
            raise ValueError(f"curve {label!r} is degenerate")
    ymax = max(y for _, c in curves for _, y in c.points)
    ymax = ymax * 1.05 if ymax > 0 else 1.0

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_W:.0f} {_H:.0f}" '
        f'font-family="sans-serif" font-size="12">',
        f'<rect width="{_W:.0f}" height="{_H:.0f}" fill="white"/>',
        # axes
        f'<line x1="{_LEFT:.2f}" y1="{_BOTTOM:.2f}" x2="{_RIGHT:.2f}" y2="{_BOTTOM:.2f}" stroke="black"/>',
        f'<line x1="{_LEFT:.2f}" y1="{_TOP:.2f}" x2="{_LEFT:.2f}" y2="{_BOTTOM:.2f}" stroke="black"/>',
    ]
    for i in range(5):
        t = i / 4
        x = _sx(t)
        parts.append(
            f'<line x1="{x:.2f}" y1="{_BOTTOM:.2f}" x2="{x:.2f}" y2="{_BOTTOM + 5:.2f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{_BOTTOM + 18:.2f}" text-anchor="middle">{t:.2f}</text>'
        )
        y_val = ymax * t
        y = _sy(y_val, ymax)
        parts.append(
            f'<line x1="{_LEFT - 5:.2f}" y1="{y:.2f}" x2="{_LEFT:.2f}" y2="{y:.2f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_LEFT - 8:.2f}" y="{y + 4:.2f}" text-anchor="end">{y_val:.1f}</text>'
        )
    parts.append(
        f'<text x="{(_LEFT + _RIGHT) / 2:.2f}" y="{_H - 10:.2f}" text-anchor="middle">throwout rate</text>'
    )
    parts.append(
        f'<text x="18" y="{(_TOP + _BOTTOM) / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {(_TOP + _BOTTOM) / 2:.2f})">good-to-bad ratio</text>'
    )

    rx = _sx(reference_throwout)
    parts.append(
        f'<line x1="{rx:.2f}" y1="{_TOP:.2f}" x2="{rx:.2f}" y2="{_BOTTOM:.2f}" '
        f'stroke="gray" stroke-dasharray="4 3"/>'
    )
    parts.append(
        f'<text x="{rx + 4:.2f}" y="{_TOP + 12:.2f}" fill="gray">'
        f"{reference_throwout * 100:.0f}% throwout</text>"
    )

    for i, (label, curve) in enumerate(curves):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{_sx(x):.2f},{_sy(y, ymax):.2f}" for x, y in curve.points)
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = _TOP + 16 * i
        parts.append(
            f'<line x1="{_RIGHT + 12:.2f}" y1="{ly + 6:.2f}" x2="{_RIGHT + 36:.2f}" y2="{ly + 6:.2f}" '
            f'stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{_RIGHT + 42:.2f}" y="{ly + 10:.2f}">{label} (AUC={curve.auc:.1f})</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_report_md(run: RunReport) -> str:
    """One markdown document tying the run's artifacts together."""
    s = run.summary
    lines = [
        "# Curation run report",
        "",
        f"Model spec: `{run.model_spec}`",
        f"Seed: {run.seed}",
        "",
        "## Configuration",
        "",
        "```",
    ]
    for key in sorted(run.config_echo):
        lines.append(f"{key} = {run.config_echo[key]}")
    lines.extend(
        [
            "```",
            "",
            "## Corpus",
            "",
            f"- contexts: {s.n_contexts}",
            f"- target words: {s.n_words}",
            f"- gold label mean: {s.gold_mean:.4f}",
            f"- gold label sd: {s.gold_sd:.4f} (sample estimator, n-1 denominator)",
            f"- misdirective fraction (gold < 0): {s.frac_misdirective:.4f}",
            f"- directive fraction (gold > 1): {s.frac_directive:.4f}",
            "- words per band: "
            + ", ".join(f"{b}:{c}" for b, c in sorted(s.band_word_counts.items())),
            "",
            "## Metrics",
            "",
        ]
    )
    lines.append(render_metrics_md(run.metrics).rstrip("\n"))
    lines.append("")
    for label in sorted(run.metrics):
        m = run.metrics[label]
        lines.append(
            f"- {label}: Pearson r = {m.pearson_r:.4f}, Spearman rho = {m.spearman_rho:.4f} "
            f"(n = {m.n})"
        )
    ref = run.reference
    target = float(run.config_echo.get("target_throwout", 0.70))
    lines.extend(
        [
            "",
            "## Threshold sweep",
            "",
            f"Reference point nearest {target * 100:.0f}% throwout "
            f"(threshold {_fmt_threshold(ref.threshold)}):",
            "",
            "```",
            SWEEP_HEADER,
            _sweep_line(ref),
            "```",
            "",
            f"Full table: [sweep.csv](sweep.csv) ({len(run.sweep_rows)} thresholds, "
            f"{_fmt_threshold(run.sweep_rows[0].threshold)} to "
            f"{_fmt_threshold(run.sweep_rows[-1].threshold)}).",
            "",
            "## Retention curve",
            "",
            f"- trapezoidal AUC: {run.curve.auc:.4f}",
            f"- points: {len(run.curve.points)} ([rcc.csv](rcc.csv))",
            "- plot: [rcc.svg](rcc.svg)",
            "",
        ]
    )
    return "\n".join(lines)
