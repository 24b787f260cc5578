"""Threshold-based curation decisions and their quality/volume trade-off.

A scored context is used iff its score strictly exceeds the threshold.
Sweeping the threshold over a grid yields, per threshold, the conditional
label distribution among accepted contexts, the throwout rate, and the
good-to-bad ratio. Plotting ratio against throwout gives the retention
curve whose trapezoidal area is the scalar summary.

All counting is exact integer arithmetic on a score-sorted copy of the set;
probabilities and ratios are formed from those counts at the end.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Iterable, Sequence

USE = "use"
NOT_USE = "not_use"

# Labels at or above this are "good" for the ratio numerator; strictly below
# zero is "bad". The strict variant (> instead of >=) is opt-in.
GOOD_CUTOFF = 1.0


@dataclass(frozen=True)
class ScoredSet:
    """(context id, score, gold label) triples with unique ids."""

    entries: tuple[tuple[str, float, float], ...]

    def __post_init__(self):
        seen = set()
        for cid, score, gold in self.entries:
            if cid in seen:
                raise ValueError(f"duplicate context id {cid!r} in scored set")
            seen.add(cid)
            if not (math.isfinite(score) and math.isfinite(gold)):
                raise ValueError(f"non-finite score or gold for {cid!r}")

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def from_pairs(cls, triples: Iterable[tuple[str, float, float]]) -> "ScoredSet":
        return cls(entries=tuple((str(c), float(s), float(g)) for c, s, g in triples))


@dataclass(frozen=True)
class SweepRow:
    threshold: float
    p_neg: float  # P(Y < 0 | accepted)
    p_mid: float  # P(0 <= Y < 0.5 | accepted)
    p_good: float  # P(Y >= 1 | accepted)
    throwout: float
    ratio: float  # good-to-bad among accepted; NaN when undefined
    n_accepted: int


@dataclass(frozen=True)
class RCCurve:
    points: tuple[tuple[float, float], ...]
    auc: float


def decide(score: float, threshold: float) -> str:
    if not (math.isfinite(score) and math.isfinite(threshold)):
        raise ValueError("score and threshold must be finite")
    return USE if score > threshold else NOT_USE


def sweep(
    scored: ScoredSet, thresholds: Sequence[float], good_strict: bool = False
) -> list[SweepRow]:
    """One row per threshold, by exact counting on the score-sorted set.

    Accepted means score strictly above the threshold. Conditional
    probabilities are NaN when nothing is accepted; the ratio is NaN whenever
    its denominator (accepted with gold < 0) is zero.
    """
    if len(scored) == 0:
        raise ValueError("cannot sweep an empty scored set")
    thresholds = [float(t) for t in thresholds]
    if any(b < a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be sorted ascending")

    ordered = sorted(scored.entries, key=lambda e: e[1])
    scores = [e[1] for e in ordered]
    golds = [e[2] for e in ordered]
    n = len(ordered)

    # suffix[i] = count over positions i..n-1; one pass from the right.
    neg = [0] * (n + 1)
    mid = [0] * (n + 1)
    good = [0] * (n + 1)
    numer = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        g = golds[i]
        neg[i] = neg[i + 1] + (g < 0)
        mid[i] = mid[i + 1] + (0 <= g < 0.5)
        good[i] = good[i + 1] + (g >= GOOD_CUTOFF)
        numer[i] = numer[i + 1] + ((g > GOOD_CUTOFF) if good_strict else (g >= GOOD_CUTOFF))

    nan = float("nan")
    rows = []
    for t in thresholds:
        idx = bisect_right(scores, t)
        n_acc = n - idx
        if n_acc == 0:
            rows.append(SweepRow(t, nan, nan, nan, 1.0, nan, 0))
            continue
        ratio = numer[idx] / neg[idx] if neg[idx] else nan
        rows.append(
            SweepRow(
                threshold=t,
                p_neg=neg[idx] / n_acc,
                p_mid=mid[idx] / n_acc,
                p_good=good[idx] / n_acc,
                throwout=1.0 - n_acc / n,
                ratio=ratio,
                n_accepted=n_acc,
            )
        )
    return rows


def default_threshold_grid(scores: Sequence[float]) -> list[float]:
    """Step-0.01 grid at x.xx5 offsets spanning the score range.

    Built in integer thousandths; the 1e-9 nudges keep floor/ceil honest when
    score*100 lands a hair off an integer (0.29*100 = 28.999...).
    """
    scores = list(scores)
    if not scores:
        raise ValueError("cannot build a grid from no scores")
    lo, hi = min(scores), max(scores)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("scores must be finite")
    start = 10 * math.floor(lo * 100 + 1e-9) - 5
    end = 10 * math.ceil(hi * 100 - 1e-9) + 5
    return [m / 1000 for m in range(start, end + 1, 10)]


def rcc(rows: Sequence[SweepRow]) -> RCCurve:
    """Retention curve: (throwout, ratio) points and their trapezoidal area.

    NaN-ratio rows are dropped, and rows sharing a throwout collapse to the
    last one (equal throwout means an identical accepted set, so the rows
    carry identical statistics; keeping the last pins the choice).
    """
    points: list[tuple[float, float]] = []
    for row in rows:
        if math.isnan(row.ratio):
            continue
        if points and points[-1][0] == row.throwout:
            points[-1] = (row.throwout, row.ratio)
        else:
            points.append((row.throwout, row.ratio))
    if len(points) < 2:
        raise ValueError("need at least two finite-ratio points for a curve")
    if any(b[0] <= a[0] for a, b in zip(points, points[1:])):
        raise ValueError("throwout must increase along the curve")
    auc = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        auc += 0.5 * (y0 + y1) * (x1 - x0)
    return RCCurve(points=tuple(points), auc=auc)


def reference_point(rows: Sequence[SweepRow], target_throwout: float = 0.70) -> SweepRow:
    """The sweep row whose throwout is nearest the target; ties break low."""
    if not rows:
        raise ValueError("no rows to pick a reference from")
    return min(rows, key=lambda r: (abs(r.throwout - target_throwout), r.threshold))
