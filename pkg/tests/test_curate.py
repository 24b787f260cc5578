import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contextcurate.curate import (
    NOT_USE,
    USE,
    ScoredSet,
    SweepRow,
    decide,
    default_threshold_grid,
    rcc,
    reference_point,
    sweep,
)

from oracles import brute_force_sweep, trapezoid

GOLDS = (-1.0, -0.5, 0.0, 0.25, 0.49, 0.5, 0.99, 1.0, 1.5, 2.0)


def random_set(rng, n):
    return ScoredSet.from_pairs(
        (f"c{i:04d}", rng.uniform(-1, 1), rng.choice(GOLDS)) for i in range(n)
    )


def rows_equal(a: SweepRow, b: tuple) -> bool:
    got = (a.threshold, a.p_neg, a.p_mid, a.p_good, a.throwout, a.ratio, a.n_accepted)
    return all(
        (isinstance(x, float) and isinstance(y, float) and math.isnan(x) and math.isnan(y))
        or x == y
        for x, y in zip(got, b)
    )


class TestDecide:
    def test_strictly_above_is_used(self):
        assert decide(0.51, 0.5) == USE
        assert decide(0.5, 0.5) == NOT_USE
        assert decide(0.49, 0.5) == NOT_USE

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            decide(float("nan"), 0.5)
        with pytest.raises(ValueError):
            decide(0.5, float("inf"))


class TestScoredSet:
    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            ScoredSet.from_pairs([("a", 0.1, 1.0), ("a", 0.2, 0.0)])

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            ScoredSet.from_pairs([("a", float("nan"), 1.0)])

    def test_from_pairs_coerces(self):
        s = ScoredSet.from_pairs([(7, 1, 2)])
        assert s.entries == (("7", 1.0, 2.0),)
        assert len(s) == 1


class TestSweep:
    def test_matches_brute_force_on_random_sets(self, rng):
        for trial in range(30):
            scored = random_set(rng, int(rng.integers(1, 60)))
            strict = bool(trial % 2)
            grid = default_threshold_grid([s for _, s, _ in scored.entries])
            got = sweep(scored, grid, good_strict=strict)
            want = brute_force_sweep(scored.entries, grid, good_strict=strict)
            assert len(got) == len(want)
            for g, w in zip(got, want):
                assert rows_equal(g, w), (g, w)

    def test_accept_all_matches_whole_set_fractions(self, rng):
        scored = random_set(rng, 40)
        golds = [g for _, _, g in scored.entries]
        (row,) = sweep(scored, [-2.0])
        assert row.n_accepted == 40
        assert row.throwout == 0.0
        assert row.p_neg == sum(g < 0 for g in golds) / 40
        assert row.p_mid == sum(0 <= g < 0.5 for g in golds) / 40
        assert row.p_good == sum(g >= 1 for g in golds) / 40

    def test_score_equal_to_threshold_is_rejected(self):
        scored = ScoredSet.from_pairs([("a", 0.5, 2.0), ("b", 0.6, 2.0)])
        (row,) = sweep(scored, [0.5])
        assert row.n_accepted == 1
        assert row.throwout == 0.5

    def test_nothing_accepted_row(self):
        scored = ScoredSet.from_pairs([("a", 0.1, 1.0)])
        (row,) = sweep(scored, [0.9])
        assert row.n_accepted == 0
        assert row.throwout == 1.0
        assert math.isnan(row.p_neg) and math.isnan(row.ratio)

    def test_ratio_denominator_zero_is_nan(self):
        scored = ScoredSet.from_pairs([("a", 0.3, 1.5), ("b", 0.4, 0.2)])
        (row,) = sweep(scored, [0.0])
        assert math.isnan(row.ratio)
        assert row.p_neg == 0.0

    def test_good_strict_drops_exactly_one(self):
        scored = ScoredSet.from_pairs(
            [("a", 0.5, 1.0), ("b", 0.6, 1.5), ("c", 0.7, -1.0)]
        )
        (lax,) = sweep(scored, [0.0], good_strict=False)
        (strict,) = sweep(scored, [0.0], good_strict=True)
        assert lax.ratio == 2.0
        assert strict.ratio == 1.0
        # p_good itself keeps the inclusive definition either way.
        assert lax.p_good == strict.p_good

    def test_unsorted_thresholds_rejected(self, rng):
        scored = random_set(rng, 5)
        with pytest.raises(ValueError, match="sorted"):
            sweep(scored, [0.5, 0.4])

    def test_empty_set_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            sweep(ScoredSet(entries=()), [0.5])

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(
            st.tuples(st.floats(-1, 1), st.sampled_from(GOLDS)),
            min_size=1,
            max_size=40,
        )
    )
    def test_sweep_invariants(self, pairs):
        scored = ScoredSet.from_pairs(
            (f"c{i}", s, g) for i, (s, g) in enumerate(pairs)
        )
        grid = default_threshold_grid([s for s, _ in pairs])
        rows = sweep(scored, grid)
        assert rows[0].n_accepted == len(pairs)  # grid starts below the min
        assert rows[-1].n_accepted == 0  # and ends above the max
        for a, b in zip(rows, rows[1:]):
            assert b.n_accepted <= a.n_accepted
            assert b.throwout >= a.throwout
        for row in rows:
            assert 0.0 <= row.throwout <= 1.0
            if row.n_accepted:
                assert row.p_neg + row.p_mid + row.p_good <= 1.0 + 1e-12
                for p in (row.p_neg, row.p_mid, row.p_good):
                    assert 0.0 <= p <= 1.0


class TestDefaultThresholdGrid:
    def test_span_and_offsets(self):
        grid = default_threshold_grid([0.21, 0.99])
        assert grid[0] == 0.205
        assert grid[-1] == 0.995
        assert len(grid) == 80
        steps = {round(b - a, 12) for a, b in zip(grid, grid[1:])}
        assert steps == {0.01}

    def test_single_score(self):
        assert default_threshold_grid([0.5]) == [0.495, 0.505]

    def test_hundredths_that_round_down(self):
        # 0.29 * 100 is 28.999... in binary; the grid must still treat it as 29.
        assert default_threshold_grid([0.29]) == [0.285, 0.295]

    def test_negative_scores(self):
        grid = default_threshold_grid([-0.013, 0.013])
        assert grid == [-0.025, -0.015, -0.005, 0.005, 0.015, 0.025]

    def test_grid_brackets_every_score(self, rng):
        for _ in range(20):
            scores = rng.uniform(-3, 3, size=int(rng.integers(1, 30)))
            grid = default_threshold_grid(scores)
            assert grid[0] < scores.min()
            assert grid[-1] > scores.max()

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            default_threshold_grid([])
        with pytest.raises(ValueError):
            default_threshold_grid([float("inf")])


def mkrow(threshold, throwout, ratio):
    return SweepRow(
        threshold=threshold,
        p_neg=0.0,
        p_mid=0.0,
        p_good=1.0,
        throwout=throwout,
        ratio=ratio,
        n_accepted=1,
    )


class TestRcc:
    def test_constant_ratio_area(self):
        rows = [mkrow(t / 10, t / 10, 10.0) for t in range(11)]
        curve = rcc(rows)
        assert curve.auc == pytest.approx(10.0, abs=1e-9)

    def test_single_trapezoid(self):
        curve = rcc([mkrow(0.0, 0.0, 0.0), mkrow(1.0, 1.0, 100.0)])
        assert curve.auc == pytest.approx(50.0, abs=1e-9)
        assert curve.points == ((0.0, 0.0), (1.0, 100.0))

    def test_nan_rows_are_dropped(self):
        rows = [
            mkrow(0.0, 0.0, 1.0),
            mkrow(0.1, 0.5, float("nan")),
            mkrow(0.2, 1.0, 3.0),
        ]
        assert rcc(rows).points == ((0.0, 1.0), (1.0, 3.0))

    def test_duplicate_throwout_keeps_last(self):
        rows = [mkrow(0.0, 0.2, 5.0), mkrow(0.1, 0.2, 7.0), mkrow(0.2, 0.4, 9.0)]
        curve = rcc(rows)
        assert curve.points == ((0.2, 7.0), (0.4, 9.0))

    def test_too_few_points_rejected(self):
        with pytest.raises(ValueError, match="two"):
            rcc([mkrow(0.0, 0.0, 1.0)])
        with pytest.raises(ValueError, match="two"):
            rcc([mkrow(0.0, 0.0, float("nan"))] * 5)

    def test_decreasing_throwout_rejected(self):
        with pytest.raises(ValueError, match="increase"):
            rcc([mkrow(0.0, 0.4, 1.0), mkrow(0.1, 0.2, 2.0)])

    def test_matches_hand_deduplication_on_real_sweeps(self, rng):
        for _ in range(10):
            scored = random_set(rng, 50)
            grid = default_threshold_grid([s for _, s, _ in scored.entries])
            rows = sweep(scored, grid)
            keep = {}
            for row in rows:
                if not math.isnan(row.ratio):
                    keep[row.throwout] = row.ratio
            expected = tuple(sorted(keep.items()))
            if len(expected) < 2:
                continue
            curve = rcc(rows)
            assert curve.points == expected
            assert curve.auc == pytest.approx(trapezoid(expected), abs=1e-12)


class TestReferencePoint:
    def test_picks_nearest_throwout(self):
        rows = [mkrow(0.1, 0.68, 1.0), mkrow(0.2, 0.71, 2.0), mkrow(0.3, 0.74, 3.0)]
        assert reference_point(rows, 0.70).throwout == 0.71

    def test_exact_target_wins(self):
        rows = [mkrow(0.1, 0.69, 1.0), mkrow(0.2, 0.70, 2.0), mkrow(0.3, 0.71, 3.0)]
        assert reference_point(rows, 0.70).throwout == 0.70

    def test_tie_breaks_to_lower_threshold(self):
        rows = [mkrow(0.3, 0.72, 1.0), mkrow(0.1, 0.68, 2.0)]
        assert reference_point(rows, 0.70).threshold == 0.1

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            reference_point([], 0.70)
