import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contextcurate.embed import (
    AlignmentError,
    EmbeddingBundle,
    align_span,
    cosine,
    pool_pair,
    proximity,
    read_bundles,
    require_eos,
    synthetic_bundle_for,
    synthetic_embed,
    write_bundles,
)

from datagen import make_bundles, make_corpus, make_record


def bundle_from(matrix, offsets, cid="c1", eos=None):
    matrix = np.asarray(matrix, dtype=np.float64)
    return EmbeddingBundle(
        context_id=cid,
        dim=matrix.shape[1],
        offsets=tuple(offsets),
        matrix=matrix,
        eos_vector=None if eos is None else np.asarray(eos, dtype=np.float64),
    )


class TestBundleInvariants:
    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="shape"):
            bundle_from(np.zeros((2, 3)), [(0, 2)])

    def test_overlapping_offsets_rejected(self):
        with pytest.raises(ValueError, match="overlap"):
            bundle_from(np.zeros((2, 3)), [(0, 4), (2, 6)])

    def test_decreasing_offsets_rejected(self):
        with pytest.raises(ValueError, match="non-decreasing"):
            bundle_from(np.zeros((2, 3)), [(5, 8), (0, 3)])

    def test_bad_eos_length_rejected(self):
        with pytest.raises(ValueError, match="eos"):
            bundle_from(np.zeros((1, 3)), [(0, 2)], eos=[1.0, 2.0])

    def test_unknown_variant_rejected(self):
        with pytest.raises(ValueError, match="variant"):
            EmbeddingBundle(
                context_id="c",
                dim=2,
                offsets=((0, 1),),
                matrix=np.zeros((1, 2)),
                prompt_variant="surprise",
            )


class TestAlignSpan:
    # tokens: [0,5) [6,10) [11,15)
    OFFSETS = [(0, 5), (6, 10), (11, 15)]

    def bundle(self):
        return bundle_from(np.zeros((3, 2)), self.OFFSETS)

    def test_single_character_overlap_counts(self):
        assert align_span(self.bundle(), (4, 7)) == {0, 1}

    def test_touching_boundary_is_not_overlap(self):
        assert align_span(self.bundle(), (5, 7)) == {1}
        with pytest.raises(AlignmentError):
            align_span(self.bundle(), (5, 6))  # falls in the gap

    def test_no_overlap_raises(self):
        with pytest.raises(AlignmentError, match="no token overlaps"):
            align_span(self.bundle(), (15, 20))


class TestPoolPair:
    def test_hand_computed_means(self):
        matrix = [[1.0, 0.0], [3.0, 2.0], [5.0, 4.0]]
        pair = pool_pair(bundle_from(matrix, [(0, 1), (2, 3), (4, 5)]), {0})
        np.testing.assert_allclose(pair.word_vec, [1.0, 0.0])
        np.testing.assert_allclose(pair.context_vec, [4.0, 3.0])

    def test_empty_word_set_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            pool_pair(bundle_from(np.zeros((2, 2)), [(0, 1), (2, 3)]), set())

    def test_out_of_range_indices_rejected(self):
        with pytest.raises(ValueError, match="outside"):
            pool_pair(bundle_from(np.zeros((2, 2)), [(0, 1), (2, 3)]), {5})

    def test_word_covering_everything_rejected(self):
        with pytest.raises(ValueError, match="nothing left"):
            pool_pair(bundle_from(np.zeros((2, 2)), [(0, 1), (2, 3)]), {0, 1})


class TestCosine:
    def test_identity_orthogonal_antisymmetric(self):
        u = np.array([2.0, 0.0])
        assert cosine(u, u) == 1.0
        assert cosine(u, np.array([0.0, 3.0])) == 0.0
        assert cosine(u, -u) == -1.0

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError, match="zero-norm"):
            cosine(np.zeros(2), np.ones(2))

    @given(
        st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=8),
        st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=8),
    )
    def test_always_in_unit_interval(self, a, b):
        n = min(len(a), len(b))
        u, v = np.array(a[:n]), np.array(b[:n])
        if np.linalg.norm(u) == 0 or np.linalg.norm(v) == 0:
            return
        assert -1.0 <= cosine(u, v) <= 1.0


class TestProximity:
    def test_wrong_bundle_rejected(self, rng):
        rec = make_record("a", "zq2x0", 2, rng, (1,))
        bundle = synthetic_bundle_for(rec, dim=4, seed=0)
        other = dataclasses.replace(bundle, context_id="b")
        with pytest.raises(ValueError, match="belong"):
            proximity(rec, other)

    def test_multiple_occurrences_pool_together(self, rng):
        rec = make_record("a", "zq2x0", 2, rng, (1,), n_occurrences=3)
        bundle = synthetic_bundle_for(rec, dim=6, seed=1)
        # same lemma text -> identical synthetic rows, so the word vector
        # must equal any single occurrence's row
        idx = align_span(bundle, rec.occurrences[0])
        row = bundle.matrix[sorted(idx)[0]]
        got = proximity(rec, bundle)
        all_idx = set()
        for span in rec.occurrences:
            all_idx |= align_span(bundle, span)
        assert len(all_idx) == 3
        pair = pool_pair(bundle, all_idx)
        np.testing.assert_allclose(pair.word_vec, row)
        assert got == cosine(pair.word_vec, pair.context_vec)

    def test_scaling_invariance(self, rng):
        corpus = make_corpus(rng, bands=(4,), words_per_band=2, contexts_per_word=2)
        for rec in corpus.records:
            bundle = synthetic_bundle_for(rec, dim=8, seed=5)
            scaled = dataclasses.replace(bundle, matrix=bundle.matrix * 37.5)
            assert proximity(rec, bundle) == pytest.approx(
                proximity(rec, scaled), abs=1e-12
            )

    def test_permuting_rows_within_groups_is_exact(self, rng):
        rec = make_record("a", "zq2x0", 2, rng, (1,))
        bundle = synthetic_bundle_for(rec, dim=8, seed=5)
        word_idx = set()
        for span in rec.occurrences:
            word_idx |= align_span(bundle, span)
        rest = [i for i in range(bundle.n_tokens) if i not in word_idx]
        perm = list(range(bundle.n_tokens))
        shuffled = rest.copy()
        rng.shuffle(shuffled)
        for a, b in zip(rest, shuffled):
            perm[a] = b
        permuted = dataclasses.replace(bundle, matrix=bundle.matrix[perm])
        assert proximity(rec, bundle) == proximity(rec, permuted)


class TestSyntheticEmbed:
    def test_offsets_match_whitespace_tokens(self):
        text = "alpha  beta\ngamma"
        bundle = synthetic_embed(text, dim=4, seed=0)
        assert bundle.offsets == ((0, 5), (7, 11), (12, 17))
        for start, end in bundle.offsets:
            assert text[start:end].strip() == text[start:end]

    def test_deterministic_and_token_keyed(self):
        a = synthetic_embed("red blue red", dim=4, seed=9)
        b = synthetic_embed("red blue red", dim=4, seed=9)
        np.testing.assert_array_equal(a.matrix, b.matrix)
        np.testing.assert_array_equal(a.matrix[0], a.matrix[2])
        c = synthetic_embed("red blue red", dim=4, seed=10)
        assert not np.array_equal(a.matrix, c.matrix)

    def test_degenerate_inputs_rejected(self):
        with pytest.raises(ValueError):
            synthetic_embed("word", dim=1, seed=0)
        with pytest.raises(ValueError):
            synthetic_embed("   ", dim=4, seed=0)


class TestBundleIO:
    def test_round_trip_is_bit_exact(self, tmp_path, rng):
        corpus = make_corpus(rng, bands=(2,), words_per_band=2, contexts_per_word=3)
        bundles = make_bundles(corpus, dim=8, seed=3, with_eos=True)
        index = tmp_path / "b.ctxemb"
        bin_path = write_bundles(list(bundles.values()), index)
        assert bin_path.exists()
        loaded = read_bundles(index)
        assert set(loaded) == set(bundles)
        for cid, orig in bundles.items():
            got = loaded[cid]
            assert got.offsets == orig.offsets
            # float32 is the wire format; compare against the f32 cast
            np.testing.assert_array_equal(
                got.matrix, orig.matrix.astype(np.float32).astype(np.float64)
            )
            np.testing.assert_array_equal(
                got.eos_vector, orig.eos_vector.astype(np.float32).astype(np.float64)
            )

    def test_reload_of_reloaded_is_identical(self, tmp_path, rng):
        corpus = make_corpus(rng, bands=(2,), words_per_band=1, contexts_per_word=2)
        bundles = make_bundles(corpus, dim=4, seed=1, with_eos=True)
        first = tmp_path / "a.ctxemb"
        write_bundles(list(bundles.values()), first)
        loaded = read_bundles(first)
        second = tmp_path / "b.ctxemb"
        write_bundles(list(loaded.values()), second)
        reloaded = read_bundles(second)
        for cid in loaded:
            np.testing.assert_array_equal(loaded[cid].matrix, reloaded[cid].matrix)
            np.testing.assert_array_equal(loaded[cid].eos_vector, reloaded[cid].eos_vector)

    def test_bad_magic_rejected(self, tmp_path):
        index = tmp_path / "b.ctxemb"
        index.write_text('{"format": "WRONG"}\n', encoding="utf-8")
        (tmp_path / "b.bin").write_bytes(b"")
        with pytest.raises(ValueError, match="CTXEMB1"):
            read_bundles(index)

    def test_truncated_binary_rejected(self, tmp_path, rng):
        corpus = make_corpus(rng, bands=(2,), words_per_band=1, contexts_per_word=1)
        bundles = make_bundles(corpus, dim=4, seed=1)
        index = tmp_path / "b.ctxemb"
        bin_path = write_bundles(list(bundles.values()), index)
        payload = bin_path.read_bytes()
        bin_path.write_bytes(payload[: len(payload) // 2])
        with pytest.raises(ValueError, match="truncat"):
            read_bundles(index)


class TestRequireEos:
    def test_missing_eos_listed(self, rng):
        corpus = make_corpus(rng, bands=(2,), words_per_band=1, contexts_per_word=2)
        bundles = make_bundles(corpus, with_eos=False)
        ids = sorted(bundles)
        with pytest.raises(KeyError, match=ids[0]):
            require_eos(bundles, ids)

    def test_returns_float64(self, rng):
        corpus = make_corpus(rng, bands=(2,), words_per_band=1, contexts_per_word=2)
        bundles = make_bundles(corpus, with_eos=True)
        ids = sorted(bundles)
        eos = require_eos(bundles, ids)
        assert set(eos) == set(ids)
        assert all(v.dtype == np.float64 for v in eos.values())
