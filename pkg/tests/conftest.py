import numpy as np
import pytest

from contextcurate.corpus import save_corpus
from contextcurate.embed import write_bundles

from datagen import make_bundles, make_corpus, write_feature_csv


@pytest.fixture
def rng():
    return np.random.default_rng(20240814)


@pytest.fixture
def tiny_corpus(rng):
    return make_corpus(rng)


@pytest.fixture
def tiny_bundles(tiny_corpus):
    return make_bundles(tiny_corpus)


@pytest.fixture
def dataset_dir(tmp_path, rng):
    """corpus.jsonl + features.csv + bundles on disk, for CLI tests."""
    corpus = make_corpus(rng, bands=(2, 5), words_per_band=3, contexts_per_word=4)
    save_corpus(corpus, tmp_path / "corpus.jsonl")
    write_feature_csv(corpus, tmp_path / "features.csv", rng)
    bundles = make_bundles(corpus, dim=8, seed=3, with_eos=True)
    write_bundles(list(bundles.values()), tmp_path / "bundles.ctxemb")
    return tmp_path
