import time
from types import SimpleNamespace

import numpy as np
import pytest

from sugmine.config import from_dict
from sugmine.embed import SkipGramConfig, build_vocab, train_skipgram
from sugmine.synthetic import make_corpus
from sugmine.textprep import tokenize
from sugmine.xformer import TransformerConfig, TransformerModel


def tiny_cfg(**kw):
    base = dict(n_layers=1, d_model=8, n_heads=2, d_ff=16, adapter_dim=2, max_len=12, epochs=2, batch_size=4)
    base.update(kw)
    return TransformerConfig(**base)


@pytest.fixture(scope="session")
def corpus500():
    return make_corpus(500, seed=3)


@pytest.fixture(scope="session")
def small_space(corpus500):
    """Vocabulary plus short skip-gram vectors on the 500-review corpus."""
    train = corpus500.split("train")
    toks = [tokenize(r.text).tokens for r in train.reviews]
    vocab = build_vocab(toks)
    emb = train_skipgram(toks, vocab, SkipGramConfig(d_emb=16, epochs=2, seed=5))
    return vocab, emb


@pytest.fixture
def random_model():
    rng = np.random.default_rng(0)
    table = rng.normal(size=(30, 8))
    table[0] = 0.0
    return TransformerModel(tiny_cfg(), table)


@pytest.fixture(scope="session")
def trained_run():
    """Full-size run on the 4000-review corpus with default settings.

    Shared by the acceptance suite and the tests that need a model that
    has actually learned the task.
    """
    from threadpoolctl import threadpool_limits

    from sugmine.config import RunConfig
    from sugmine.pipeline import run_pipeline

    corpus = make_corpus(4000, seed=0)
    start = time.perf_counter()
    with threadpool_limits(1):
        arts, rep = run_pipeline(corpus.split("train"), corpus.split("test"), RunConfig())
    return SimpleNamespace(arts=arts, report=rep, elapsed=time.perf_counter() - start, corpus=corpus)


# Acceptance verdict lines, echoed in the terminal summary so they show up
# even when output capture is on.
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
