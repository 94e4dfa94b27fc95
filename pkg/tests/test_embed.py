import numpy as np
import pytest

from sugmine.embed import (
    CLS,
    PAD,
    UNK,
    SkipGramConfig,
    build_vocab,
    cosine,
    embed_sequence,
    load_embeddings,
    save_embeddings,
    skipgram_loss_grad,
    train_skipgram,
)


def test_vocab_ordering_and_threshold():
    v = build_vocab([["a", "b", "a"]])
    assert v.index_to_token == ["<pad>", "<unk>", "<cls>", "a", "b"]
    v2 = build_vocab([["a", "b", "a"]], min_count=2)
    assert "b" not in v2.token_to_index
    assert v2.index("b") == UNK == 1


def test_vocab_json_roundtrip():
    v = build_vocab([["x", "y", "y", "z"]])
    v2 = type(v).from_json(v.to_json())
    assert v2 == v


def test_encode_layout():
    v = build_vocab([["a", "b"]])
    ids = v.encode(["a", "zzz"], 5)
    assert ids.tolist() == [CLS, v.index("a"), UNK, PAD, PAD]
    assert v.encode(["a"] * 10, 4).tolist() == [CLS] + [v.index("a")] * 3


def _fd_check(rng):
    V, d, B, K = 5, 3, 4, 2
    w_in = rng.normal(size=(V, d))
    w_out = rng.normal(size=(V, d))
    c = rng.integers(0, V, B)
    o = rng.integers(0, V, B)
    n = rng.integers(0, V, (B, K))
    _, gc, go, gn = skipgram_loss_grad(w_in, w_out, c, o, n)
    g_in = np.zeros_like(w_in)
    g_out = np.zeros_like(w_out)
    np.add.at(g_in, c, gc)
    np.add.at(g_out, o, go)
    np.add.at(g_out, n.ravel(), gn.reshape(-1, d))
    eps = 1e-6
    worst = 0.0
    for table, grad in ((w_in, g_in), (w_out, g_out)):
        for idx in np.ndindex(table.shape):
            old = table[idx]
            table[idx] = old + eps
            lp = skipgram_loss_grad(w_in, w_out, c, o, n)[0]
            table[idx] = old - eps
            lm = skipgram_loss_grad(w_in, w_out, c, o, n)[0]
            table[idx] = old
            num = (lp - lm) / (2 * eps)
            worst = max(worst, abs(num - grad[idx]) / max(abs(num), abs(grad[idx]), 1e-8))
    return worst


def test_skipgram_gradient_matches_finite_differences():
    assert _fd_check(np.random.default_rng(1)) < 1e-4


def test_skipgram_shape_determinism_and_pad(small_space, corpus500):
    vocab, emb = small_space
    assert emb.vectors.shape == (len(vocab), 16)
    assert not emb.vectors[PAD].any()
    from sugmine.textprep import tokenize

    toks = [tokenize(r.text).tokens for r in corpus500.split("train").reviews]
    again = train_skipgram(toks, vocab, SkipGramConfig(d_emb=16, epochs=2, seed=5))
    assert np.array_equal(again.vectors, emb.vectors)


def test_skipgram_loss_decreases(corpus500):
    from sugmine.textprep import tokenize

    toks = [tokenize(r.text).tokens for r in corpus500.split("train").reviews[:150]]
    vocab = build_vocab(toks)
    emb = train_skipgram(toks, vocab, SkipGramConfig(d_emb=16, epochs=5, seed=0))
    assert emb.loss_history[4] < emb.loss_history[0]


def test_shared_contexts_make_neighbours():
    rng = np.random.default_rng(0)
    sents = []
    for _ in range(100):
        w = "good" if rng.random() < 0.5 else "great"
        sents.append(["the", "food", "was", w, "and", "tasty"])
        sents.append(["connect", "to", "the", "wifi", "network", "first"])
    vocab = build_vocab(sents)
    emb = train_skipgram(sents, vocab, SkipGramConfig(d_emb=16, window=2, epochs=10, seed=0))
    vec = lambda t: emb.vectors[vocab.index(t)]
    assert cosine(vec("good"), vec("great")) > cosine(vec("good"), vec("wifi"))


def test_finetune_keeps_rows_by_token():
    toks = [["a", "b", "c", "d", "e", "f", "g", "a", "b"]] * 3
    vocab = build_vocab(toks)
    cfg = SkipGramConfig(d_emb=4, epochs=0, negatives=2)
    base = train_skipgram(toks, vocab, SkipGramConfig(d_emb=4, epochs=1, negatives=2))
    copy = train_skipgram(toks, vocab, cfg, init=base)
    assert np.array_equal(copy.vectors, base.vectors)


def test_tiny_vocab_rejected():
    toks = [["a", "b"]]
    with pytest.raises(ValueError, match="too small"):
        train_skipgram(toks, build_vocab(toks), SkipGramConfig(negatives=5))


def test_embed_sequence(small_space):
    vocab, emb = small_space
    empty = embed_sequence([], vocab, emb, 6)
    assert np.array_equal(empty[0], emb.vectors[CLS])
    assert not empty[1:].any()
    long = embed_sequence(["room"] * 50, vocab, emb, 6)
    assert long.shape == (6, emb.d_emb)


def test_embeddings_file_roundtrip(tmp_path, small_space):
    vocab, emb = small_space
    p = tmp_path / "emb.txt"
    save_embeddings(emb, vocab, p)
    back = load_embeddings(p)
    assert back.tokens == vocab.index_to_token
    assert np.array_equal(back.vectors, emb.vectors)
    # feeding the loaded table back as init reproduces every row
    more = train_skipgram([["room", "staff"]] * 3 + [list(vocab.index_to_token[3:12])], vocab,
                          SkipGramConfig(d_emb=16, epochs=0), init=back)
    assert np.array_equal(more.vectors, emb.vectors)
