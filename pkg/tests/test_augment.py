import numpy as np
import pytest
from hypothesis import given, strategies as st

from sugmine.augment import (
    BaselineConfig,
    DiscourseSplit,
    FeatureExample,
    crop,
    oversample_discourse,
    oversample_smote,
    parse_aug_id,
    review_tokens,
    smote_features,
    smote_point,
    split_at_marker,
    swap,
    train_baseline,
)
from sugmine.corpus import Dataset, Review, balance_stats

EXAMPLE = ("great", "location", "but", "needs", "better", "wifi")


def test_split_rules():
    s = split_at_marker(EXAMPLE, "but")
    assert s == DiscourseSplit(("great", "location"), "but", ("needs", "better", "wifi"))
    assert split_at_marker(("but", "ok"), "but") is None
    assert split_at_marker(("no", "marker", "here"), "but") is None
    assert split_at_marker(("a", "and", "b", "and", "c"), "and").tail == ("b", "and", "c")


def test_swap_and_crop():
    s = split_at_marker(EXAMPLE, "but")
    assert swap(s) == ("needs", "better", "wifi", "but", "great", "location")
    assert swap(DiscourseSplit(s.tail, s.marker, s.head)) == EXAMPLE
    assert swap(DiscourseSplit(("ok",), "but", ("ok",))) == ("ok", "but", "ok")
    head, tail = crop(s)
    assert (head, tail) == (("great", "location"), ("needs", "better", "wifi"))
    assert "but" not in head + tail
    assert crop(split_at_marker(("fine", "but", "meh"), "but"))[0] == ("fine",)


@given(st.lists(st.sampled_from(["a", "b", "and", "c"]), min_size=3, max_size=12))
def test_swap_is_involution(tokens):
    s = split_at_marker(tokens, "and")
    if s is None:
        return
    assert swap(DiscourseSplit(s.tail, s.marker, s.head)) == s.joined() == tuple(tokens)


def test_empty_parts_rejected():
    with pytest.raises(ValueError):
        DiscourseSplit((), "and", ("x",))


def test_smote_point_endpoints():
    a, b = np.array([0.0, 0.0]), np.array([2.0, 2.0])
    assert np.array_equal(smote_point(a, b, 0.0), a)
    assert np.array_equal(smote_point(a, b, 1.0), b)
    assert np.array_equal(smote_point(a, b, 0.5), [1.0, 1.0])


def test_smote_small_minority():
    pts = [FeatureExample(np.ones(2) * i) for i in range(3)]
    with pytest.raises(ValueError):
        oversample_smote(pts, 3, 5, 0)
    with pytest.raises(ValueError):
        oversample_smote(pts, 0, 5, 0)


def test_smote_deterministic():
    rng = np.random.default_rng(0)
    pts = [FeatureExample(v) for v in rng.normal(size=(20, 3))]
    a = oversample_smote(pts, 3, 10, seed=4)
    b = oversample_smote(pts, 3, 10, seed=4)
    assert all(np.array_equal(x.vector, y.vector) for x, y in zip(a, b))


def test_smote_features_balances(corpus500, small_space):
    vocab, emb = small_space
    train = corpus500.split("train")
    syn = smote_features(train, vocab, emb, k=3, ratio=0.5, seed=0)
    stats = balance_stats(train)
    for d in ("hotel", "software"):
        c = stats[(d, "train")]
        n_new = sum(ex.domain == d for ex in syn)
        assert c.suggestion_count + n_new == round(0.5 * c.non_suggestion_count)


def _separable(n=80):
    rows = []
    for i in range(n):
        if i % 2:
            rows.append(Review(f"s{i}", "you should add a pool and fix the lobby", "hotel", "suggestion"))
        else:
            rows.append(Review(f"n{i}", "the room was clean and quiet", "hotel", "non_suggestion"))
    return Dataset(tuple(rows))


@pytest.fixture(scope="module")
def sep_space():
    from sugmine.embed import SkipGramConfig, build_vocab, train_skipgram

    d = _separable()
    toks = [review_tokens(r) for r in d.reviews]
    vocab = build_vocab(toks)
    return d, vocab, train_skipgram(toks, vocab, SkipGramConfig(d_emb=8, epochs=2, negatives=2))


def test_baseline_separable(sep_space):
    d, vocab, emb = sep_space
    clf = train_baseline(d, emb, vocab, BaselineConfig(epochs=60))
    acc = np.mean([clf(review_tokens(r), vocab, emb) == int(r.is_suggestion) for r in d.reviews])
    assert acc >= 0.95
    again = train_baseline(d, emb, vocab, BaselineConfig(epochs=60))
    assert np.array_equal(clf.weights, again.weights)


def test_baseline_needs_both_classes(sep_space):
    d, vocab, emb = sep_space
    with pytest.raises(ValueError):
        train_baseline(d.filter(lambda r: not r.is_suggestion), emb, vocab)


class _Always:
    trained = True

    def __init__(self, value):
        self.value = value

    def __call__(self, tokens, vocab, emb):
        return self.value


def test_discourse_gates_on_classifier_not_label(sep_space):
    _, vocab, emb = sep_space
    r = Review("n1", "the room was clean but the lobby was old", "hotel", "non_suggestion")
    out = oversample_discourse(Dataset((r,)), _Always(1), ("but",), emb, vocab)
    new = out.reviews[1:]
    assert {x.provenance for x in new} == {"swap_aug", "crop_aug"}
    assert all(x.label == "suggestion" and x.domain == "hotel" for x in new)
    none = oversample_discourse(Dataset((r,)), _Always(0), ("but",), emb, vocab)
    assert len(none) == 1


def test_discourse_no_marker_adds_nothing(sep_space):
    _, vocab, emb = sep_space
    r = Review("s1", "please fix the lobby", "hotel", "suggestion")
    assert len(oversample_discourse(Dataset((r,)), _Always(1), ("but", "and"), emb, vocab)) == 1


def test_discourse_ids_point_to_parents(sep_space):
    _, vocab, emb = sep_space
    r = Review("s1", "good pool and please fix the lobby", "hotel", "suggestion")
    out = oversample_discourse(Dataset((r,)), _Always(1), ("and",), emb, vocab)
    for x in out.reviews[1:]:
        parent, op, marker = parse_aug_id(x.id)
        assert (parent, marker) == ("s1", "and")
        assert op in ("swap", "head", "tail")
    assert parse_aug_id("plain-id") is None
