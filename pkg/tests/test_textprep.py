import pytest
from hypothesis import given, settings, strategies as st

from sugmine.corpus import Review
from sugmine.textprep import (
    Lexicon,
    correct_spelling,
    lemmatize,
    levenshtein,
    preprocess_review,
    preprocess_tokens,
    similarity,
    tokenize,
)

LEX = Lexicon.from_corpus([["hotel", "service", "great", "room", "staff", "helpful", "the"]])


@pytest.mark.parametrize("text, expected", [
    ("Great hotel, but noisy!", ["great", "hotel", ",", "but", "noisy", "!"]),
    ("", []),
    ("Wi-Fi was down", ["wi", "-", "fi", "was", "down"]),
    ("snake_case", ["snake", "_", "case"]),
])
def test_tokenize(text, expected):
    assert list(tokenize(text).tokens) == expected


def test_tokenize_normalizes_unicode():
    composed = tokenize("caf\u00e9").tokens
    decomposed = tokenize("cafe\u0301").tokens
    assert composed == decomposed == ("café",)


@given(st.text(max_size=60))
def test_tokens_never_contain_whitespace(text):
    toks = tokenize(text).tokens
    assert all(t and not any(c.isspace() for c in t) for t in toks)


def test_levenshtein_and_similarity():
    assert levenshtein("servise", "service") == 1
    assert levenshtein("", "abc") == 3
    assert levenshtein("kitten", "sitting") == 3
    assert similarity("servise", "service") == pytest.approx(6 / 7)
    assert similarity("", "") == 1.0


def test_spelling_identity_and_fix():
    assert correct_spelling("hotel", LEX) == "hotel"
    assert correct_spelling("servise", LEX, 0.85) == "service"
    assert correct_spelling("xqzt", LEX) == "xqzt"


def test_threshold_is_inclusive_boundary():
    # similarity(grat, great) is exactly 0.8
    assert correct_spelling("grat", LEX, 0.85) == "grat"
    assert correct_spelling("grat", LEX, 0.8) == "great"


def test_spelling_prefers_frequent_candidate():
    lex = Lexicon.from_corpus([["cart"] * 5 + ["card"]])
    assert correct_spelling("carx", lex, 0.7) == "cart"


def test_spelling_leaves_short_and_punct():
    assert correct_spelling("!", LEX) == "!"
    assert correct_spelling("rm", LEX, 0.5) == "rm"


def test_wordlist_extends_lexicon(tmp_path):
    p = tmp_path / "words.txt"
    p.write_text("Pool\nminibar\n\n")
    lex = Lexicon.from_corpus([["room"]], wordlist=p)
    assert {"pool", "minibar", "room"} <= lex.words
    assert correct_spelling("minibra", lex, 0.7) == "minibar"


@pytest.mark.parametrize("word, lemma", [
    ("rooms", "room"),
    ("running", "run"),
    ("address", "address"),
    ("stories", "story"),
    ("boxes", "box"),
    ("was", "be"),
    ("bus", "bus"),
    ("needed", "need"),
    ("feed", "feed"),
])
def test_lemmatize(word, lemma):
    assert lemmatize(word) == lemma


@settings(max_examples=200)
@given(st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=14))
def test_lemmatize_idempotent(word):
    once = lemmatize(word)
    assert lemmatize(once) == once
    assert once


def test_preprocess_composition():
    r = Review("h1", "The rooms were grat", "hotel", "non_suggestion")
    # grat sits exactly at similarity 0.8 from great
    assert list(preprocess_review(r, LEX, threshold=0.8).tokens) == ["the", "room", "were", "great"]
    assert preprocess_review(r, LEX, threshold=0.8).source_id == "h1"


def test_preprocess_fixed_points():
    assert preprocess_tokens((), LEX) == ()
    clean = preprocess_tokens(("staff", "helpful"), LEX)
    assert clean == ("staff", "helpful")
    assert preprocess_tokens(clean, LEX) == clean
