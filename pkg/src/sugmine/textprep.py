"""Tokenization, spelling correction and rule-based lemmatization."""

from __future__ import annotations

import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Review

_TOKEN_RE = re.compile(r"[^\W_]+|[^\w\s]|_", re.UNICODE)


@dataclass(frozen=True)
class TokenSeq:
    tokens: tuple[str, ...]
    source_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        for t in self.tokens:
            if not t or any(c.isspace() for c in t):
                raise ValueError(f"invalid token {t!r}")

    def __len__(self):
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __getitem__(self, i):
        return self.tokens[i]


@dataclass
class Lexicon:
    words: set = field(default_factory=set)
    frequency: dict = field(default_factory=dict)

    @classmethod
    def from_corpus(cls, token_lists, min_count=1, wordlist=None) -> "Lexicon":
        """Build a lexicon of words seen at least ``min_count`` times.

        Words from ``wordlist`` (an iterable or a path to a one-word-per-line
        file) are added with frequency 1 unless already counted.
        """
        counts = Counter(t for toks in token_lists for t in toks if _is_wordlike(t))
        freq = {w: c for w, c in counts.items() if c >= min_count}
        if wordlist is not None:
            if isinstance(wordlist, (str, Path)):
                wordlist = load_wordlist(wordlist)
            for w in wordlist:
                w = w.strip().lower()
                if w and w not in freq:
                    freq[w] = 1
        return cls(set(freq), freq)

    def __contains__(self, word):
        return word in self.words


def load_wordlist(path) -> list[str]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [ln.strip().lower() for ln in lines if ln.strip()]


def _is_wordlike(token: str) -> bool:
    return any(c.isalpha() for c in token)


def tokenize(text: str, source_id: str = "") -> TokenSeq:
    """Lowercase and split ``text`` into word runs and single punctuation marks.

    >>> tokenize("Great hotel, but noisy!").tokens
    ('great', 'hotel', ',', 'but', 'noisy', '!')
    """
    text = unicodedata.normalize("NFC", text).lower()
    return TokenSeq(tuple(_TOKEN_RE.findall(text)), source_id)


def levenshtein(a: str, b: str) -> int:
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def similarity(a: str, b: str) -> float:
    """Normalized Levenshtein similarity ``1 - D(a, b) / max(|a|, |b|)``."""
    n = max(len(a), len(b))
    if n == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / n


def correct_spelling(token: str, lex: Lexicon, threshold: float = 0.85, _cache=None) -> str:
    """Replace an out-of-lexicon token by its most similar lexicon word.

    Ties are broken by higher lexicon frequency, then lexicographically.
    Tokens of length <= 2 and non-alphabetic tokens are never corrected.
    """
    if not (0.0 < threshold <= 1.0):
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    if token in lex.words or len(token) <= 2 or not token.isalpha():
        return token
    if _cache is not None and token in _cache:
        return _cache[token]

    n = len(token)
    best = None
    best_key = None
    for word in lex.words:
        m = len(word)
        # |n - m| is a lower bound on the edit distance
        if 1.0 - abs(n - m) / max(n, m) < threshold:
            continue
        sim = similarity(token, word)
        if sim < threshold:
            continue
        key = (-sim, -lex.frequency.get(word, 0), word)
        if best_key is None or key < best_key:
            best, best_key = word, key
    out = token if best is None else best
    if _cache is not None:
        _cache[token] = out
    return out


# Irregular forms and words whose trailing s/ed/ing is not an inflection.
LEMMA_EXCEPTIONS = {
    "was": "be",
    "is": "be",
    "are": "be",
    "been": "be",
    "am": "be",
    "better": "good",
    "best": "good",
    "has": "have",
    "had": "have",
    "does": "do",
    "did": "do",
    "done": "do",
    "went": "go",
    "gone": "go",
    "made": "make",
    "took": "take",
    "children": "child",
    "men": "man",
    "women": "woman",
    "feet": "foot",
    "teeth": "tooth",
    "mice": "mouse",
    "this": "this",
    "thus": "thus",
    "its": "its",
    "always": "always",
    "perhaps": "perhaps",
    "news": "news",
    "series": "series",
    "species": "species",
    "yes": "yes",
    "bed": "bed",
    "red": "red",
    "during": "during",
    "nothing": "nothing",
    "something": "something",
    "anything": "anything",
    "everything": "everything",
    "morning": "morning",
    "evening": "evening",
    "ceiling": "ceiling",
    "building": "building",
    "parking": "parking",
    "wedding": "wedding",
    "pudding": "pudding",
    "booking": "booking",
    "king": "king",
    "wing": "wing",
    "string": "string",
    "spring": "spring",
    "sling": "sling",
}

_VOWELS = set("aeiouy")
_NO_UNDOUBLE = set("lsz")


def _undouble(stem: str) -> str:
    if len(stem) >= 2 and stem[-1] == stem[-2] and stem[-1] not in _VOWELS and stem[-1] not in _NO_UNDOUBLE:
        return stem[:-1]
    return stem


def _has_vowel(s: str) -> bool:
    return any(c in _VOWELS for c in s)


def _lemma_step(token: str) -> str:
    if token in LEMMA_EXCEPTIONS:
        return LEMMA_EXCEPTIONS[token]
    if not token.isalpha() or len(token) <= 3:
        return token
    if token.endswith("ies") and len(token) > 4:
        return token[:-3] + "y"
    if token.endswith("sses"):
        return token[:-2]
    if token.endswith("es") and token[:-2].endswith(("x", "z", "ch", "sh")):
        return token[:-2]
    if token.endswith("s"):
        if token.endswith(("ss", "us", "is")):
            return token
        stem = token[:-1]
        return stem if len(stem) >= 3 else token
    if token.endswith("ing"):
        stem = token[:-3]
        if len(stem) >= 3 and _has_vowel(stem):
            return _undouble(stem)
        return token
    if token.endswith("ed") and not token.endswith("eed"):
        stem = token[:-2]
        if len(stem) >= 3 and _has_vowel(stem):
            return _undouble(stem)
        return token
    return token


def lemmatize(token: str) -> str:
    """Reduce a lowercase token to a root form with an ordered suffix-rule table.

    The exception map is consulted first. Rules are applied until the token
    stops changing, which makes the function idempotent.
    """
    seen = token
    while True:
        nxt = _lemma_step(seen)
        if nxt == seen:
            return seen
        seen = nxt


def preprocess_tokens(tokens, lex: Lexicon, threshold: float = 0.85, cache=None) -> tuple[str, ...]:
    out = []
    for t in tokens:
        t = correct_spelling(t, lex, threshold, _cache=cache)
        out.append(lemmatize(t))
    return tuple(out)


def preprocess_review(r: Review, lex: Lexicon, threshold: float = 0.85, cache=None) -> TokenSeq:
    """tokenize -> correct_spelling -> lemmatize."""
    seq = tokenize(r.text, r.id)
    return TokenSeq(preprocess_tokens(seq.tokens, lex, threshold, cache), r.id)
