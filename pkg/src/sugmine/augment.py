"""Minority oversampling: discourse-marker SWAP/CROP and a SMOTE comparator.

The discourse procedure walks every domain, every review the pruning
classifier flags as a suggestion, and every configured marker present in
the review. The review is cut at the first occurrence of the marker into
head and tail. The swapped review (tail, marker, head) is always added; the
cropped head and tail are each added only if the classifier also flags
them as suggestions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .corpus import DOMAINS, Dataset, Review
from .embed import EmbeddingMatrix, Vocabulary
from .textprep import tokenize

logger = logging.getLogger(__name__)

DEFAULT_MARKERS = ("and", "but", "because")


@dataclass(frozen=True)
class DiscourseSplit:
    head: tuple
    marker: str
    tail: tuple

    def __post_init__(self):
        object.__setattr__(self, "head", tuple(self.head))
        object.__setattr__(self, "tail", tuple(self.tail))
        if not self.head or not self.tail:
            raise ValueError("head and tail must be non-empty")

    def joined(self) -> tuple:
        return self.head + (self.marker,) + self.tail


def split_at_marker(seq, marker: str) -> DiscourseSplit | None:
    tokens = tuple(seq)
    try:
        i = tokens.index(marker)
    except ValueError:
        return None
    if i == 0 or i == len(tokens) - 1:
        return None
    return DiscourseSplit(tokens[:i], marker, tokens[i + 1 :])


def swap(s: DiscourseSplit) -> tuple:
    return s.tail + (s.marker,) + s.head


def crop(s: DiscourseSplit) -> tuple[tuple, tuple]:
    return s.head, s.tail


def mean_embedding(tokens, vocab: Vocabulary, emb: EmbeddingMatrix) -> np.ndarray:
    ids = [vocab.index(t) for t in tokens]
    if not ids:
        return np.zeros(emb.d_emb)
    return emb.vectors[ids].mean(axis=0)


@dataclass
class BaselineClassifier:
    """Logistic regression over mean-pooled token embeddings."""

    weights: np.ndarray
    bias: float = 0.0
    trained: bool = False

    def prob(self, features: np.ndarray) -> np.ndarray:
        z = features @ self.weights + self.bias
        return 0.5 * (1.0 + np.tanh(0.5 * z))

    def predict_tokens(self, tokens, vocab, emb) -> int:
        if not self.trained:
            raise RuntimeError("baseline classifier is untrained")
        return int(self.prob(mean_embedding(tokens, vocab, emb)) >= 0.5)

    def __call__(self, tokens, vocab, emb) -> int:
        return self.predict_tokens(tokens, vocab, emb)


@dataclass
class BaselineConfig:
    epochs: int = 60
    lr: float = 0.5
    batch_size: int = 32
    l2: float = 1e-4
    balanced: bool = True
    seed: int = 42


def review_tokens(r: Review) -> tuple:
    return tokenize(r.text, r.id).tokens


def train_baseline(train: Dataset, emb: EmbeddingMatrix, vocab: Vocabulary, cfg: BaselineConfig | None = None) -> BaselineClassifier:
    """Fit the pruning classifier with minibatch SGD on the logistic loss.

    With ``cfg.balanced`` each class contributes equal total weight, so the
    classifier does not collapse onto the majority class.
    """
    cfg = cfg or BaselineConfig()
    reviews = list(train.reviews)
    if not reviews:
        raise ValueError("empty training set")
    y = np.array([r.is_suggestion for r in reviews], dtype=np.float64)
    if y.min() == y.max():
        raise ValueError("baseline training needs both suggestion and non-suggestion reviews")
    X = np.stack([mean_embedding(review_tokens(r), vocab, emb) for r in reviews])
    n = len(y)
    if cfg.balanced:
        pos = y.sum()
        w = np.where(y == 1, n / (2 * pos), n / (2 * (n - pos)))
    else:
        w = np.ones(n)

    rng = np.random.default_rng(cfg.seed)
    weights = rng.normal(0.0, 0.01, X.shape[1])
    bias = 0.0
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            b = order[start : start + cfg.batch_size]
            z = X[b] @ weights + bias
            p = 0.5 * (1.0 + np.tanh(0.5 * z))
            g = w[b] * (p - y[b])
            weights -= cfg.lr * (X[b].T @ g / len(b) + cfg.l2 * weights)
            bias -= cfg.lr * g.mean()
    return BaselineClassifier(weights, float(bias), trained=True)


def aug_id(parent_id: str, op: str, marker: str) -> str:
    return f"{parent_id}~{op}:{marker}"


def parse_aug_id(rid: str) -> tuple[str, str, str] | None:
    """Inverse of :func:`aug_id`: ``(parent_id, op, marker)`` or None."""
    if "~" not in rid:
        return None
    parent, rest = rid.rsplit("~", 1)
    op, _, marker = rest.partition(":")
    return parent, op, marker


def oversample_discourse(train: Dataset, c: BaselineClassifier, markers, emb: EmbeddingMatrix, vocab: Vocabulary) -> Dataset:
    """Single pass of discourse-marker oversampling over the train split.

    Test reviews pass through untouched. New reviews are labelled
    suggestion, inherit the parent's domain, and are appended after the
    originals in generation order. Token sequences already present in the
    train split are not added again.
    """
    if c is None or not c.trained:
        raise RuntimeError("discourse oversampling needs a trained baseline classifier")
    markers = tuple(markers)
    originals = list(train.reviews)
    seen = {review_tokens(r) for r in originals if r.split == "train"}
    added: list[Review] = []

    def add(tokens, parent: Review, op: str, m: str, provenance: str):
        if tokens in seen:
            return
        seen.add(tokens)
        added.append(Review(aug_id(parent.id, op, m), " ".join(tokens), parent.domain, "suggestion", "train", provenance))

    for d in DOMAINS:
        for r in originals:
            if r.split != "train" or r.domain != d or r.provenance != "original":
                continue
            tokens = review_tokens(r)
            if c(tokens, vocab, emb) != 1:
                continue
            for m in markers:
                s = split_at_marker(tokens, m)
                if s is None:
                    continue
                add(swap(s), r, "swap", m, "swap_aug")
                head, tail = crop(s)
                if c(head, vocab, emb) == 1:
                    add(head, r, "head", m, "crop_aug")
                if c(tail, vocab, emb) == 1:
                    add(tail, r, "tail", m, "crop_aug")
    logger.info("discourse oversampling added %d reviews", len(added))
    return Dataset(tuple(originals) + tuple(added), train.domains)


@dataclass
class FeatureExample:
    vector: np.ndarray
    label: str = "suggestion"
    domain: str | None = None
    # (seed index, neighbour index, interpolation weight) for synthetic points
    origin: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=np.float64)
        if not np.all(np.isfinite(self.vector)):
            raise ValueError("feature vector has non-finite entries")


def smote_point(x_i, x_z, lam: float) -> np.ndarray:
    return x_i + lam * (x_z - x_i)


def oversample_smote(minority: list[FeatureExample], k: int, n_new: int, seed: int) -> list[FeatureExample]:
    """Generate ``n_new`` SMOTE points by interpolating towards k-NN neighbours."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(minority) < k + 1:
        raise ValueError(f"minority class of {len(minority)} is too small for k={k}")
    X = np.stack([ex.vector for ex in minority])
    # k + 1 because each point is its own nearest neighbour
    _, nn = cKDTree(X).query(X, k=k + 1)
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_new):
        i = int(rng.integers(len(minority)))
        neigh = [j for j in nn[i] if j != i][:k]
        z = int(neigh[rng.integers(len(neigh))])
        lam = float(rng.random())
        src = minority[i]
        out.append(FeatureExample(smote_point(X[i], X[z], lam), src.label, src.domain, (i, z, lam)))
    return out


def smote_features(train: Dataset, vocab: Vocabulary, emb: EmbeddingMatrix, k: int = 5, ratio: float = 1.0, seed: int = 42) -> list[FeatureExample]:
    """Per-domain SMOTE on mean-pooled suggestion embeddings.

    Each domain gets enough synthetic suggestions to bring its suggestion
    count up to ``ratio`` times its non-suggestion count.
    """
    out = []
    for j, d in enumerate(DOMAINS):
        rows = [r for r in train.reviews if r.domain == d and r.split == "train"]
        pos = [FeatureExample(mean_embedding(review_tokens(r), vocab, emb), "suggestion", d) for r in rows if r.is_suggestion]
        n_neg = sum(not r.is_suggestion for r in rows)
        n_new = int(round(ratio * n_neg)) - len(pos)
        if n_new <= 0 or len(pos) < 2:
            continue
        out.extend(oversample_smote(pos, min(k, len(pos) - 1), n_new, seed + j))
    return out
