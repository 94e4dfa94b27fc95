"""Vocabulary construction and skip-gram (negative sampling) word embeddings."""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

logger = logging.getLogger(__name__)

PAD, UNK, CLS = 0, 1, 2
RESERVED = ("<pad>", "<unk>", "<cls>")


@dataclass
class Vocabulary:
    token_to_index: dict
    index_to_token: list
    counts: dict

    def __len__(self):
        return len(self.index_to_token)

    def index(self, token: str) -> int:
        return self.token_to_index.get(token, UNK)

    def encode(self, tokens, max_len: int) -> np.ndarray:
        """Ids of ``[CLS] + tokens`` truncated or PAD-filled to ``max_len``."""
        if max_len < 1:
            raise ValueError("max_len must be >= 1")
        ids = np.full(max_len, PAD, dtype=np.int64)
        ids[0] = CLS
        body = [self.index(t) for t in list(tokens)[: max_len - 1]]
        ids[1 : 1 + len(body)] = body
        return ids

    def to_json(self) -> dict:
        return {"index_to_token": self.index_to_token, "counts": self.counts}

    @classmethod
    def from_json(cls, obj) -> "Vocabulary":
        itos = list(obj["index_to_token"])
        return cls({t: i for i, t in enumerate(itos)}, itos, dict(obj["counts"]))


def build_vocab(corpus, min_count: int = 1) -> Vocabulary:
    """Index tokens by descending frequency, then lexicographically.

    Indices 0, 1 and 2 are reserved for PAD, UNK and CLS.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    corpus = list(corpus)
    if not corpus:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    counts = Counter(t for seq in corpus for t in seq)
    kept = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
    itos = list(RESERVED) + kept
    return Vocabulary({t: i for i, t in enumerate(itos)}, itos, {t: counts[t] for t in kept})


@dataclass
class EmbeddingMatrix:
    vectors: np.ndarray
    seed: int | None = None
    loss_history: list = field(default_factory=list)

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2:
            raise ValueError("embedding table must be 2-D")
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("embedding table has non-finite entries")

    @property
    def d_emb(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return self.vectors.shape[0]


@dataclass
class SkipGramConfig:
    d_emb: int = 64
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    lr: float = 0.025
    min_lr: float = 0.0001
    batch_size: int = 64
    seed: int = 42


def skipgram_loss_grad(w_in, w_out, centers, contexts, negatives):
    """Negative-sampling loss summed over a batch of (center, context) pairs.

    loss = sum_b [-log s(u_o . v_c) - sum_k log s(-u_k . v_c)]

    Returns ``(loss, g_center, g_context, g_negative)`` where the gradients
    are per-row: shapes (B, d), (B, d) and (B, K, d). Rows may repeat;
    callers scatter-add them into the tables.
    """
    v = w_in[centers]                      # (B, d)
    u_o = w_out[contexts]                  # (B, d)
    u_k = w_out[negatives]                 # (B, K, d)
    pos = np.einsum("bd,bd->b", u_o, v)
    neg = np.einsum("bkd,bd->bk", u_k, v)
    # -log s(x) = logaddexp(0, -x)
    loss = np.logaddexp(0.0, -pos).sum() + np.logaddexp(0.0, neg).sum()
    g_pos = _sigmoid(pos) - 1.0            # d/dpos
    g_neg = _sigmoid(neg)                  # d/dneg
    g_center = g_pos[:, None] * u_o + np.einsum("bk,bkd->bd", g_neg, u_k)
    g_context = g_pos[:, None] * v
    g_negative = g_neg[:, :, None] * v[:, None, :]
    return float(loss), g_center, g_context, g_negative


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _scatter_add(table, idx, rows):
    # same as np.add.at(table, idx, rows), via a sparse product (much faster)
    hit, inv = np.unique(idx, return_inverse=True)
    m = sparse.csr_matrix((np.ones(len(idx)), (inv, np.arange(len(idx)))), shape=(len(hit), len(idx)))
    table[hit] += m @ rows


def _pairs(id_lists, window):
    centers, contexts = [], []
    for ids in id_lists:
        n = len(ids)
        for i in range(n):
            lo, hi = max(0, i - window), min(n, i + window + 1)
            for j in range(lo, hi):
                if j != i:
                    centers.append(ids[i])
                    contexts.append(ids[j])
    return np.asarray(centers, dtype=np.int64), np.asarray(contexts, dtype=np.int64)


def train_skipgram(corpus, vocab: Vocabulary, cfg: SkipGramConfig | None = None, init: EmbeddingMatrix | None = None) -> EmbeddingMatrix:
    """Train skip-gram vectors with negative sampling and linear lr decay.

    Negatives are drawn from the unigram distribution raised to 0.75. When
    ``init`` is given, rows of matching tokens are copied from it before
    training (fine-tuning); all other rows start small and random. The PAD
    row is always zero; the CLS row is never touched by skip-gram.
    """
    cfg = cfg or SkipGramConfig()
    if cfg.d_emb < 2:
        raise ValueError("d_emb must be >= 2")
    id_lists = [[vocab.index(t) for t in seq] for seq in corpus]
    id_lists = [ids for ids in id_lists if ids]
    if not id_lists:
        raise ValueError("empty corpus")
    n_real = len(vocab) - len(RESERVED)
    if n_real < cfg.negatives + 1:
        raise ValueError(f"vocabulary of {n_real} tokens is too small for {cfg.negatives} negatives")

    rng = np.random.default_rng(cfg.seed)
    V, d = len(vocab), cfg.d_emb
    w_in = (rng.random((V, d)) - 0.5) / d
    w_out = np.zeros((V, d))
    if init is not None:
        if init.d_emb != d:
            raise ValueError(f"init vectors have dimension {init.d_emb}, expected {d}")
        if isinstance(init, LabeledEmbedding):
            for tok, row in init.rows():
                i = vocab.token_to_index.get(tok)
                if i is not None:
                    w_in[i] = row
        else:
            n = min(len(init), V)
            w_in[:n] = init.vectors[:n]
    w_in[PAD] = 0.0

    counts = np.zeros(V)
    for t, c in vocab.counts.items():
        counts[vocab.token_to_index[t]] = c
    noise = counts**0.75
    noise /= noise.sum()
    noise_cdf = np.cumsum(noise)

    centers, contexts = _pairs(id_lists, cfg.window)
    n_pairs = len(centers)
    if n_pairs == 0:
        raise ValueError("corpus has no (center, context) pairs")
    total_steps = cfg.epochs * int(np.ceil(n_pairs / cfg.batch_size))
    step = 0
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n_pairs)
        epoch_loss = 0.0
        for start in range(0, n_pairs, cfg.batch_size):
            b = order[start : start + cfg.batch_size]
            c, o = centers[b], contexts[b]
            negs = np.searchsorted(noise_cdf, rng.random((len(b), cfg.negatives)), side="right")
            negs = np.minimum(negs, V - 1)
            lr = max(cfg.min_lr, cfg.lr * (1.0 - step / total_steps))
            loss, gc, go, gn = skipgram_loss_grad(w_in, w_out, c, o, negs)
            _scatter_add(w_in, c, -lr * gc)
            _scatter_add(w_out, np.concatenate([o, negs.ravel()]), -lr * np.concatenate([go, gn.reshape(-1, d)]))
            epoch_loss += loss
            step += 1
        w_in[PAD] = 0.0
        history.append(epoch_loss / n_pairs)
        logger.debug("skip-gram epoch %d loss %.4f", epoch + 1, history[-1])
    return EmbeddingMatrix(w_in, seed=cfg.seed, loss_history=history)


class LabeledEmbedding(EmbeddingMatrix):
    """Embedding table read from disk, keyed by token rather than index."""

    def __init__(self, tokens, vectors, seed=None):
        super().__init__(vectors, seed=seed)
        self.tokens = list(tokens)

    def rows(self):
        return zip(self.tokens, self.vectors)


def embed_sequence(tokens, vocab: Vocabulary, emb: EmbeddingMatrix, max_len: int) -> np.ndarray:
    """Stack ``[CLS] + tokens`` vectors into a ``max_len x d_emb`` matrix.

    Sequences are truncated to fit; padding rows are zero vectors.
    """
    ids = vocab.encode(tokens, max_len)
    out = emb.vectors[ids].copy()
    out[ids == PAD] = 0.0
    return out


def cosine(a, b) -> float:
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


def save_embeddings(emb: EmbeddingMatrix, vocab: Vocabulary, path) -> None:
    """Write a JSON header line, then one ``token<TAB>v1 v2 ...`` line per row."""
    path = Path(path)
    header = {"d_emb": emb.d_emb, "n": len(emb), "seed": emb.seed}
    lines = [json.dumps(header, sort_keys=True)]
    for tok, row in zip(vocab.index_to_token, emb.vectors):
        lines.append(tok + "\t" + " ".join(repr(float(x)) for x in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_embeddings(path) -> LabeledEmbedding:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = json.loads(lines[0])
    tokens, rows = [], []
    for ln in lines[1:]:
        if not ln:
            continue
        tok, vals = ln.split("\t", 1)
        tokens.append(tok)
        rows.append([float(x) for x in vals.split()])
    vectors = np.asarray(rows, dtype=np.float64).reshape(len(rows), header["d_emb"])
    if len(tokens) != header["n"]:
        raise ValueError(f"{path}: header says {header['n']} rows, found {len(tokens)}")
    return LabeledEmbedding(tokens, vectors, seed=header.get("seed"))
