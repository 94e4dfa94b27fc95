"""Attention saliency, heatmap/word-cloud export and SAGE token analysis."""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass
from html import escape
from pathlib import Path

import numpy as np

from .embed import PAD

logger = logging.getLogger(__name__)


@dataclass
class TokenSaliency:
    tokens: list
    weights: np.ndarray
    review_id: str = ""

    def __post_init__(self):
        self.tokens = list(self.tokens)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if len(self.tokens) != len(self.weights):
            raise ValueError("one weight per token required")

    def to_json(self) -> dict:
        return {"review_id": self.review_id, "tokens": self.tokens, "weights": [float(w) for w in self.weights]}


def _normalize_max(w: np.ndarray) -> np.ndarray:
    m = w.max() if w.size else 0.0
    return w / m if m > 0 else w


def attention_saliency(review, artifacts, aggregation: str = "cls_row_mean") -> TokenSaliency:
    """Per-token attention received from the CLS position.

    Averaged over layers and heads, restricted to real tokens, and scaled so
    the largest weight is 1.
    """
    if aggregation != "cls_row_mean":
        raise ValueError(f"unknown aggregation {aggregation!r}")
    model = getattr(artifacts, "model", None)
    if model is None:
        raise RuntimeError("attention saliency needs a trained model")
    text = getattr(review, "text", review)
    tokens = artifacts.tokens(text)
    ids = artifacts.encode(text)
    n = int((ids != PAD).sum())
    _, _, attns, _ = model.forward(ids[None, :n])
    cls_rows = np.stack([a[0, :, 0, :] for a in attns])      # (layers, heads, n)
    w = cls_rows.mean(axis=(0, 1))[1:n]
    return TokenSaliency(list(tokens[: n - 1]), _normalize_max(w), getattr(review, "id", ""))


def export_heatmap(s: TokenSaliency, path) -> None:
    """Write tokens as SVG text cells shaded by weight."""
    cell_h, pad, char_w = 28, 6, 9
    x = pad
    cells = []
    for tok, w in zip(s.tokens, s.weights):
        width = char_w * max(len(tok), 1) + 2 * pad
        cells.append(
            f'<g class="token"><rect x="{x}" y="{pad}" width="{width}" height="{cell_h}" '
            f'fill="rgb(220,38,38)" fill-opacity="{float(w):.4f}"/>'
            f'<text x="{x + pad}" y="{pad + 19}" font-family="monospace" font-size="15">{escape(tok)}</text></g>'
        )
        x += width + 2
    total_w = x + pad
    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{cell_h + 2 * pad}" '
        f'viewBox="0 0 {total_w} {cell_h + 2 * pad}">\n' + "\n".join(cells) + "\n</svg>\n"
    )
    Path(path).write_text(svg, encoding="utf-8")


def aggregate_saliency(saliencies) -> dict:
    """Mean weight per token over a collection of saliency records."""
    total, count = Counter(), Counter()
    for s in saliencies:
        for tok, w in zip(s.tokens, s.weights):
            total[tok] += float(w)
            count[tok] += 1
    return {t: total[t] / count[t] for t in total}


def export_wordcloud_data(source, path) -> list[dict]:
    """Write ``[{token, weight}, ...]`` scaled to [0, 1], largest first.

    ``source`` is a token -> weight mapping, a TokenSaliency or a list of
    SageEntry.
    """
    if isinstance(source, TokenSaliency):
        items = list(zip(source.tokens, source.weights))
    elif isinstance(source, dict):
        items = list(source.items())
    else:
        items = [(e.token, e.eta) for e in source]
    if not items:
        raise ValueError("empty word-cloud source")
    w = np.array([float(v) for _, v in items])
    lo, hi = w.min(), w.max()
    if hi > lo:
        scaled = (w - lo) / (hi - lo) if lo < 0 else w / hi
    else:
        scaled = np.ones_like(w)
    rows = sorted(({"token": t, "weight": float(s)} for (t, _), s in zip(items, scaled)), key=lambda r: (-r["weight"], r["token"]))
    Path(path).write_text(json.dumps(rows, indent=1) + "\n", encoding="utf-8")
    return rows


# -- SAGE --------------------------------------------------------------------------

@dataclass(frozen=True)
class SageEntry:
    token: str
    eta: float


class SageResult(list):
    """List of SageEntry with convergence information attached."""

    converged: bool = True
    n_iter: int = 0
    objective: list = []


def sage_objective(eta, counts, background, lam) -> float:
    z = background + eta
    zmax = z.max()
    lse = zmax + np.log(np.exp(z - zmax).sum())
    return float(counts @ z - counts.sum() * lse - lam * np.abs(eta).sum())


def sage_scores(target_counts: dict, background_counts: dict, lam: float = 5.0, iters: int = 5000, tol: float = 1e-6,
                step: float | None = None, alpha: float = 0.5, rank_by: str = "eta") -> SageResult:
    """Sparse deviations ``eta`` of a target corpus from a background corpus.

    Maximises ``sum_w c_w (b_w + eta_w) - C log sum_w exp(b_w + eta_w)
    - lam * |eta|_1`` by proximal gradient ascent, where ``b`` holds the
    smoothed background log-frequencies. The step is normalised by the
    target size ``C`` unless given explicitly; the soft threshold uses
    ``lam * step``. Entries come back sorted by ``eta`` descending (or by
    ``|eta|`` with ``rank_by="abs"``), ties broken by token.

    With ``lam=0`` the objective only fixes ``eta`` up to a constant shift;
    starting from zero, the iterates keep ``sum(eta) == 0``.
    """
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    vocab = sorted(set(target_counts) | set(background_counts))
    bg = np.array([background_counts.get(w, 0) for w in vocab], dtype=np.float64)
    if bg.sum() <= 0:
        raise ValueError("background corpus is empty")
    c = np.array([target_counts.get(w, 0) for w in vocab], dtype=np.float64)
    C = c.sum()
    b = np.log((bg + alpha) / (bg + alpha).sum())
    if step is None:
        # the log-partition gradient is C-Lipschitz in the sup sense; 1/C keeps ascent monotone
        step = 1.0 / max(C, 1.0)
    eta = np.zeros(len(vocab))
    result = SageResult()
    result.objective = [sage_objective(eta, c, b, lam)]
    result.converged = False
    for it in range(1, iters + 1):
        z = b + eta
        p = np.exp(z - z.max())
        p /= p.sum()
        grad = c - C * p
        u = eta + step * grad
        new = np.sign(u) * np.maximum(np.abs(u) - lam * step, 0.0)
        delta = np.abs(new - eta).max()
        eta = new
        result.objective.append(sage_objective(eta, c, b, lam))
        if delta < tol:
            result.converged = True
            break
    result.n_iter = it
    if not result.converged:
        logger.warning("SAGE did not converge in %d iterations", iters)
    entries = [SageEntry(w, float(e)) for w, e in zip(vocab, eta)]
    key = (lambda e: (-abs(e.eta), e.token)) if rank_by == "abs" else (lambda e: (-e.eta, e.token))
    result.extend(sorted(entries, key=key))
    return result


def top_k_sage(entries, k: int) -> list:
    if k < 1:
        raise ValueError("k must be >= 1")
    return sorted(entries, key=lambda e: (-e.eta, e.token))[:k]


def domain_sage(reviews, tokens_of, domain: str, **kw) -> SageResult:
    """SAGE of one domain's suggestions against all suggestions pooled."""
    target, background = Counter(), Counter()
    for r in reviews:
        if not r.is_suggestion:
            continue
        toks = [t for t in tokens_of(r) if any(ch.isalpha() for ch in t)]
        background.update(toks)
        if r.domain == domain:
            target.update(toks)
    return sage_scores(dict(target), dict(background), **kw)


def sage_json(domain: str, lam: float, entries) -> dict:
    return {"domain": domain, "lambda": lam, "entries": [{"token": e.token, "eta": e.eta} for e in entries]}
