"""SGD training loop with gradient accumulation and per-group learning rates."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..embed import PAD
from .model import TransformerModel

logger = logging.getLogger(__name__)


class NumericError(FloatingPointError):
    """Raised when the training loss stops being finite."""


@dataclass
class TrainResult:
    model: TransformerModel
    loss_trace: list = field(default_factory=list)
    n_updates: int = 0


def trainable_names(model: TransformerModel) -> list[str]:
    if model.cfg.trainable == "all":
        return sorted(model.params)
    # adapter tuning: adapters, layer norms and task heads only
    return sorted(n for n in model.params if model.is_adapter(n) or ".ln" in n or n.startswith("head."))


def learning_rate(model: TransformerModel, name: str) -> float:
    cfg = model.cfg
    if model.is_adapter(name):
        return cfg.base_lr * cfg.adapter_lr_multiplier
    return cfg.base_lr


def _trim(ids: np.ndarray) -> np.ndarray:
    width = int((ids != PAD).sum(axis=1).max())
    return ids[:, : max(width, 1)]


def batches(n: int, batch_size: int, rng) -> list[np.ndarray]:
    order = rng.permutation(n)
    return [order[i : i + batch_size] for i in range(0, n, batch_size)]


def train(model: TransformerModel, ids, y_sugg, y_dom, epochs: int | None = None, domain_loss: bool = True, callback=None) -> TrainResult:
    """Train ``model`` in place.

    Gradients of ``accum_steps`` consecutive minibatches are averaged and
    applied as one SGD update; a trailing partial group at the end of an
    epoch is applied as well. Adapter parameters move with
    ``base_lr * adapter_lr_multiplier``, everything else with ``base_lr``.
    ``domain_loss=False`` trains the suggestion head alone.
    """
    cfg = model.cfg
    ids = np.asarray(ids)
    y_sugg = np.asarray(y_sugg, dtype=np.int64)
    y_dom = np.asarray(y_dom, dtype=np.int64)
    n = len(ids)
    if n == 0:
        raise ValueError("empty training set")
    epochs = cfg.epochs if epochs is None else epochs
    rng = np.random.default_rng(cfg.seed)
    names = trainable_names(model)
    lrs = {name: learning_rate(model, name) for name in names}
    result = TrainResult(model)

    for epoch in range(epochs):
        acc = {name: np.zeros_like(model.params[name]) for name in names}
        n_acc = 0
        total, count = 0.0, 0
        bl = batches(n, cfg.batch_size, rng)
        for bi, b in enumerate(bl):
            loss, grads = model.loss_and_grad(_trim(ids[b]), y_sugg[b], y_dom[b], train=True, rng=rng, domain_loss=domain_loss)
            if not np.isfinite(loss):
                raise NumericError(f"non-finite loss at epoch {epoch + 1}, batch {bi}")
            for name in names:
                acc[name] += grads[name]
            n_acc += 1
            total += loss * len(b)
            count += len(b)
            if n_acc == cfg.accum_steps or bi == len(bl) - 1:
                _step(model, acc, lrs, n_acc, cfg.clip_norm)
                result.n_updates += 1
                for a in acc.values():
                    a.fill(0.0)
                n_acc = 0
        result.loss_trace.append(total / count)
        logger.info("epoch %d/%d loss %.5f", epoch + 1, epochs, result.loss_trace[-1])
        if callback is not None:
            callback(epoch, result)
    return result


def _step(model, acc, lrs, n_acc, clip_norm):
    scale = 1.0 / n_acc
    if clip_norm is not None:
        norm = np.sqrt(sum(float((a * a).sum()) for a in acc.values())) * scale
        if norm > clip_norm:
            scale *= clip_norm / norm
    for name, a in acc.items():
        model.params[name] -= lrs[name] * scale * a


def predict_logits(model: TransformerModel, ids, batch_size: int = 256):
    """Inference-mode logits for an (N, h) id array."""
    ids = np.asarray(ids)
    s_out, d_out = [], []
    for i in range(0, len(ids), batch_size):
        s, d, _, _ = model.forward(_trim(ids[i : i + batch_size]))
        s_out.append(s)
        d_out.append(d)
    if not s_out:
        return np.zeros((0, 2)), np.zeros((0, model.params["head.domain.b"].size))
    return np.concatenate(s_out), np.concatenate(d_out)
