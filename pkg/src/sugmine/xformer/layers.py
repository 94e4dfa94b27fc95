"""Forward and backward passes of the encoder building blocks.

Every ``*_forward`` returns its output and a cache; the matching
``*_backward`` takes the upstream gradient and the cache and returns the
input gradient plus a dict of parameter gradients. Arrays carry a leading
batch axis ``B`` and a sequence axis ``h`` where relevant.
"""

from __future__ import annotations

import numpy as np


class DegenerateMaskError(ValueError):
    pass


def positional_encoding(h: int, d: int) -> np.ndarray:
    """Sinusoidal position table ``P`` of shape (h, d), positions from 0.

    ``P[i, 2j] = sin(i / 10000**(2j/d))`` and ``P[i, 2j+1] = cos(...)``.
    Odd ``d`` is computed at ``d + 1`` and trimmed.
    """
    if h < 1 or d < 1:
        raise ValueError("h and d must be positive")
    d_even = d + (d % 2)
    pos = np.arange(h, dtype=np.float64)[:, None]
    j = np.arange(d_even // 2, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, 2.0 * j / d_even)
    P = np.empty((h, d_even))
    P[:, 0::2] = np.sin(angle)
    P[:, 1::2] = np.cos(angle)
    return P[:, :d]


def masked_softmax(scores, key_mask):
    """Row softmax over the last axis with masked-out keys at weight 0.

    ``key_mask`` is True for real (attendable) positions and broadcasts
    against ``scores``.
    """
    s = np.where(key_mask, scores, -np.inf)
    s = s - s.max(axis=-1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=-1, keepdims=True)


def scaled_dot_attention(Q, K, V, mask=None):
    """Single-sequence attention ``softmax(Q K^T / sqrt(d_k)) V``.

    ``Q`` may have any number of rows; ``K`` and ``V`` share the key count
    ``n``. ``mask`` (length ``n``) marks PAD keys (True = padding), which
    receive zero weight. Returns ``(output, weights)``.
    """
    Q, K, V = (np.asarray(a, dtype=np.float64) for a in (Q, K, V))
    d_k = Q.shape[1]
    n = K.shape[0]
    if K.shape[1] != d_k or V.shape[0] != n:
        raise ValueError("Q, K, V shapes disagree")
    keep = np.ones(n, dtype=bool) if mask is None else ~np.asarray(mask, dtype=bool)
    if not keep.any():
        raise DegenerateMaskError("every position is masked")
    w = masked_softmax(Q @ K.T / np.sqrt(d_k), keep[None, :])
    return w @ V, w


# -- multi-head self-attention ---------------------------------------------

def mha_forward(x, key_mask, Wq, Wk, Wv, Wo, n_heads):
    """Self-attention over ``x`` (B, h, d). Head ``l`` uses columns
    ``l*d_k:(l+1)*d_k`` of each projection."""
    B, h, d = x.shape
    dk = d // n_heads

    def heads(t):
        return t.reshape(B, h, n_heads, dk).transpose(0, 2, 1, 3)

    q, k, v = heads(x @ Wq), heads(x @ Wk), heads(x @ Wv)
    scale = 1.0 / np.sqrt(dk)
    scores = q @ k.transpose(0, 1, 3, 2) * scale
    attn = masked_softmax(scores, key_mask[:, None, None, :])
    ctx = attn @ v                                     # (B, m, h, dk)
    concat = ctx.transpose(0, 2, 1, 3).reshape(B, h, d)
    out = concat @ Wo
    cache = (x, q, k, v, attn, concat, Wq, Wk, Wv, Wo, n_heads, scale)
    return out, attn, cache


def mha_backward(dout, cache):
    x, q, k, v, attn, concat, Wq, Wk, Wv, Wo, n_heads, scale = cache
    B, h, d = x.shape
    dk = d // n_heads
    dWo = np.einsum("bhi,bhj->ij", concat, dout)
    dconcat = dout @ Wo.T
    dctx = dconcat.reshape(B, h, n_heads, dk).transpose(0, 2, 1, 3)
    dattn = dctx @ v.transpose(0, 1, 3, 2)
    dv = attn.transpose(0, 1, 3, 2) @ dctx
    dscores = attn * (dattn - (dattn * attn).sum(axis=-1, keepdims=True))
    dq = dscores @ k * scale
    dk_ = dscores.transpose(0, 1, 3, 2) @ q * scale

    def merge(t):
        return t.transpose(0, 2, 1, 3).reshape(B, h, d)

    dq, dk_, dv = merge(dq), merge(dk_), merge(dv)
    dWq = np.einsum("bhi,bhj->ij", x, dq)
    dWk = np.einsum("bhi,bhj->ij", x, dk_)
    dWv = np.einsum("bhi,bhj->ij", x, dv)
    dx = dq @ Wq.T + dk_ @ Wk.T + dv @ Wv.T
    return dx, {"Wq": dWq, "Wk": dWk, "Wv": dWv, "Wo": dWo}


# -- adapter -----------------------------------------------------------------

def adapter_forward(x, down_W, down_b, up_W, up_b):
    """Bottleneck with skip connection: ``x + up(relu(down(x)))``."""
    pre = x @ down_W + down_b
    hid = np.maximum(pre, 0.0)
    return x + (hid @ up_W + up_b), (x, pre, hid, down_W, up_W)


def adapter_backward(dout, cache):
    x, pre, hid, down_W, up_W = cache
    axes = tuple(range(dout.ndim - 1))
    d_up_W = np.tensordot(hid, dout, axes=(axes, axes))
    d_up_b = dout.sum(axis=axes)
    dhid = dout @ up_W.T
    dpre = dhid * (pre > 0)
    d_down_W = np.tensordot(x, dpre, axes=(axes, axes))
    d_down_b = dpre.sum(axis=axes)
    dx = dout + dpre @ down_W.T
    return dx, {"down.W": d_down_W, "down.b": d_down_b, "up.W": d_up_W, "up.b": d_up_b}


def adapter_param_count(d: int, m: int) -> int:
    return 2 * m * d + d + m


# -- layer norm ---------------------------------------------------------------

LN_EPS = 1e-5


def layernorm_forward(x, g, b):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = xc * inv
    return xhat * g + b, (xhat, inv, g)


def layernorm_backward(dout, cache):
    xhat, inv, g = cache
    axes = tuple(range(dout.ndim - 1))
    dg = (dout * xhat).sum(axis=axes)
    db = dout.sum(axis=axes)
    dxhat = dout * g
    n = xhat.shape[-1]
    dx = inv / n * (n * dxhat - dxhat.sum(axis=-1, keepdims=True) - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True))
    return dx, {"g": dg, "b": db}


# -- feed-forward --------------------------------------------------------------

def ffn_forward(x, W1, b1, W2, b2):
    pre = x @ W1 + b1
    hid = np.maximum(pre, 0.0)
    return hid @ W2 + b2, (x, pre, hid, W1, W2)


def ffn_backward(dout, cache):
    x, pre, hid, W1, W2 = cache
    axes = tuple(range(dout.ndim - 1))
    dW2 = np.tensordot(hid, dout, axes=(axes, axes))
    db2 = dout.sum(axis=axes)
    dpre = (dout @ W2.T) * (pre > 0)
    dW1 = np.tensordot(x, dpre, axes=(axes, axes))
    db1 = dpre.sum(axis=axes)
    return dpre @ W1.T, {"W1": dW1, "b1": db1, "W2": dW2, "b2": db2}


# -- losses --------------------------------------------------------------------

def log_softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax(z):
    return np.exp(log_softmax(z))


def cross_entropy(logits, targets, weights, norm):
    """``sum_i weights[i] * -log p[i, targets[i]] / norm`` and its logit gradient."""
    logp = log_softmax(logits)
    n = len(targets)
    picked = logp[np.arange(n), targets]
    loss = -(weights * picked).sum() / norm
    grad = np.exp(logp)
    grad[np.arange(n), targets] -= 1.0
    grad *= (weights / norm)[:, None]
    return float(loss), grad
