"""Adapter-augmented transformer encoder with suggestion and domain heads."""

from __future__ import annotations

from dataclasses import dataclass, asdict, field

import numpy as np

from ..corpus import DOMAINS
from ..embed import CLS, PAD
from . import layers as L


@dataclass
class TransformerConfig:
    n_layers: int = 2
    d_model: int = 64
    n_heads: int = 4
    d_ff: int = 128
    adapter_dim: int = 32
    max_len: int = 64
    base_lr: float = 0.05
    adapter_lr_multiplier: float = 10.0
    accum_steps: int = 2
    batch_size: int = 16
    epochs: int = 20
    seed: int = 42
    dropout: float = 0.0
    use_adapters: bool = True
    clip_norm: float | None = None
    trainable: str = "all"

    def __post_init__(self):
        for name in ("n_layers", "d_model", "n_heads", "d_ff", "adapter_dim", "max_len", "accum_steps", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.d_model % self.n_heads:
            raise ValueError(f"d_model={self.d_model} is not divisible by n_heads={self.n_heads}")
        if self.adapter_dim >= self.d_model:
            raise ValueError("adapter_dim must be smaller than d_model")
        if not (0.0 <= self.dropout < 1.0):
            raise ValueError("dropout must be in [0, 1)")
        if self.base_lr <= 0 or self.adapter_lr_multiplier <= 0:
            raise ValueError("learning rates must be positive")
        if self.trainable not in ("all", "adapters"):
            raise ValueError("trainable must be 'all' or 'adapters'")

    def to_dict(self) -> dict:
        return asdict(self)


ADAPTER_PARTS = ("down.W", "down.b", "up.W", "up.b")


@dataclass
class AttentionMap:
    """Attention weights of one sequence: array (n_layers, n_heads, h, h)."""

    weights: np.ndarray
    tokens: list = field(default_factory=list)

    def cls_row(self) -> np.ndarray:
        return self.weights[:, :, 0, :]


class TransformerModel:
    """Parameter store plus batched forward/backward passes.

    ``params`` maps dotted names to float64 arrays. The token embedding
    table is held in ``table`` and is not trained; only its CLS row lives
    in ``params['cls']``.
    """

    def __init__(self, cfg: TransformerConfig, table: np.ndarray, params: dict | None = None):
        self.cfg = cfg
        self.table = np.asarray(table, dtype=np.float64)
        self.d_emb = self.table.shape[1]
        self.pos = L.positional_encoding(cfg.max_len, cfg.d_model)
        self.params = params if params is not None else self._init_params()

    # -- parameters -----------------------------------------------------------
    def _init_params(self) -> dict:
        cfg = self.cfg
        rng = np.random.default_rng(cfg.seed)
        d, dff, ma = cfg.d_model, cfg.d_ff, cfg.adapter_dim

        def dense(n_in, n_out):
            return rng.normal(0.0, 1.0 / np.sqrt(n_in), (n_in, n_out))

        p = {"cls": self.table[CLS].copy(), "in_proj.W": dense(self.d_emb, d), "in_proj.b": np.zeros(d)}
        for l in range(cfg.n_layers):
            pre = f"layers.{l}."
            for w in ("Wq", "Wk", "Wv", "Wo"):
                p[pre + "attn." + w] = dense(d, d)
            p[pre + "ffn.W1"] = dense(d, dff)
            p[pre + "ffn.b1"] = np.zeros(dff)
            p[pre + "ffn.W2"] = dense(dff, d)
            p[pre + "ffn.b2"] = np.zeros(d)
            for ln in ("ln1", "ln2"):
                p[pre + ln + ".g"] = np.ones(d)
                p[pre + ln + ".b"] = np.zeros(d)
            for ad in ("adapter1", "adapter2"):
                p[pre + ad + ".down.W"] = rng.normal(0.0, 1e-2, (d, ma))
                p[pre + ad + ".down.b"] = np.zeros(ma)
                # zero up-projection: the adapter starts as an exact identity
                p[pre + ad + ".up.W"] = np.zeros((ma, d))
                p[pre + ad + ".up.b"] = np.zeros(d)
        p["head.sugg.W"] = rng.normal(0.0, 0.02, (d, 2))
        p["head.sugg.b"] = np.zeros(2)
        p["head.domain.W"] = rng.normal(0.0, 0.02, (d, len(DOMAINS)))
        p["head.domain.b"] = np.zeros(len(DOMAINS))
        return p

    @staticmethod
    def is_adapter(name: str) -> bool:
        return ".adapter" in name

    def adapter_names(self, layer: int, which: str) -> list[str]:
        return [f"layers.{layer}.{which}.{part}" for part in ADAPTER_PARTS]

    def adapter_param_counts(self) -> list[int]:
        out = []
        for l in range(self.cfg.n_layers):
            for which in ("adapter1", "adapter2"):
                out.append(sum(self.params[n].size for n in self.adapter_names(l, which)))
        return out

    def n_params(self) -> int:
        return sum(v.size for v in self.params.values())

    def copy(self) -> "TransformerModel":
        return TransformerModel(self.cfg, self.table, {k: v.copy() for k, v in self.params.items()})

    # -- forward / backward ---------------------------------------------------
    def embed_ids(self, ids: np.ndarray) -> np.ndarray:
        x = self.table[ids]
        x[ids == PAD] = 0.0
        x[:, 0, :] = self.params["cls"]
        return x

    def forward(self, ids, train=False, rng=None, adapters=None, x=None):
        """Batched encoder + heads.

        ``ids`` is (B, h) with CLS at position 0 and PAD=0 padding. Returns
        ``(sugg_logits, domain_logits, attn_list, cache)``; ``attn_list`` has
        one (B, n_heads, h, h) array per layer.
        """
        cfg, p = self.cfg, self.params
        use_adapters = cfg.use_adapters if adapters is None else adapters
        ids = np.asarray(ids)
        B, h = ids.shape
        if h > cfg.max_len:
            raise ValueError(f"sequence length {h} exceeds max_len {cfg.max_len}")
        key_mask = ids != PAD
        key_mask[:, 0] = True
        if x is None:
            x = self.embed_ids(ids)
        z = x @ p["in_proj.W"] + p["in_proj.b"] + self.pos[:h]
        drop = cfg.dropout if train else 0.0
        caches, attns = [], []
        for l in range(cfg.n_layers):
            pre = f"layers.{l}."
            c = {}
            a, attn, c["mha"] = L.mha_forward(z, key_mask, p[pre + "attn.Wq"], p[pre + "attn.Wk"], p[pre + "attn.Wv"], p[pre + "attn.Wo"], cfg.n_heads)
            attns.append(attn)
            a, c["drop1"] = _dropout(a, drop, rng)
            if use_adapters:
                a, c["ad1"] = L.adapter_forward(a, *(p[n] for n in self.adapter_names(l, "adapter1")))
            z1, c["ln1"] = L.layernorm_forward(z + a, p[pre + "ln1.g"], p[pre + "ln1.b"])
            f, c["ffn"] = L.ffn_forward(z1, p[pre + "ffn.W1"], p[pre + "ffn.b1"], p[pre + "ffn.W2"], p[pre + "ffn.b2"])
            f, c["drop2"] = _dropout(f, drop, rng)
            if use_adapters:
                f, c["ad2"] = L.adapter_forward(f, *(p[n] for n in self.adapter_names(l, "adapter2")))
            z, c["ln2"] = L.layernorm_forward(z1 + f, p[pre + "ln2.g"], p[pre + "ln2.b"])
            caches.append(c)
        enc = z[:, 0, :]
        sugg = enc @ p["head.sugg.W"] + p["head.sugg.b"]
        dom = enc @ p["head.domain.W"] + p["head.domain.b"]
        cache = {"ids": ids, "x": x, "layers": caches, "enc": enc, "z_shape": z.shape, "adapters": use_adapters}
        return sugg, dom, attns, cache

    def backward(self, d_sugg, d_dom, cache) -> dict:
        cfg, p = self.cfg, self.params
        enc = cache["enc"]
        g = {
            "head.sugg.W": enc.T @ d_sugg,
            "head.sugg.b": d_sugg.sum(axis=0),
            "head.domain.W": enc.T @ d_dom,
            "head.domain.b": d_dom.sum(axis=0),
        }
        dz = np.zeros(cache["z_shape"])
        dz[:, 0, :] = d_sugg @ p["head.sugg.W"].T + d_dom @ p["head.domain.W"].T
        for l in reversed(range(cfg.n_layers)):
            pre = f"layers.{l}."
            c = cache["layers"][l]
            dsum, gp = L.layernorm_backward(dz, c["ln2"])
            _put(g, pre + "ln2.", gp)
            df = dsum
            if cache["adapters"]:
                df, gp = L.adapter_backward(df, c["ad2"])
                _put(g, pre + "adapter2.", gp)
            df = df * c["drop2"] if c["drop2"] is not None else df
            dz1, gp = L.ffn_backward(df, c["ffn"])
            _put(g, pre + "ffn.", gp)
            dz1 = dz1 + dsum
            dsum, gp = L.layernorm_backward(dz1, c["ln1"])
            _put(g, pre + "ln1.", gp)
            da = dsum
            if cache["adapters"]:
                da, gp = L.adapter_backward(da, c["ad1"])
                _put(g, pre + "adapter1.", gp)
            da = da * c["drop1"] if c["drop1"] is not None else da
            dz, gp = L.mha_backward(da, c["mha"])
            _put(g, pre + "attn.", gp)
            dz = dz + dsum
        x = cache["x"]
        g["in_proj.W"] = np.tensordot(x, dz, axes=([0, 1], [0, 1]))
        g["in_proj.b"] = dz.sum(axis=(0, 1))
        dx0 = dz[:, 0, :] @ p["in_proj.W"].T
        g["cls"] = dx0.sum(axis=0)
        return g

    def loss_and_grad(self, ids, y_sugg, y_dom, train=False, rng=None, domain_loss=True):
        """Joint loss over a batch and its parameter gradients.

        Suggestion cross-entropy covers every row; domain cross-entropy only
        rows whose gold label is suggestion. Each is a mean over the rows it
        covers; the sum is returned.
        """
        sugg, dom, _, cache = self.forward(ids, train=train, rng=rng)
        B = len(y_sugg)
        ls, ds = L.cross_entropy(sugg, y_sugg, np.ones(B), B)
        w_dom = (y_sugg == 1).astype(np.float64) * float(domain_loss)
        ld, dd = L.cross_entropy(dom, y_dom, w_dom, max(w_dom.sum(), 1.0))
        return ls + ld, self.backward(ds, dd, cache)

    def loss(self, ids, y_sugg, y_dom) -> float:
        sugg, dom, _, _ = self.forward(ids)
        B = len(y_sugg)
        ls, _ = L.cross_entropy(sugg, y_sugg, np.ones(B), B)
        w_dom = (y_sugg == 1).astype(np.float64)
        ld, _ = L.cross_entropy(dom, y_dom, w_dom, max(w_dom.sum(), 1.0))
        return ls + ld

    # -- single-sequence API ----------------------------------------------------
    def encode(self, x, mask=None, adapters=None):
        """Encode one embedded sequence ``x`` (h, d_emb).

        ``mask`` is True at PAD positions. Row 0 is used as given (it should
        hold the CLS vector). Returns ``(cls_vector, AttentionMap)``.
        """
        x = np.asarray(x, dtype=np.float64)
        h = x.shape[0]
        if h > self.cfg.max_len:
            raise ValueError(f"sequence length {h} exceeds max_len {self.cfg.max_len}; truncate first")
        ids = np.full((1, h), CLS, dtype=np.int64)
        if mask is not None:
            ids[0, np.asarray(mask, dtype=bool)] = PAD
            ids[0, 0] = CLS
        _, _, attns, cache = self.forward(ids, x=x[None], adapters=adapters)
        return cache["enc"][0], AttentionMap(np.stack([a[0] for a in attns]))

    def classify_ids(self, ids):
        sugg, dom, attns, _ = self.forward(np.asarray(ids)[None])
        return sugg[0], dom[0], AttentionMap(np.stack([a[0] for a in attns]))


def _dropout(x, rate, rng):
    if rate <= 0.0:
        return x, None
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * keep, keep


def _put(g, prefix, parts):
    for k, v in parts.items():
        g[prefix + k] = v


def forward_classify(tokens, model: TransformerModel, vocab) -> dict:
    """Suggestion and domain logits plus attention for one token sequence."""
    if len(vocab) == 0:
        raise ValueError("empty vocabulary")
    ids = vocab.encode(tokens, model.cfg.max_len)
    n = int((ids != PAD).sum())
    sugg, dom, amap = model.classify_ids(ids[:n])
    amap.tokens = ["<cls>"] + list(tokens)[: n - 1]
    return {"suggestion_logits": sugg, "domain_logits": dom, "attention": amap}


def multi_head_attention(X, Wq, Wk, Wv, Wo, n_heads, mask=None):
    """Unbatched multi-head self-attention; ``mask`` True at PAD positions.

    Returns ``(output (h, d), weights (n_heads, h, h))``.
    """
    X = np.asarray(X, dtype=np.float64)
    h, d = X.shape
    if d % n_heads:
        raise ValueError("d is not divisible by the number of heads")
    if Wq.shape != (d, d) or Wk.shape != (d, d) or Wv.shape != (d, d) or Wo.shape != (d, d):
        raise ValueError("projection shapes must be (d, d)")
    keep = np.ones(h, dtype=bool) if mask is None else ~np.asarray(mask, dtype=bool)
    if not keep.any():
        raise L.DegenerateMaskError("every position is masked")
    out, attn, _ = L.mha_forward(X[None], keep[None], Wq, Wk, Wv, Wo, n_heads)
    return out[0], attn[0]
