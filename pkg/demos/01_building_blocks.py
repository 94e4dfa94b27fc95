"""A tour of the encoder's pieces on toy inputs.

Run with ``python demos/01_building_blocks.py``. Everything here is small
enough to check by hand.
"""

# %% Scaled dot-product attention on a two-token example.
import numpy as np

from sugmine.xformer import (
    TransformerConfig,
    TransformerModel,
    adapter_param_count,
    positional_encoding,
    scaled_dot_attention,
)

Q = np.array([[1.0, 0.0]])
K = np.array([[1.0, 0.0], [0.0, 1.0]])
V = np.eye(2)
out, w = scaled_dot_attention(Q, K, V)
print("logits", Q @ K.T / np.sqrt(2))
print("weights", w.round(4))  # (0.6698, 0.3302)

# %% The sinusoidal position table: row 0 alternates 0, 1 and P[1, 0] = sin(1).
P = positional_encoding(4, 8)
print(P.round(3))

# %% Adapters start as an exact identity because the up-projection is zero.
cfg = TransformerConfig(n_layers=2, d_model=16, n_heads=4, d_ff=32, adapter_dim=4, max_len=10)
rng = np.random.default_rng(0)
model = TransformerModel(cfg, rng.normal(size=(20, 16)))
ids = np.array([[2, 5, 6, 7, 0, 0]])
with_adapters = model.forward(ids, adapters=True)[3]["enc"]
plain = model.forward(ids, adapters=False)[3]["enc"]
print("identical at init:", np.array_equal(with_adapters, plain))
print("params per adapter (d=64, m=32):", adapter_param_count(64, 32))

# %% Attention maps: every row is a distribution, PAD columns get nothing.
_, _, attns, _ = model.forward(ids)
print("layer 0, head 0:\n", attns[0][0, 0].round(3))
