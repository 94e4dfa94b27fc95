"""Single-file model checkpoints.

Layout::

    b"SUGMINE1\\n"
    <one line of JSON: {"config": {...}, "tensors": [{"name", "shape", "offset"}...]}>\\n
    <raw little-endian float64 data, tensors back to back in header order>

The embedding table is stored as the tensor named ``table``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .model import TransformerConfig, TransformerModel

MAGIC = b"SUGMINE1\n"


def save_checkpoint(model: TransformerModel, path) -> None:
    tensors = {"table": model.table, **model.params}
    index, blobs, offset = [], [], 0
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype="<f8")
        index.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blob = arr.tobytes()
        blobs.append(blob)
        offset += len(blob)
    header = json.dumps({"config": model.cfg.to_dict(), "tensors": index}, sort_keys=True)
    with Path(path).open("wb") as fh:
        fh.write(MAGIC)
        fh.write(header.encode("utf-8") + b"\n")
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path) -> TransformerModel:
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise ValueError(f"{path}: not a SUGMINE1 checkpoint")
    nl = data.index(b"\n", len(MAGIC))
    header = json.loads(data[len(MAGIC) : nl])
    body = memoryview(data)[nl + 1 :]
    tensors = {}
    for t in header["tensors"]:
        size = int(np.prod(t["shape"])) if t["shape"] else 1
        arr = np.frombuffer(body, dtype="<f8", count=size, offset=t["offset"])
        tensors[t["name"]] = arr.reshape(t["shape"]).astype(np.float64)
    table = tensors.pop("table")
    return TransformerModel(TransformerConfig(**header["config"]), table, tensors)
