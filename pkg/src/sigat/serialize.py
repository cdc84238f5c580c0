"""On-disk formats for models and embeddings.

Checkpoint layout, little-endian throughout::

    magic  b"SGATCKPT"            8 bytes
    u32    version (1)
    u32    byte length of the JSON header, then the UTF-8 JSON header:
           {"config": {...}, "motif_ids": [...],
            "tensors": [{"name": str, "shape": [int, ...]}, ...]}
    body   each tensor's float64 values in row-major order, in header order
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .graph import DataError
from .model import PARAM_NAMES, SigatConfig, SigatModel

CHECKPOINT_MAGIC = b"SGATCKPT"
CHECKPOINT_VERSION = 1


def save_checkpoint(model, path):
    header = {
        "config": model.config.to_dict(),
        "motif_ids": list(model.motif_ids),
        "tensors": [{"name": k, "shape": list(model.params[k].shape)} for k in PARAM_NAMES],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(blob)))
        fh.write(blob)
        for k in PARAM_NAMES:
            fh.write(np.ascontiguousarray(model.params[k], dtype="<f8").tobytes())


def load_checkpoint(path):
    data = Path(path).read_bytes()
    if data[:8] != CHECKPOINT_MAGIC:
        raise DataError(f"{path}: not a model checkpoint")
    version, n = struct.unpack_from("<II", data, 8)
    if version != CHECKPOINT_VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {version}")
    header = json.loads(data[16:16 + n].decode("utf-8"))
    offset = 16 + n
    params = {}
    for t in header["tensors"]:
        count = int(np.prod(t["shape"], dtype=np.int64))
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=offset)
        params[t["name"]] = arr.astype(np.float64).reshape(t["shape"])
        offset += 8 * count
    if offset != len(data):
        raise DataError(f"{path}: trailing or missing bytes")
    return SigatModel(SigatConfig(**header["config"]), tuple(header["motif_ids"]), params)


def write_embeddings(Z, path, sidecar=None):
    """TSV ``node_id<TAB>z_0 ... z_{d-1}``; optional JSON sidecar next to it."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for u, row in enumerate(Z):
            fh.write(str(u) + "\t" + "\t".join(repr(float(x)) for x in row) + "\n")
    if sidecar is not None:
        path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))


def read_embeddings(path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            rows.append((int(parts[0]), [float(x) for x in parts[1:]]))
    rows.sort()
    return np.array([r for _, r in rows], dtype=np.float64)


def dump_params_tsv(model, directory):
    """One TSV per parameter array (3-D arrays flattened to rows of the last axis)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for k, v in model.params.items():
        arr = np.atleast_2d(v.reshape(-1, v.shape[-1]) if v.ndim > 2 else v)
        np.savetxt(directory / f"{k}.tsv", arr, delimiter="\t", fmt="%.17g")
