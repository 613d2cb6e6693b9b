"""Vector exchange file writer/reader.

Layout (little-endian):
  magic "STEPSVEC" | u32 version | u32 L | u32 d | u32 id_len | id utf-8
  then per sentence: u32 n | L*n*d float32 in layer-major order.
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

MAGIC = b"STEPSVEC"
VERSION = 1


def write_vector_file(path: str, sentences_layers: list[np.ndarray],
                      model_id: str) -> None:
    """Each element of sentences_layers is one sentence's (L, n, d) stack."""
    if sentences_layers:
        n_layers, _, dim = sentences_layers[0].shape
    else:
        n_layers, dim = 0, 0
    ident = model_id.encode("utf-8")
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(MAGIC)
            f.write(struct.pack("<IIII", VERSION, n_layers, dim, len(ident)))
            f.write(ident)
            for layers in sentences_layers:
                layers = np.asarray(layers)
                if layers.shape[0] != n_layers or layers.shape[2] != dim:
                    raise ValueError("inconsistent layer stack shapes across sentences")
                f.write(struct.pack("<I", layers.shape[1]))
                f.write(layers.astype("<f4").tobytes(order="C"))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_vector_file(path: str) -> tuple[list[np.ndarray], str]:
    """Returns (list of (L, n, d) float32 arrays, model identifier)."""
    with open(path, "rb") as f:
        magic = f.read(8)
        if magic != MAGIC:
            raise ValueError(f"{path}: not a vector exchange file (magic {magic!r})")
        version, n_layers, dim, id_len = struct.unpack("<IIII", f.read(16))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported format version {version}")
        model_id = f.read(id_len).decode("utf-8")
        out = []
        while True:
            raw = f.read(4)
            if not raw:
                break
            (n,) = struct.unpack("<I", raw)
            data = np.frombuffer(f.read(4 * n_layers * n * dim), dtype="<f4")
            if data.size != n_layers * n * dim:
                raise ValueError(f"{path}: truncated sentence block")
            out.append(data.reshape(n_layers, n, dim).copy())
        return out, model_id
