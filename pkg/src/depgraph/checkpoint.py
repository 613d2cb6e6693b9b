"""Versioned binary model checkpoints.

Layout (little-endian):
  magic "DGCHKPT\\0" | u32 version | u64 header_len | JSON header (utf-8)
  | raw float64 parameter data, concatenated in header manifest order.

The JSON header holds the model configuration, vocabularies and a
(name, shape) manifest for the parameter arrays.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import asdict

import numpy as np

from .model import ModelConfig, ParserModel
from .scorers import NULL_LABEL, LabelVocabulary
from .taggers import TagVocabulary

MAGIC = b"DGCHKPT\0"
VERSION = 1


def save_checkpoint(path: str, model: ParserModel,
                    extra: dict | None = None) -> None:
    params = model.parameters()
    header = {
        "model_config": asdict(model.config),
        "label_vocab": {
            "labels": [lab for lab in model.label_vocab.labels if lab != NULL_LABEL],
            "with_null": model.label_vocab.null_index is not None,
        },
        "upos_vocab": list(model.upos_vocab.tags) if model.upos_vocab else None,
        "ufeats_vocab": list(model.ufeats_vocab.tags) if model.ufeats_vocab else None,
        "embedding_vocab": model.embeddings.vocab if model.embeddings else None,
        "params": [{"name": p.name, "shape": list(p.values.shape)} for p in params],
        "extra": extra or {},
    }
    blob = json.dumps(header, ensure_ascii=False, sort_keys=True).encode("utf-8")
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(MAGIC)
            f.write(struct.pack("<IQ", VERSION, len(blob)))
            f.write(blob)
            for p in params:
                f.write(p.values.astype("<f8").tobytes(order="C"))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path: str) -> tuple[ParserModel, dict]:
    """Rebuild the model from a checkpoint; returns (model, extra header data)."""
    with open(path, "rb") as f:
        magic = f.read(8)
        if magic != MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        version, header_len = struct.unpack("<IQ", f.read(12))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        header = json.loads(f.read(header_len).decode("utf-8"))
        arrays = {}
        for entry in header["params"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(f.read(8 * count), dtype="<f8")
            if data.size != count:
                raise ValueError(f"{path}: truncated parameter {entry['name']}")
            arrays[entry["name"]] = data.reshape(shape).astype(np.float64)

    config = ModelConfig(**header["model_config"])
    lv = header["label_vocab"]
    label_vocab = LabelVocabulary(lv["labels"], with_null=lv["with_null"])
    upos = TagVocabulary([]) if header["upos_vocab"] else None
    if upos is not None:
        upos.tags = tuple(header["upos_vocab"])
        upos.index = {t: i for i, t in enumerate(upos.tags)}
    ufeats = TagVocabulary([]) if header["ufeats_vocab"] else None
    if ufeats is not None:
        ufeats.tags = tuple(header["ufeats_vocab"])
        ufeats.index = {t: i for i, t in enumerate(ufeats.tags)}

    rng = np.random.default_rng(0)  # values are overwritten by load_state
    model = ParserModel(config, label_vocab, rng,
                        upos_vocab=upos, ufeats_vocab=ufeats,
                        embedding_vocab=header["embedding_vocab"])
    model.load_state(arrays)
    return model, header.get("extra", {})
