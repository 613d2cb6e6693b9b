"""Token representations: static embedding lookup or a learned scalar mixture
over precomputed contextual layers, plus token masking and output dropout.

Also implements the binary exchange format for precomputed contextual vectors
(magic "STEPSVEC").
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .autodiff import Node, Parameter, Tape
from .conllu import Sentence

VECTOR_MAGIC = b"STEPSVEC"
VECTOR_FORMAT_VERSION = 1

TASKS = ("arc", "label", "upos", "ufeats")


@dataclass
class ContextualVectors:
    """Per-sentence stack of encoder-layer representations, shape (L, n, d)."""

    layers: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        self.layers = np.asarray(self.layers, dtype=np.float64)
        if self.layers.ndim != 3 or self.layers.shape[0] < 1:
            raise ValueError(f"expected (L, n, d) layer stack, got {self.layers.shape}")

    @property
    def n_layers(self) -> int:
        return self.layers.shape[0]

    @property
    def n_tokens(self) -> int:
        return self.layers.shape[1]

    @property
    def dim(self) -> int:
        return self.layers.shape[2]


class StaticEmbeddings:
    """Trainable type-level embeddings over lowercased forms, with an UNK row."""

    UNK = "<unk>"

    def __init__(self, forms: list[str], dim: int, rng: np.random.Generator,
                 _vocab: list[str] | None = None):
        vocab = _vocab if _vocab is not None else \
            [self.UNK] + sorted(set(f.lower() for f in forms))
        self.vocab = list(vocab)
        self.index = {f: i for i, f in enumerate(vocab)}
        scale = 1.0 / np.sqrt(dim)
        self.table = Parameter(
            rng.uniform(-scale, scale, size=(len(vocab), dim)), "embeddings/table")
        self.dim = dim

    @classmethod
    def from_vocab(cls, vocab: list[str], dim: int,
                   rng: np.random.Generator) -> "StaticEmbeddings":
        return cls([], dim, rng, _vocab=vocab)

    def lookup_ids(self, sentence: Sentence) -> np.ndarray:
        unk = self.index[self.UNK]
        return np.array([self.index.get(t.form.lower(), unk) for t in sentence.tokens],
                        dtype=np.intp)


class ScalarMixture:
    """Per-task softmax mixture weights over L contextual layers."""

    def __init__(self, n_layers: int, task: str):
        self.logits = Parameter(np.zeros(n_layers), f"mixture/{task}/logits")
        self.task = task

    @property
    def n_layers(self) -> int:
        return self.logits.values.shape[0]

    def weights(self) -> np.ndarray:
        z = self.logits.values - self.logits.values.max()
        e = np.exp(z)
        return e / e.sum()


def draw_layer_dropout_mask(n_layers: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Boolean mask of surviving layers. If a draw kills every layer, redraw:
    an all-dropped mixture would produce a zero representation."""
    if p <= 0.0 or n_layers == 1:
        return np.ones(n_layers, dtype=bool)
    while True:
        keep = rng.random(n_layers) >= p
        if keep.any():
            return keep


def encode(tape: Tape, sentence: Sentence,
           source: StaticEmbeddings | ContextualVectors,
           mixture: ScalarMixture | None,
           training: bool = False,
           layer_dropout: float = 0.0,
           rng: np.random.Generator | None = None) -> Node:
    """Produce the (n, d) representation matrix for one sentence.

    Contextual source: softmax(active mixture logits)-weighted layer sum, with
    each layer independently dropped with probability `layer_dropout` during
    training. Static source: embedding lookup.
    """
    if isinstance(source, StaticEmbeddings):
        ids = source.lookup_ids(sentence)
        return tape.rows(tape.param(source.table), ids)
    if source.n_tokens != len(sentence):
        raise ValueError(
            f"sentence has {len(sentence)} tokens but vectors cover {source.n_tokens}")
    if mixture is None or mixture.n_layers != source.n_layers:
        raise ValueError("scalar mixture missing or layer count mismatch")
    if training and rng is not None:
        active = draw_layer_dropout_mask(source.n_layers, layer_dropout, rng)
    else:
        active = None
    return tape.scalar_mix(source.layers, tape.param(mixture.logits), active)


def mask_tokens(tape: Tape, embeddings: Node, p: float, mask_vector: Parameter,
                training: bool, rng: np.random.Generator | None = None) -> Node:
    """During training, replace each row with the learned mask vector with
    probability p; identity at inference."""
    if not (0.0 <= p < 1.0):
        raise ValueError(f"mask probability must be in [0, 1), got {p}")
    if not training or p == 0.0 or rng is None:
        return embeddings
    n = embeddings.value.shape[0]
    mask = rng.random(n) < p
    if not mask.any():
        return embeddings
    return tape.replace_rows(embeddings, mask, tape.param(mask_vector))


def dropout(tape: Tape, x: Node, p: float, training: bool,
            rng: np.random.Generator | None = None) -> Node:
    """Inverted elementwise dropout."""
    if not training or p <= 0.0 or rng is None:
        return x
    keep = (rng.random(x.value.shape) >= p).astype(np.float64) / (1.0 - p)
    return tape.mul_const(x, keep)


# -- vector exchange file ------------------------------------------------------
#
# Layout (little-endian):
#   magic "STEPSVEC" | u32 version | u32 L | u32 d | u32 id_len | id utf-8
#   then per sentence: u32 n | L*n*d float32 in layer-major order.


def write_vector_file(path: str, sentences_layers: list[np.ndarray],
                      model_id: str) -> None:
    """Write contextual vectors; each element of sentences_layers is (L, n, d)."""
    if sentences_layers:
        n_layers, _, dim = sentences_layers[0].shape
    else:
        n_layers, dim = 0, 0
    ident = model_id.encode("utf-8")
    import os
    import tempfile

    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(VECTOR_MAGIC)
            f.write(struct.pack("<IIII", VECTOR_FORMAT_VERSION, n_layers, dim, len(ident)))
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


def read_vector_file(path: str) -> tuple[list[ContextualVectors], str]:
    """Read an exchange file; returns (per-sentence vectors, model identifier)."""
    with open(path, "rb") as f:
        magic = f.read(8)
        if magic != VECTOR_MAGIC:
            raise ValueError(f"{path}: not a vector exchange file (magic {magic!r})")
        version, n_layers, dim, id_len = struct.unpack("<IIII", f.read(16))
        if version != VECTOR_FORMAT_VERSION:
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
            out.append(ContextualVectors(
                data.reshape(n_layers, n, dim).astype(np.float64), model_id))
        return out, model_id
