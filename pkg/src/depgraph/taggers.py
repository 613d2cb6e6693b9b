"""UPOS and UFeats tagging heads: one linear layer from the task-specific
token representation to logits over the tag vocabulary.

UFeats bundles are treated as atomic classes; bundles unseen in training map
to a designated UNK class at test time.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Node, Parameter, Tape
from .scorers import _uniform_init

UNK_TAG = "<unk>"


class TagVocabulary:
    def __init__(self, tags: list[str]):
        uniq = [UNK_TAG] + sorted(set(tags))
        self.tags: tuple[str, ...] = tuple(uniq)
        self.index = {t: i for i, t in enumerate(self.tags)}

    def __len__(self) -> int:
        return len(self.tags)

    def id_of(self, tag: str) -> int:
        return self.index.get(tag, self.index[UNK_TAG])

    def tag_of(self, idx: int) -> str:
        return self.tags[idx]


class TagHead:
    def __init__(self, name: str, in_dim: int, vocab: TagVocabulary,
                 rng: np.random.Generator):
        self.name = name
        self.vocab = vocab
        self.w = Parameter(_uniform_init(rng, (len(vocab), in_dim), in_dim), f"{name}/W")
        self.b = Parameter(np.zeros(len(vocab)), f"{name}/b")

    def parameters(self) -> list[Parameter]:
        return [self.w, self.b]

    def tag_scores(self, tape: Tape, r_task: Node) -> Node:
        """Per-token logits, shape (n, |tagset|)."""
        return tape.affine(r_task, tape.param(self.w), tape.param(self.b))

    def predict(self, logits: np.ndarray) -> list[str]:
        # np.argmax breaks ties toward the lowest index.
        return [self.vocab.tag_of(int(i)) for i in np.argmax(logits, axis=1)]
