"""Biaffine arc and label scorers over all ordered (head, dependent) pairs.

The score tensor has shape (n+1, n, k): candidate heads include a synthetic
root at index 0; dependents are the n tokens; k is 1 for arc scorers and the
label-vocabulary size (plus the ∅ channel in unfactorized models) for label
scorers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Node, Parameter, Tape

NULL_LABEL = "∅"


class LabelVocabulary:
    """Bidirectional index over dependency labels, optionally with a synthetic
    ∅ (no-edge) label as the final index."""

    def __init__(self, labels: list[str], with_null: bool = False):
        uniq = sorted(set(labels))
        if NULL_LABEL in uniq:
            raise ValueError("the ∅ label is synthetic and may not appear in data")
        if with_null:
            uniq.append(NULL_LABEL)
        self.labels: tuple[str, ...] = tuple(uniq)
        self.index = {lab: i for i, lab in enumerate(self.labels)}
        self.null_index: int | None = len(self.labels) - 1 if with_null else None

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def n_real(self) -> int:
        return len(self.labels) - (1 if self.null_index is not None else 0)

    def id_of(self, label: str) -> int:
        return self.index[label]

    def label_of(self, idx: int) -> str:
        label = self.labels[idx]
        if idx == self.null_index:
            raise ValueError("the ∅ label must never be emitted")
        return label


@dataclass
class ScoreTensor:
    """Dense scores for all ordered (head, dependent) pairs of one sentence."""

    scores: np.ndarray  # (n+1, n, k)
    kind: str  # arc-tree | arc-graph-binary | label | label-with-null

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.scores.ndim != 3 or self.scores.shape[0] != self.scores.shape[1] + 1:
            raise ValueError(f"score tensor must be (n+1, n, k), got {self.scores.shape}")
        if not np.all(np.isfinite(self.scores)):
            raise ValueError("score tensor contains non-finite values")

    @property
    def n(self) -> int:
        return self.scores.shape[1]

    @property
    def k(self) -> int:
        return self.scores.shape[2]


def _uniform_init(rng: np.random.Generator, shape: tuple, fan_in: int) -> np.ndarray:
    scale = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-scale, scale, size=shape)


class BiaffineScorer:
    """FNN head/dep projections followed by a biaffine map to k channels."""

    def __init__(self, name: str, in_dim: int, hidden_dim: int, k: int,
                 rng: np.random.Generator, activation: str = "gelu"):
        self.name = name
        self.activation = activation
        self.hidden_dim = hidden_dim
        self.k = k
        self.w_head = Parameter(_uniform_init(rng, (hidden_dim, in_dim), in_dim),
                                f"{name}/fnn_head/W")
        self.b_head = Parameter(np.zeros(hidden_dim), f"{name}/fnn_head/b")
        self.w_dep = Parameter(_uniform_init(rng, (hidden_dim, in_dim), in_dim),
                               f"{name}/fnn_dep/W")
        self.b_dep = Parameter(np.zeros(hidden_dim), f"{name}/fnn_dep/b")
        self.u = Parameter(_uniform_init(rng, (hidden_dim, k, hidden_dim), hidden_dim),
                           f"{name}/biaffine/U")
        self.w_lin = Parameter(_uniform_init(rng, (k, 2 * hidden_dim), 2 * hidden_dim),
                               f"{name}/biaffine/W")
        self.b_lin = Parameter(np.zeros(k), f"{name}/biaffine/b")

    def parameters(self) -> list[Parameter]:
        return [self.w_head, self.b_head, self.w_dep, self.b_dep,
                self.u, self.w_lin, self.b_lin]

    def score(self, tape: Tape, r_with_root: Node, r: Node,
              dropout_p: float = 0.0, training: bool = False,
              rng: np.random.Generator | None = None) -> Node:
        """Score all pairs; r_with_root is (n+1, d) (root row first), r is (n, d).

        Returns an (n+1, n, k) node.
        """
        from .encoder import dropout  # local import avoids a cycle

        h_head = tape.activation(
            tape.affine(r_with_root, tape.param(self.w_head), tape.param(self.b_head)),
            self.activation)
        h_dep = tape.activation(
            tape.affine(r, tape.param(self.w_dep), tape.param(self.b_dep)),
            self.activation)
        h_head = dropout(tape, h_head, dropout_p, training, rng)
        h_dep = dropout(tape, h_dep, dropout_p, training, rng)
        return tape.biaffine_all_pairs(
            h_head, h_dep, tape.param(self.u), tape.param(self.w_lin),
            tape.param(self.b_lin))
