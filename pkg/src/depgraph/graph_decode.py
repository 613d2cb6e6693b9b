"""Enhanced dependency graph extraction, with greedy root-reachability repair.

Edges are (head, dependent, label) triples with head in 0..n (0 = root) and
dependent in 1..n. Enhanced graphs may contain cycles and multiple heads per
token; the only structural constraint enforced is that every token be
reachable from the root.
"""

from __future__ import annotations

import numpy as np

from .scorers import LabelVocabulary, ScoreTensor

Edge = tuple[int, int, str]


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def _softmax(x: np.ndarray, axis: int) -> np.ndarray:
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def _best_label(label_scores: np.ndarray, vocab: LabelVocabulary,
                h: int, d: int) -> str:
    channel = label_scores[h, d].copy()
    if vocab.null_index is not None:
        channel[vocab.null_index] = -np.inf
    return vocab.label_of(int(np.argmax(channel)))


def decode_graph_factorized(arc_scores: ScoreTensor, label_scores: ScoreTensor,
                            vocab: LabelVocabulary) -> set[Edge]:
    """Edge (h, d) present iff sigmoid(arc score) > 0.5; label by argmax."""
    if arc_scores.kind != "arc-graph-binary" or arc_scores.k != 1:
        raise ValueError(f"expected arc-graph-binary scores, got {arc_scores.kind}")
    n = arc_scores.n
    edges: set[Edge] = set()
    prob = _sigmoid(arc_scores.scores[:, :, 0])
    for d in range(1, n + 1):
        for h in range(0, n + 1):
            if h == d:
                continue
            if prob[h, d - 1] > 0.5:
                edges.add((h, d, _best_label(label_scores.scores, vocab, h, d - 1)))
    return edges


def decode_graph_unfactorized(label_scores: ScoreTensor,
                              vocab: LabelVocabulary) -> set[Edge]:
    """Per ordered pair, take the argmax label; add the edge unless it is ∅."""
    if vocab.null_index is None:
        raise ValueError("unfactorized decoding requires a ∅ label")
    n = label_scores.n
    edges: set[Edge] = set()
    for d in range(1, n + 1):
        for h in range(0, n + 1):
            if h == d:
                continue
            best = int(np.argmax(label_scores.scores[h, d - 1]))
            if best != vocab.null_index:
                edges.add((h, d, vocab.labels[best]))
    return edges


def existence_beliefs(arc_scores: ScoreTensor | None,
                      label_scores: ScoreTensor,
                      vocab: LabelVocabulary) -> np.ndarray:
    """(n+1, n) edge-existence probabilities used by connectivity repair:
    sigmoid(arc score) for factorized models, 1 - P(∅) for unfactorized."""
    if arc_scores is not None:
        return _sigmoid(arc_scores.scores[:, :, 0])
    if vocab.null_index is None:
        raise ValueError("need either arc scores or a ∅ label")
    p = _softmax(label_scores.scores, axis=2)
    return 1.0 - p[:, :, vocab.null_index]


def reachable_from_root(edges: set[Edge], n: int) -> set[int]:
    adj: dict[int, list[int]] = {}
    for h, d, _ in edges:
        adj.setdefault(h, []).append(d)
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for u in adj.get(v, ()):
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return seen


def ensure_connected(edges: set[Edge], fallback_scores: np.ndarray,
                     label_scores: ScoreTensor, vocab: LabelVocabulary,
                     n: int) -> set[Edge]:
    """Greedily add the highest-scoring edge from a root-reachable node to an
    unreachable one until every token is reachable from the root.

    fallback_scores: (n+1, n) existence beliefs (see existence_beliefs).
    Original edges are never removed; each round strictly grows the reachable
    set, so at most n edges are added. Ties break toward the lower head index,
    then the lower dependent index.
    """
    out = set(edges)
    while True:
        reach = reachable_from_root(out, n)
        missing = [d for d in range(1, n + 1) if d not in reach]
        if not missing:
            return out
        best = None  # (score, h, d)
        for h in sorted(reach):
            for d in missing:
                if h == d:
                    continue
                s = fallback_scores[h, d - 1]
                if best is None or s > best[0]:
                    best = (s, h, d)
        _, h, d = best
        out.add((h, d, _best_label(label_scores.scores, vocab, h, d - 1)))
