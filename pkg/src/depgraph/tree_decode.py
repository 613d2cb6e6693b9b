"""Labeled tree extraction from score tensors via maximum spanning arborescence.

Edge weights are log-probabilities: per-dependent head softmax in the
factorized case, log(1 - P(∅)) per cell in the unfactorized case. Self-arcs
are masked to -inf. Tie-breaking is deterministic (lower head index first,
then lower dependent index).
"""

from __future__ import annotations

import numpy as np

from .scorers import LabelVocabulary, ScoreTensor

NEG_INF = -np.inf
_EPS = 1e-12


class InfeasibleTree(ValueError):
    """No arborescence exists (every candidate head of some token is masked)."""


def cle_mst(weights: np.ndarray, single_root: bool = True) -> list[int]:
    """Maximum spanning arborescence rooted at the synthetic node 0.

    weights: (n+1, n) matrix; weights[h, d] is the score of attaching
    dependent d+1 to head h (h = 0 is the root). Masked edges are -inf.
    Returns the head assignment (length n, entries in 0..n).

    With single_root=True, exactly one token may attach to the root.
    """
    weights = np.asarray(weights, dtype=np.float64)
    n = weights.shape[1]
    if weights.shape[0] != n + 1:
        raise ValueError(f"expected (n+1, n) weight matrix, got {weights.shape}")
    if n == 0:
        return []
    # Square matrix over nodes 0..n; w[h, d] = weight of edge h -> d.
    w = np.full((n + 1, n + 1), NEG_INF)
    w[:, 1:] = weights
    np.fill_diagonal(w, NEG_INF)
    for d in range(1, n + 1):
        if np.all(np.isinf(w[:, d])):
            raise InfeasibleTree(f"token {d} has no admissible head")

    heads = _cle(w)
    if not single_root:
        return heads
    root_children = [d for d in range(1, n + 1) if heads[d - 1] == 0]
    if len(root_children) <= 1:
        return heads
    # Force each candidate token in turn to be the unique root child; keep
    # the best-scoring solution (ties resolved toward the lower token index).
    best_heads, best_weight = None, NEG_INF
    for t in range(1, n + 1):
        if np.isinf(w[0, t]):
            continue
        wt = w.copy()
        wt[0, :] = NEG_INF
        wt[0, t] = w[0, t]
        try:
            cand = _cle(wt)
        except InfeasibleTree:
            continue
        total = sum(w[h, d + 1] for d, h in enumerate(cand))
        if total > best_weight:
            best_heads, best_weight = cand, total
    if best_heads is None:
        raise InfeasibleTree("no single-rooted arborescence exists")
    return best_heads


def _cle(w: np.ndarray) -> list[int]:
    """Chu-Liu/Edmonds on a dense (m+1) x (m+1) matrix; node 0 is the root.

    Recursive contraction formulation; returns heads for nodes 1..m.
    """
    m = w.shape[0] - 1
    # Greedy best head per non-root node.
    best_head = np.zeros(m + 1, dtype=np.intp)
    for d in range(1, m + 1):
        best_head[d] = int(np.argmax(w[:, d]))
        if np.isinf(w[best_head[d], d]):
            raise InfeasibleTree(f"node {d} has no admissible head")

    cycle = _find_cycle(best_head, m)
    if cycle is None:
        return [int(best_head[d]) for d in range(1, m + 1)]

    cycle_set = set(cycle)
    cycle_weight = sum(w[best_head[d], d] for d in cycle)
    rest = [v for v in range(m + 1) if v not in cycle_set]  # includes root 0
    c_idx = len(rest)  # contracted node gets the last index

    # Build the contracted matrix.
    wc = np.full((c_idx + 1, c_idx + 1), NEG_INF)
    pos = {v: i for i, v in enumerate(rest)}
    enter_choice: dict[int, int] = {}  # head in `rest` -> chosen cycle entry node
    leave_choice: dict[int, int] = {}  # dependent in `rest` -> chosen cycle exit node
    for a in rest:
        for b in rest:
            wc[pos[a], pos[b]] = w[a, b]
    for a in rest:
        # Entering the cycle at node v replaces v's in-cycle edge.
        best_val, best_v = NEG_INF, None
        for v in cycle:
            val = w[a, v] + cycle_weight - w[best_head[v], v]
            if val > best_val:
                best_val, best_v = val, v
        if best_v is not None:
            wc[pos[a], c_idx] = best_val
            enter_choice[a] = best_v
        # Leaving the cycle toward a.
        if a != 0:
            vals = [w[v, a] for v in cycle]
            vi = int(np.argmax(vals))
            if not np.isinf(vals[vi]):
                wc[c_idx, pos[a]] = vals[vi]
                leave_choice[a] = cycle[vi]

    sub_heads = _cle(wc)  # heads for contracted nodes 1..c_idx

    heads = [0] * (m + 1)
    for d in range(1, m + 1):
        if d in cycle_set:
            heads[d] = int(best_head[d])  # provisional; entry edge fixed below
    for i, v in enumerate(rest[1:], start=1):
        h = sub_heads[i - 1]
        if h == c_idx:
            heads[v] = leave_choice[v]
        else:
            heads[v] = rest[h]
    # The contracted node's head defines where the cycle is broken.
    hc = sub_heads[c_idx - 1]
    entry_head = rest[hc]
    entry_node = enter_choice[entry_head]
    heads[entry_node] = entry_head
    return heads[1:]


def _find_cycle(best_head: np.ndarray, m: int) -> list[int] | None:
    color = np.zeros(m + 1, dtype=np.int8)  # 0 unseen, 1 in progress, 2 done
    color[0] = 2
    for start in range(1, m + 1):
        if color[start]:
            continue
        path = []
        v = start
        while color[v] == 0:
            color[v] = 1
            path.append(v)
            v = int(best_head[v])
        if color[v] == 1:  # found a new cycle; extract it
            cycle = path[path.index(v):]
            for u in path:
                color[u] = 2
            return cycle
        for u in path:
            color[u] = 2
    return None


def _log_softmax(x: np.ndarray, axis: int) -> np.ndarray:
    mx = np.max(x, axis=axis, keepdims=True)
    z = x - mx
    return z - np.log(np.sum(np.exp(z), axis=axis, keepdims=True))


def _self_arc_mask(n: int) -> np.ndarray:
    """(n+1, n) boolean; True where head == dependent token."""
    mask = np.zeros((n + 1, n), dtype=bool)
    for j in range(n):
        mask[j + 1, j] = True
    return mask


def _label_edges(label_scores: ScoreTensor, vocab: LabelVocabulary,
                 heads: list[int]) -> list[str]:
    s = label_scores.scores
    labels = []
    exclude_null = vocab.null_index
    for j, h in enumerate(heads):
        channel = s[h, j].copy()
        if exclude_null is not None:
            channel[exclude_null] = NEG_INF
        labels.append(vocab.label_of(int(np.argmax(channel))))
    return labels


def decode_tree_factorized(arc_scores: ScoreTensor, label_scores: ScoreTensor,
                           vocab: LabelVocabulary,
                           single_root: bool = True) -> tuple[list[int], list[str]]:
    """Heads via CLE over per-dependent log-probabilities; labels via argmax
    at the chosen (head, dependent) cells."""
    if arc_scores.kind != "arc-tree" or arc_scores.k != 1:
        raise ValueError(f"expected arc-tree scores, got {arc_scores.kind}/{arc_scores.k}")
    n = arc_scores.n
    raw = arc_scores.scores[:, :, 0].copy()
    raw[_self_arc_mask(n)] = NEG_INF
    weights = _log_softmax(raw, axis=0)
    weights[_self_arc_mask(n)] = NEG_INF
    heads = cle_mst(weights, single_root=single_root)
    return heads, _label_edges(label_scores, vocab, heads)


def decode_tree_unfactorized(label_scores: ScoreTensor, vocab: LabelVocabulary,
                             single_root: bool = True) -> tuple[list[int], list[str]]:
    """Edge weight log(1 - P(∅)) from the per-cell label softmax, then CLE;
    labels via argmax over the non-∅ channels."""
    if vocab.null_index is None:
        raise ValueError("unfactorized decoding requires a ∅ label in the vocabulary")
    n = label_scores.n
    s = label_scores.scores
    logp = _log_softmax(s, axis=2)
    p_null = np.exp(logp[:, :, vocab.null_index])
    weights = np.log(np.maximum(1.0 - p_null, _EPS))
    weights[_self_arc_mask(n)] = NEG_INF
    heads = cle_mst(weights, single_root=single_root)
    return heads, _label_edges(label_scores, vocab, heads)
