"""Finite-difference validation of the analytic gradients.

Builds small random models and sentences for every architecture cell
(factorized/unfactorized x tree/graph, with tagging heads), computes the
full training loss, and compares backward() gradients against central
finite differences. Dropout and masking stay active: every evaluation
reseeds the same RNG so the stochastic draws are identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tape
from .conllu import Sentence, Token
from .encoder import ContextualVectors
from .model import ParserModel
from .trainer import TrainConfig, sentence_loss

CELLS = [
    ("tree", True), ("tree", False), ("graph", True), ("graph", False),
]


@dataclass
class GradCheckEntry:
    cell: str
    instance: int
    param: str
    max_rel_err: float


def random_sentence(rng: np.random.Generator, n: int, n_labels: int,
                    structure: str) -> Sentence:
    forms = [f"w{rng.integers(0, 12)}" for _ in range(n)]
    upos = [f"P{rng.integers(0, 4)}" for _ in range(n)]
    feats = [f"F={rng.integers(0, 3)}" for _ in range(n)]
    labels = [f"dep{i}" for i in range(n_labels)]
    # Random arborescence: each token attaches to the root or an earlier token.
    order = rng.permutation(n)
    heads = [0] * n
    for rank, j in enumerate(order):
        if rank == 0:
            heads[j] = 0
        else:
            prev = order[:rank]
            heads[j] = int(prev[rng.integers(0, rank)]) + 1
    tokens = []
    for j in range(n):
        deps = []
        if structure == "graph":
            for h in range(0, n + 1):
                if h != j + 1 and rng.random() < 0.3:
                    deps.append((h, labels[int(rng.integers(0, n_labels))]))
            if not deps:
                deps.append((heads[j], labels[int(rng.integers(0, n_labels))]))
        tokens.append(Token(
            id=j + 1, form=forms[j], upos=upos[j], feats=feats[j],
            head=heads[j], deprel=labels[int(rng.integers(0, n_labels))],
            deps=tuple(sorted(set(deps)))))
    return Sentence(tuple(tokens))


def _build_instance(structure: str, factorized: bool, contextual: bool,
                    seed: int) -> tuple[ParserModel, Sentence,
                                        ContextualVectors | None, TrainConfig]:
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    sent = random_sentence(rng, n, n_labels=3, structure=structure)
    config = TrainConfig(
        structure=structure, factorized=factorized, task_mode="mtl",
        encoder="contextual" if contextual else "static",
        embed_dim=8, arc_dim=8, label_dim=6,
        token_mask_prob=0.2, layer_dropout=0.15,
        output_dropout=0.25, scorer_dropout=0.25, seed=seed)
    vectors = None
    layers, dim = 3, 8
    if contextual:
        vectors = ContextualVectors(rng.normal(size=(layers, n, dim)), "random")
        mc = config.model_config(layers, dim)
    else:
        mc = config.model_config()
    from .trainer import build_vocabularies
    label_vocab, upos_vocab, ufeats_vocab, forms = build_vocabularies([sent], config)
    model = ParserModel(mc, label_vocab, rng, forms=forms,
                        upos_vocab=upos_vocab, ufeats_vocab=ufeats_vocab)
    # Nudge parameters away from the symmetric init so gradients are generic.
    prng = np.random.default_rng(seed + 1)
    for p in model.parameters():
        p.values += 0.1 * prng.normal(size=p.values.shape)
    return model, sent, vectors, config


def _loss_value(model: ParserModel, sent: Sentence, vectors, config: TrainConfig,
                draw_seed: int) -> float:
    tape = Tape()
    loss = sentence_loss(tape, model, sent, config, vectors=vectors,
                         training=True, rng=np.random.default_rng(draw_seed))
    return float(loss.value), tape, loss


def check_instance(structure: str, factorized: bool, contextual: bool,
                   seed: int, step: float = 1e-4,
                   max_entries_per_param: int = 24) -> list[tuple[str, float]]:
    """Max relative FD error per parameter for one random instance."""
    model, sent, vectors, config = _build_instance(structure, factorized,
                                                   contextual, seed)
    draw_seed = seed + 7919
    _, tape, loss = _loss_value(model, sent, vectors, config, draw_seed)
    tape.backward(loss)
    analytic = {p.name: p.gradient.copy() for p in model.parameters()}
    for p in model.parameters():
        p.zero_grad()

    sub_rng = np.random.default_rng(seed + 17)
    results = []
    for p in model.parameters():
        flat = p.values.reshape(-1)
        grad = analytic[p.name].reshape(-1)
        size = flat.size
        if size <= max_entries_per_param:
            idxs = np.arange(size)
        else:
            idxs = sub_rng.choice(size, size=max_entries_per_param, replace=False)
        worst = 0.0
        for i in idxs:
            orig = flat[i]
            flat[i] = orig + step
            up, _, _ = _loss_value(model, sent, vectors, config, draw_seed)
            flat[i] = orig - step
            down, _, _ = _loss_value(model, sent, vectors, config, draw_seed)
            flat[i] = orig
            fd = (up - down) / (2 * step)
            denom = max(1.0, abs(fd), abs(grad[i]))
            worst = max(worst, abs(fd - grad[i]) / denom)
        results.append((p.name, worst))
    return results


def run_gradcheck(seed: int = 0, instances_per_cell: int = 20,
                  tolerance: float = 1e-4) -> tuple[bool, list[GradCheckEntry]]:
    """Run the full suite; returns (all_passed, worst entry per cell/param)."""
    entries: list[GradCheckEntry] = []
    ok = True
    for structure, factorized in CELLS:
        cell = f"{'fact' if factorized else 'unfact'}-{structure}"
        for k in range(instances_per_cell):
            contextual = k % 2 == 1
            for name, err in check_instance(structure, factorized, contextual,
                                            seed=seed * 100003 + k):
                entries.append(GradCheckEntry(cell, k, name, err))
                if err >= tolerance:
                    ok = False
    return ok, entries


def worst_by_param(entries: list[GradCheckEntry]) -> dict[str, float]:
    worst: dict[str, float] = {}
    for e in entries:
        key = f"{e.cell}:{e.param}"
        worst[key] = max(worst.get(key, 0.0), e.max_rel_err)
    return worst
