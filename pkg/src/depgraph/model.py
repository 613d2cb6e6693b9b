"""The parser model: encoder parameters, biaffine scorers, tagging heads.

Four architecture cells are supported: {factorized, unfactorized} x
{tree, graph}. Factorized models carry an arc scorer (k=1) and a label
scorer; unfactorized models carry a single label scorer whose vocabulary
includes the synthetic ∅ (no-edge) label.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Node, Parameter, Tape
from .conllu import Sentence
from .encoder import (ContextualVectors, ScalarMixture, StaticEmbeddings,
                      dropout, encode)
from .scorers import BiaffineScorer, LabelVocabulary, ScoreTensor
from .taggers import TagHead, TagVocabulary


@dataclass
class ModelConfig:
    structure: str = "tree"  # tree | graph
    factorized: bool = True
    encoder: str = "static"  # static | contextual
    embed_dim: int = 64
    context_layers: int = 0
    context_dim: int = 0
    arc_dim: int = 768
    label_dim: int = 256
    activation: str = "gelu"
    output_dropout: float = 0.5
    scorer_dropout: float = 0.33
    token_mask_prob: float = 0.15
    layer_dropout: float = 0.1
    multitask: bool = False

    def __post_init__(self):
        if self.structure not in ("tree", "graph"):
            raise ValueError(f"unknown structure {self.structure!r}")
        if self.encoder not in ("static", "contextual"):
            raise ValueError(f"unknown encoder {self.encoder!r}")

    @property
    def rep_dim(self) -> int:
        return self.embed_dim if self.encoder == "static" else self.context_dim

    @property
    def arc_kind(self) -> str:
        return "arc-tree" if self.structure == "tree" else "arc-graph-binary"

    @property
    def label_kind(self) -> str:
        return "label" if self.factorized else "label-with-null"


class ParserModel:
    def __init__(self, config: ModelConfig, label_vocab: LabelVocabulary,
                 rng: np.random.Generator,
                 forms: list[str] | None = None,
                 upos_vocab: TagVocabulary | None = None,
                 ufeats_vocab: TagVocabulary | None = None,
                 embedding_vocab: list[str] | None = None):
        if config.factorized != (label_vocab.null_index is None):
            raise ValueError("label vocabulary must carry ∅ iff the model is unfactorized")
        self.config = config
        self.label_vocab = label_vocab
        self.upos_vocab = upos_vocab
        self.ufeats_vocab = ufeats_vocab

        d = config.rep_dim
        self.embeddings: StaticEmbeddings | None = None
        self.mixtures: dict[str, ScalarMixture] = {}
        if config.encoder == "static":
            if embedding_vocab is not None:
                self.embeddings = StaticEmbeddings.from_vocab(
                    embedding_vocab, config.embed_dim, rng)
            else:
                self.embeddings = StaticEmbeddings(forms or [], config.embed_dim, rng)
        else:
            if config.context_layers < 1 or config.context_dim < 1:
                raise ValueError("contextual encoder requires context_layers and context_dim")
            for task in self._active_tasks():
                self.mixtures[task] = ScalarMixture(config.context_layers, task)

        scale = 1.0 / np.sqrt(d)
        self.mask_vector = Parameter(rng.uniform(-scale, scale, size=d), "encoder/mask_vector")
        self.root_vector = Parameter(rng.uniform(-scale, scale, size=d), "encoder/root_vector")

        self.arc_scorer: BiaffineScorer | None = None
        if config.factorized:
            self.arc_scorer = BiaffineScorer("arc", d, config.arc_dim, 1, rng,
                                             config.activation)
        self.label_scorer = BiaffineScorer("label", d, config.label_dim,
                                           len(label_vocab), rng, config.activation)

        self.upos_head: TagHead | None = None
        self.ufeats_head: TagHead | None = None
        if config.multitask:
            if upos_vocab is None or ufeats_vocab is None:
                raise ValueError("multitask model requires UPOS and UFeats vocabularies")
            self.upos_head = TagHead("upos", d, upos_vocab, rng)
            self.ufeats_head = TagHead("ufeats", d, ufeats_vocab, rng)

    def _active_tasks(self) -> list[str]:
        tasks = ["label"] if not self.config.factorized else ["arc", "label"]
        if self.config.multitask:
            tasks += ["upos", "ufeats"]
        return tasks

    def parameters(self) -> list[Parameter]:
        params: list[Parameter] = []
        if self.embeddings is not None:
            params.append(self.embeddings.table)
        for task in self._active_tasks():
            if task in self.mixtures:
                params.append(self.mixtures[task].logits)
        params += [self.mask_vector, self.root_vector]
        if self.arc_scorer is not None:
            params += self.arc_scorer.parameters()
        params += self.label_scorer.parameters()
        for head in (self.upos_head, self.ufeats_head):
            if head is not None:
                params += head.parameters()
        return params

    # -- forward -----------------------------------------------------------

    def encode_tasks(self, tape: Tape, sentence: Sentence,
                     vectors: ContextualVectors | None,
                     training: bool = False,
                     rng: np.random.Generator | None = None) -> dict[str, Node]:
        """Per-task (n, d) representations.

        With static embeddings all tasks share one representation; with
        contextual vectors each task mixes the layers with its own weights.
        The token-mask draw is shared across tasks so the same surface
        positions are masked everywhere.
        """
        cfg = self.config
        reps: dict[str, Node] = {}
        mask_draw = None
        if training and rng is not None and cfg.token_mask_prob > 0.0:
            mask_draw = rng.random(len(sentence)) < cfg.token_mask_prob

        def finish(r: Node) -> Node:
            if mask_draw is not None and mask_draw.any():
                r = tape.replace_rows(r, mask_draw, tape.param(self.mask_vector))
            return dropout(tape, r, cfg.output_dropout, training, rng)

        if cfg.encoder == "static":
            shared = finish(encode(tape, sentence, self.embeddings, None))
            for task in self._active_tasks():
                reps[task] = shared
            return reps
        if vectors is None:
            raise ValueError("contextual model requires precomputed vectors")
        for task in self._active_tasks():
            r = encode(tape, sentence, vectors, self.mixtures[task],
                       training=training, layer_dropout=cfg.layer_dropout, rng=rng)
            reps[task] = finish(r)
        return reps

    def score_nodes(self, tape: Tape, reps: dict[str, Node],
                    training: bool = False,
                    rng: np.random.Generator | None = None) -> tuple[Node | None, Node]:
        """Arc and label score nodes for one sentence; arc is None when
        unfactorized."""
        cfg = self.config
        root = tape.param(self.root_vector)
        arc_node = None
        if self.arc_scorer is not None:
            r = reps["arc"]
            arc_node = self.arc_scorer.score(
                tape, tape.vstack(root, r), r, cfg.scorer_dropout, training, rng)
        r = reps["label"]
        label_node = self.label_scorer.score(
            tape, tape.vstack(root, r), r, cfg.scorer_dropout, training, rng)
        return arc_node, label_node

    def score_sentence(self, sentence: Sentence,
                       vectors: ContextualVectors | None = None
                       ) -> tuple[ScoreTensor | None, ScoreTensor]:
        """Inference-mode score tensors (no dropout, no masking)."""
        tape = Tape()
        reps = self.encode_tasks(tape, sentence, vectors, training=False)
        arc_node, label_node = self.score_nodes(tape, reps, training=False)
        arc = ScoreTensor(arc_node.value, self.config.arc_kind) if arc_node is not None else None
        return arc, ScoreTensor(label_node.value, self.config.label_kind)

    def tag_sentence(self, sentence: Sentence,
                     vectors: ContextualVectors | None = None) -> tuple[list[str], list[str]]:
        """Predicted (UPOS, UFeats) sequences; requires a multitask model."""
        if self.upos_head is None or self.ufeats_head is None:
            raise ValueError("model has no tagging heads")
        tape = Tape()
        reps = self.encode_tasks(tape, sentence, vectors, training=False)
        upos = self.upos_head.predict(self.upos_head.tag_scores(tape, reps["upos"]).value)
        feats = self.ufeats_head.predict(self.ufeats_head.tag_scores(tape, reps["ufeats"]).value)
        return upos, feats

    # -- state -------------------------------------------------------------

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {p.name: p.values for p in self.parameters()}

    def load_state(self, arrays: dict[str, np.ndarray]) -> None:
        for p in self.parameters():
            if p.name not in arrays:
                raise KeyError(f"checkpoint missing parameter {p.name}")
            if arrays[p.name].shape != p.values.shape:
                raise ValueError(
                    f"parameter {p.name}: checkpoint shape {arrays[p.name].shape} "
                    f"!= model shape {p.values.shape}")
            p.values[...] = arrays[p.name]

    def snapshot(self) -> dict[str, np.ndarray]:
        return {p.name: p.values.copy() for p in self.parameters()}
