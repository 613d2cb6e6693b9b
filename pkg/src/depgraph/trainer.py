"""Loss computation, multi-task aggregation, and the training loop.

Losses are means per sentence, then averaged over the batch (so the loss
weights keep their meaning regardless of batch size). The combined
dependency loss is lambda_edge * l_edge + lambda_label * l_label; tagging
losses are added as-is (MTL) or scaled down (MTLscale).
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass

import numpy as np

from .autodiff import Node, Tape
from .conllu import Sentence
from .encoder import ContextualVectors
from .evaluate import evaluate
from .lexicalize import LexRuleConfig, delexicalize
from .model import ModelConfig, ParserModel
from .optim import AdamW, noam_lr
from .pipeline import parse_sentences
from .scorers import LabelVocabulary
from .taggers import TagVocabulary

TASK_MODES = ("dep-only", "mtl", "mtl-scale")


@dataclass
class TrainConfig:
    # architecture
    structure: str = "tree"  # tree | graph
    factorized: bool = True
    task_mode: str = "dep-only"
    encoder: str = "static"  # static | contextual
    embed_dim: int = 64
    arc_dim: int = 768
    label_dim: int | None = None  # 256 factorized, encoder dim unfactorized
    activation: str = "gelu"
    # regularization
    token_mask_prob: float = 0.15
    layer_dropout: float = 0.1
    output_dropout: float = 0.5
    scorer_dropout: float = 0.33
    # loss weighting
    lambda_edge: float = 1.0
    lambda_label: float | None = None  # 1.0 tree, 0.05 graph
    tag_loss_scale: float = 0.05
    # optimization
    batch_size: int = 32
    base_lr: float = 4e-5
    beta1: float = 0.9
    beta2: float = 0.999
    weight_decay: float = 0.0
    warmup_epochs: float = 1.0
    patience: int = 15
    max_epochs: int = 1000
    max_hours: float | None = None
    seed: int = 42
    # decoding
    single_root: bool = True

    def __post_init__(self):
        if self.task_mode not in TASK_MODES:
            raise ValueError(f"unknown task_mode {self.task_mode!r}")
        if self.lambda_edge <= 0 or self.tag_loss_scale <= 0:
            raise ValueError("loss scales must be positive")
        if self.lambda_label is not None and self.lambda_label <= 0:
            raise ValueError("lambda_label must be positive")

    def resolved_lambda_label(self) -> float:
        if self.lambda_label is not None:
            return self.lambda_label
        return 1.0 if self.structure == "tree" else 0.05

    def model_config(self, context_layers: int = 0, context_dim: int = 0) -> ModelConfig:
        label_dim = self.label_dim
        if label_dim is None:
            rep = self.embed_dim if self.encoder == "static" else context_dim
            label_dim = 256 if self.factorized else rep
        return ModelConfig(
            structure=self.structure, factorized=self.factorized,
            encoder=self.encoder, embed_dim=self.embed_dim,
            context_layers=context_layers, context_dim=context_dim,
            arc_dim=self.arc_dim, label_dim=label_dim,
            activation=self.activation, output_dropout=self.output_dropout,
            scorer_dropout=self.scorer_dropout,
            token_mask_prob=self.token_mask_prob, layer_dropout=self.layer_dropout,
            multitask=self.task_mode != "dep-only",
        )

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        return cls(**data)


def _pair_mask(n: int) -> np.ndarray:
    """(n+1, n) admissibility: every head for every dependent except self."""
    mask = np.ones((n + 1, n), dtype=bool)
    for j in range(n):
        mask[j + 1, j] = False
    return mask


def _arc_logits_per_dependent(tape: Tape, arc_node: Node, n: int) -> Node:
    """(n, n+1): row j holds dependent j's scores over candidate heads."""
    flat = tape.reshape(arc_node, (n + 1, n))
    return tape.transpose(flat, (1, 0))


def loss_tree_factorized(tape: Tape, arc_node: Node, label_node: Node,
                         gold_heads: list[int], gold_label_ids: list[int],
                         lambda_edge: float, lambda_label: float) -> Node:
    n = len(gold_heads)
    logits = _arc_logits_per_dependent(tape, arc_node, n)
    admissible = _pair_mask(n).T  # (n, n+1)
    l_edge = tape.softmax_cross_entropy(logits, np.array(gold_heads), admissible)
    cells = np.array([[h, j] for j, h in enumerate(gold_heads)])
    l_label = tape.softmax_cross_entropy(
        tape.gather_cells(label_node, cells), np.array(gold_label_ids))
    return tape.add_scaled([(lambda_edge, l_edge), (lambda_label, l_label)])


def loss_graph_factorized(tape: Tape, arc_node: Node, label_node: Node,
                          gold_edges: list[tuple[int, int, int]], n: int,
                          lambda_edge: float, lambda_label: float) -> Node:
    """gold_edges: (head, dependent 1-based, label id) triples."""
    targets = np.zeros((n + 1, n))
    for h, d, _ in gold_edges:
        targets[h, d - 1] = 1.0
    mask = _pair_mask(n)
    l_edge = tape.sigmoid_cross_entropy(
        tape.reshape(arc_node, (n + 1, n)), targets, mask)
    if gold_edges:
        cells = np.array([[h, d - 1] for h, d, _ in gold_edges])
        ids = np.array([lab for _, _, lab in gold_edges])
        l_label = tape.softmax_cross_entropy(tape.gather_cells(label_node, cells), ids)
    else:
        l_label = tape.const(0.0)
    return tape.add_scaled([(lambda_edge, l_edge), (lambda_label, l_label)])


def loss_unfactorized(tape: Tape, label_node: Node, n: int,
                      gold_matrix: np.ndarray) -> Node:
    """Mean cross-entropy over all admissible (head, dependent) pairs.

    gold_matrix: (n+1, n) int ids; non-edges carry the ∅ id.
    """
    mask = _pair_mask(n)
    hh, jj = np.nonzero(mask)
    cells = np.stack([hh, jj], axis=1)
    logits = tape.gather_cells(label_node, cells)
    return tape.softmax_cross_entropy(logits, gold_matrix[hh, jj])


def unfactorized_gold_matrix(sent: Sentence, vocab: LabelVocabulary,
                             structure: str) -> np.ndarray:
    """Gold class per (head, dependent) cell: the gold label, or ∅."""
    n = len(sent)
    gold = np.full((n + 1, n), vocab.null_index, dtype=np.intp)
    if structure == "tree":
        for j, tok in enumerate(sent.tokens):
            gold[tok.head, j] = vocab.id_of(tok.deprel)
    else:
        for h, d, lab in sorted(sent.enhanced_edges()):
            gold[h, d - 1] = vocab.id_of(lab)
    return gold


def tag_loss(tape: Tape, logits: Node, gold_ids: list[int]) -> Node:
    return tape.softmax_cross_entropy(logits, np.array(gold_ids, dtype=np.intp))


def total_loss(tape: Tape, dep_loss: Node, upos_loss: Node | None,
               ufeats_loss: Node | None, task_mode: str,
               tag_loss_scale: float = 0.05) -> Node:
    if task_mode == "dep-only" or upos_loss is None:
        return dep_loss
    scale = 1.0 if task_mode == "mtl" else tag_loss_scale
    return tape.add_scaled([(1.0, dep_loss), (scale, upos_loss), (scale, ufeats_loss)])


def sentence_loss(tape: Tape, model: ParserModel, sent: Sentence,
                  config: TrainConfig,
                  vectors: ContextualVectors | None = None,
                  training: bool = True,
                  rng: np.random.Generator | None = None) -> Node:
    """Forward pass and combined loss for one (gold-annotated) sentence."""
    reps = model.encode_tasks(tape, sent, vectors, training=training, rng=rng)
    arc_node, label_node = model.score_nodes(tape, reps, training=training, rng=rng)
    vocab = model.label_vocab
    lam_e, lam_l = config.lambda_edge, config.resolved_lambda_label()
    n = len(sent)

    if not config.factorized:
        gold = unfactorized_gold_matrix(sent, vocab, config.structure)
        dep = loss_unfactorized(tape, label_node, n, gold)
    elif config.structure == "tree":
        heads = sent.tree_heads()
        label_ids = [vocab.id_of(t.deprel) for t in sent.tokens]
        dep = loss_tree_factorized(tape, arc_node, label_node, heads, label_ids,
                                   lam_e, lam_l)
    else:
        edges = [(h, d, vocab.id_of(lab)) for h, d, lab in sorted(sent.enhanced_edges())]
        dep = loss_graph_factorized(tape, arc_node, label_node, edges, n, lam_e, lam_l)

    upos_l = ufeats_l = None
    if model.upos_head is not None:
        upos_l = tag_loss(tape, model.upos_head.tag_scores(tape, reps["upos"]),
                          [model.upos_vocab.id_of(t.upos) for t in sent.tokens])
        ufeats_l = tag_loss(tape, model.ufeats_head.tag_scores(tape, reps["ufeats"]),
                            [model.ufeats_vocab.id_of(t.feats) for t in sent.tokens])
    return total_loss(tape, dep, upos_l, ufeats_l, config.task_mode,
                      config.tag_loss_scale)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    dev_metric: float
    lr: float
    seconds: float

    def to_json(self) -> str:
        return json.dumps({"epoch": self.epoch, "train_loss": round(self.train_loss, 6),
                           "dev_metric": round(self.dev_metric, 6),
                           "lr": self.lr, "seconds": round(self.seconds, 3)})


@dataclass
class TrainResult:
    model: ParserModel
    history: list[EpochRecord]
    best_epoch: int
    best_metric: float
    selection_metric: str


def build_vocabularies(train: list[Sentence], config: TrainConfig
                       ) -> tuple[LabelVocabulary, TagVocabulary, TagVocabulary, list[str]]:
    if config.structure == "tree":
        labels = [t.deprel for s in train for t in s.tokens if t.deprel is not None]
    else:
        labels = [lab for s in train for _, _, lab in s.enhanced_edges()]
    label_vocab = LabelVocabulary(labels, with_null=not config.factorized)
    upos = TagVocabulary([t.upos for s in train for t in s.tokens])
    ufeats = TagVocabulary([t.feats for s in train for t in s.tokens])
    forms = [t.form for s in train for t in s.tokens]
    return label_vocab, upos, ufeats, forms


def train(train_sents: list[Sentence], dev_sents: list[Sentence],
          config: TrainConfig,
          train_vectors: list[ContextualVectors] | None = None,
          dev_vectors: list[ContextualVectors] | None = None,
          lex_config: LexRuleConfig | None = None,
          log=None) -> TrainResult:
    """Train a parser; returns the best-on-dev model.

    Selection metric: LAS for trees, ELAS for graphs. For graph parsing the
    gold enhanced labels are delexicalized for training, and dev predictions
    are relexicalized before evaluation.
    """
    rng = np.random.default_rng(config.seed)
    lex_config = lex_config or LexRuleConfig()

    gold_dev = dev_sents
    if config.structure == "graph":
        train_sents = [delexicalize(s, lex_config) for s in train_sents]

    label_vocab, upos_vocab, ufeats_vocab, forms = build_vocabularies(train_sents, config)
    if config.encoder == "contextual":
        if not train_vectors or not dev_vectors:
            raise ValueError("contextual training requires vector files for train and dev")
        mc = config.model_config(train_vectors[0].n_layers, train_vectors[0].dim)
    else:
        mc = config.model_config()
    model = ParserModel(mc, label_vocab, rng, forms=forms,
                        upos_vocab=upos_vocab, ufeats_vocab=ufeats_vocab)

    optimizer = AdamW(model.parameters(), beta1=config.beta1, beta2=config.beta2,
                      weight_decay=config.weight_decay)
    steps_per_epoch = max(1, math.ceil(len(train_sents) / config.batch_size))
    warmup_steps = max(1, round(steps_per_epoch * config.warmup_epochs))
    selection = "LAS" if config.structure == "tree" else "ELAS"

    history: list[EpochRecord] = []
    best_metric, best_epoch = -1.0, 0
    best_state = model.snapshot()
    start = time.monotonic()
    step = 0
    order = np.arange(len(train_sents))

    for epoch in range(1, config.max_epochs + 1):
        t0 = time.monotonic()
        rng.shuffle(order)
        epoch_loss = 0.0
        lr = 0.0
        for b0 in range(0, len(order), config.batch_size):
            batch = order[b0:b0 + config.batch_size]
            for idx in batch:
                tape = Tape()
                vec = train_vectors[idx] if train_vectors is not None else None
                loss = sentence_loss(tape, model, train_sents[idx], config,
                                     vectors=vec, training=True, rng=rng)
                tape.backward(loss, seed=1.0 / len(batch))
                epoch_loss += float(loss.value)
            step += 1
            lr = noam_lr(step, config.base_lr, warmup_steps)
            optimizer.step(lr)

        predicted = parse_sentences(model, gold_dev, vectors=dev_vectors,
                                    lex_config=lex_config,
                                    single_root=config.single_root)
        mode = "basic" if config.structure == "tree" else "enhanced"
        report = evaluate(gold_dev, predicted, mode=mode)
        metric = report[selection].f1 if mode == "enhanced" else report[selection].accuracy
        record = EpochRecord(epoch, epoch_loss / max(1, len(train_sents)), metric,
                             lr, time.monotonic() - t0)
        history.append(record)
        if log is not None:
            log(record)
        if metric > best_metric:
            best_metric, best_epoch = metric, epoch
            best_state = model.snapshot()
        if epoch - best_epoch > config.patience:
            break
        if config.max_hours is not None and \
                (time.monotonic() - start) > config.max_hours * 3600:
            break

    model.load_state(best_state)
    return TrainResult(model, history, best_epoch, best_metric, selection)
