"""Inference pipeline: encode -> score -> decode -> (relexicalize) -> Sentence."""

from __future__ import annotations

from dataclasses import replace

from .conllu import Sentence
from .encoder import ContextualVectors
from .graph_decode import (decode_graph_factorized, decode_graph_unfactorized,
                           ensure_connected, existence_beliefs)
from .lexicalize import LexRuleConfig, relexicalize
from .model import ParserModel
from .tree_decode import decode_tree_factorized, decode_tree_unfactorized


def parse_sentence(model: ParserModel, sent: Sentence,
                   vectors: ContextualVectors | None = None,
                   lex_config: LexRuleConfig | None = None,
                   single_root: bool = True,
                   tag: bool = False) -> Sentence:
    """Parse one sentence with a trained model.

    Tree models fill HEAD/DEPREL; graph models fill DEPS (root-reachable,
    relexicalized). With tag=True a multitask model also fills UPOS/FEATS.
    """
    if len(sent) == 0:
        return sent
    arc, label = model.score_sentence(sent, vectors)
    vocab = model.label_vocab
    tokens = list(sent.tokens)

    if model.config.structure == "tree":
        if model.config.factorized:
            heads, labels = decode_tree_factorized(arc, label, vocab, single_root)
        else:
            heads, labels = decode_tree_unfactorized(label, vocab, single_root)
        tokens = [t.with_tree(h, lab) for t, h, lab in zip(tokens, heads, labels)]
    else:
        if model.config.factorized:
            edges = decode_graph_factorized(arc, label, vocab)
        else:
            edges = decode_graph_unfactorized(label, vocab)
        beliefs = existence_beliefs(arc, label, vocab)
        edges = ensure_connected(edges, beliefs, label, vocab, len(sent))
        by_dep: dict[int, list[tuple[int, str]]] = {}
        for h, d, lab in edges:
            by_dep.setdefault(d, []).append((h, lab))
        tokens = [t.with_deps(by_dep.get(t.id, [])) for t in tokens]

    out = Sentence(tuple(tokens), sent.comments, sent.multiword_ranges)
    if model.config.structure == "graph":
        out = relexicalize(out, lex_config or LexRuleConfig())
    if tag and model.upos_head is not None:
        upos, feats = model.tag_sentence(sent, vectors)
        out = Sentence(
            tuple(replace(t, upos=u, feats=f)
                  for t, u, f in zip(out.tokens, upos, feats)),
            out.comments, out.multiword_ranges)
    return out


def parse_sentences(model: ParserModel, sents: list[Sentence],
                    vectors: list[ContextualVectors] | None = None,
                    lex_config: LexRuleConfig | None = None,
                    single_root: bool = True,
                    tag: bool = False) -> list[Sentence]:
    if vectors is not None and len(vectors) != len(sents):
        raise ValueError(
            f"{len(sents)} sentences but {len(vectors)} vector blocks")
    out = []
    for i, sent in enumerate(sents):
        vec = vectors[i] if vectors is not None else None
        out.append(parse_sentence(model, sent, vec, lex_config, single_root, tag))
    return out
