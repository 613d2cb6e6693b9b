#!/usr/bin/env python3
"""Generate the synthetic treebank fixtures used by the test suite.

The grammar is slot-deterministic: every word type occurs in exactly one
syntactic slot, so attachments and labels are learnable from pairwise static
embeddings alone. A configurable fraction of noun slots is filled from a
shared "ambiguous" pool whose role (subject vs. object) depends on position;
those tokens make the label task unsolvable for context-free embeddings,
which is what the contextual-vs-static comparisons measure.

Run from the repository root:  python3 scripts/make_fixtures.py
"""

from __future__ import annotations

import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from depgraph.conllu import Sentence, Token, write_conllu_file  # noqa: E402

SUBJ_NOUNS = [f"mira{i}" for i in range(10)]
OBJ_NOUNS = [f"talo{i}" for i in range(10)]
OBL_NOUNS = [f"ranta{i}" for i in range(8)]
VERBS = [f"kelda{i}" for i in range(8)]
SUBJ_ADJS = [f"veni{i}" for i in range(6)]
OBJ_ADJS = [f"solu{i}" for i in range(6)]
AMBIG_NOUNS = [f"parn{i}" for i in range(8)]  # subject or object by position
PREPS = ["at", "in", "near", "with"]
CONJS = ["or", "and"]

FEATS = {
    "subj": "Case=Nom|Number=Sing",
    "obj": "Case=Acc|Number=Sing",
    "obl": "Case=Loc|Number=Sing",
    "verb": "Tense=Pres|VerbForm=Fin",
    "adj": "Degree=Pos",
    "adp": "_",
    "cconj": "_",
}


def tok(i, form, upos, feats, head, deprel, deps=()):
    return Token(id=i, form=form, upos=upos, feats=feats, head=head,
                 deprel=deprel, deps=tuple(deps))


def make_sentence(rng: np.random.Generator, ambig_prob: float,
                  enhanced: bool, sent_id: int) -> Sentence:
    """One sentence from a small set of templates.

    Base template: [ADJ] SUBJ VERB [ADJ] OBJ [PREP OBL [CONJ OBL2]]
    """
    def pick(words):
        return words[int(rng.integers(0, len(words)))]

    subj = pick(AMBIG_NOUNS) if rng.random() < ambig_prob else pick(SUBJ_NOUNS)
    obj = pick(AMBIG_NOUNS) if rng.random() < ambig_prob else pick(OBJ_NOUNS)
    verb = pick(VERBS)
    with_sadj = rng.random() < 0.4
    with_oadj = rng.random() < 0.4
    with_obl = rng.random() < 0.5
    with_conj = with_obl and rng.random() < 0.4

    items = []  # (form, upos, feats_key, head_slot, deprel)
    if with_sadj:
        items.append((pick(SUBJ_ADJS), "ADJ", "adj", "subj", "amod"))
    items.append((subj, "NOUN", "subj", "verb", "nsubj"))
    items.append((verb, "VERB", "verb", "root", "root"))
    if with_oadj:
        items.append((pick(OBJ_ADJS), "ADJ", "adj", "obj", "amod"))
    items.append((obj, "NOUN", "obj", "verb", "obj"))
    prep = conj = None
    if with_obl:
        prep = pick(PREPS)
        items.append((prep, "ADP", "adp", "obl", "case"))
        items.append((pick(OBL_NOUNS), "NOUN", "obl", "verb", "obl"))
    if with_conj:
        conj = pick(CONJS)
        items.append((conj, "CCONJ", "cconj", "obl2", "cc"))
        items.append((pick(OBL_NOUNS), "NOUN", "obl", "obl", "conj"))

    # Resolve slot positions (1-based).
    pos = {}
    for i, (form, upos, fk, hs, rel) in enumerate(items, start=1):
        if rel == "nsubj":
            pos["subj"] = i
        elif rel == "root":
            pos["verb"] = i
        elif rel == "obj":
            pos["obj"] = i
        elif rel == "obl":
            pos["obl"] = i
        elif rel == "conj":
            pos["obl2"] = i
    slot_of = {"subj": pos.get("subj"), "verb": pos.get("verb"),
               "obj": pos.get("obj"), "obl": pos.get("obl"),
               "obl2": pos.get("obl2"), "root": 0}
    # amod heads: the next noun to the right.
    tokens = []
    for i, (form, upos, fk, hs, rel) in enumerate(items, start=1):
        if rel == "amod":
            head = next(j for j in (pos.get("subj"), pos.get("obj"), pos.get("obl"))
                        if j is not None and j > i)
        elif rel == "case":
            head = pos["obl"]
        elif rel == "cc":
            head = pos["obl2"]
        else:
            head = slot_of[hs]
        deps = []
        if enhanced:
            if rel == "obl":
                deps.append((pos["verb"], f"obl:{prep}"))
            elif rel == "conj":
                deps.append((pos["obl"], f"conj:{conj}"))
                deps.append((pos["verb"], f"obl:{prep}"))  # shared marker
            elif rel == "root":
                deps.append((0, "root"))
            else:
                deps.append((head, rel))
        tokens.append(tok(i, form, upos, FEATS[fk], head, rel, deps))
    return Sentence(tuple(tokens), comments=(f"# sent_id = synth-{sent_id}",))


def make_corpus(seed: int, count: int, ambig_prob: float, enhanced: bool,
                start_id: int = 1) -> list[Sentence]:
    rng = np.random.default_rng(seed)
    return [make_sentence(rng, ambig_prob, enhanced, start_id + i)
            for i in range(count)]


def main() -> None:
    out_dir = os.path.join(os.path.dirname(__file__), "..", "tests", "fixtures")
    os.makedirs(out_dir, exist_ok=True)

    def write(name, sents):
        path = os.path.join(out_dir, name)
        write_conllu_file(sents, path)
        print(f"wrote {len(sents):4d} sentences -> {path}")

    # Unambiguous slices for overfit checks.
    write("overfit32.conllu", make_corpus(seed=11, count=32, ambig_prob=0.0,
                                          enhanced=False))
    # Basic training corpus with positional homographs, plus dev split.
    write("train500.conllu", make_corpus(seed=21, count=500, ambig_prob=0.35,
                                         enhanced=False))
    write("dev100.conllu", make_corpus(seed=22, count=100, ambig_prob=0.35,
                                       enhanced=False, start_id=1001))
    # Enhanced (graph) corpora with lexicalized labels and shared markers.
    write("etrain200.conllu", make_corpus(seed=31, count=200, ambig_prob=0.0,
                                          enhanced=True))
    write("edev50.conllu", make_corpus(seed=32, count=50, ambig_prob=0.0,
                                       enhanced=True, start_id=2001))


if __name__ == "__main__":
    main()
