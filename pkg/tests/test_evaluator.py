"""Hand-counted metric fixtures.

Every expected number below was worked out by hand on the tiny sentences
defined here, then frozen.
"""

import os
import subprocess
import sys

import pytest

from depgraph.conllu import Sentence, Token, write_conllu
from depgraph.evaluate import (AlignmentError, MetricScore, evaluate,
                               score_basic, score_enhanced, score_tags)


def tree(forms, heads, deprels, upos=None, feats=None, deps=None):
    toks = []
    for i, form in enumerate(forms):
        toks.append(Token(
            id=i + 1, form=form,
            upos=(upos[i] if upos else "_"),
            feats=(feats[i] if feats else "_"),
            head=heads[i], deprel=deprels[i],
            deps=tuple(deps[i]) if deps else ()))
    return Sentence(tuple(toks))


# ---- basic metrics ------------------------------------------------------

GOLD_10 = [tree(list("abcdefghij"),
                [0, 1, 1, 3, 3, 1, 6, 6, 8, 8],
                ["root", "x", "y", "x", "y", "x", "y", "x", "y", "x"])]
# 7 of 10 heads right; of those, 5 labels right -> UAS .7, LAS .5
SYS_10 = [tree(list("abcdefghij"),
               [0, 1, 1, 3, 3, 1, 1, 2, 8, 3],
               ["root", "x", "zz", "x", "qq", "x", "y", "x", "y", "zz"])]


def test_uas_las_hand_count():
    uas, las = score_basic(GOLD_10, SYS_10)
    assert uas.accuracy == pytest.approx(0.7, abs=1e-9)
    assert las.accuracy == pytest.approx(0.5, abs=1e-9)


def test_las_never_exceeds_uas():
    uas, las = score_basic(GOLD_10, SYS_10)
    assert las.accuracy <= uas.accuracy


def test_perfect_parse():
    uas, las = score_basic(GOLD_10, GOLD_10)
    assert uas.accuracy == 1.0 and las.accuracy == 1.0


def test_las_truncates_label_subtype():
    gold = [tree(["a", "b"], [0, 1], ["root", "obl:at"])]
    sys_ = [tree(["a", "b"], [0, 1], ["root", "obl:with"])]
    _, las = score_basic(gold, sys_)
    # universal part matches: obl == obl
    assert las.accuracy == 1.0


def test_multiple_sentences_pooled():
    gold = [tree(["a", "b"], [0, 1], ["root", "x"]),
            tree(["c"], [0], ["root"])]
    sys_ = [tree(["a", "b"], [0, 2], ["root", "x"]),  # b wrong (head 2 = self? no, token a=1, b=2; head 2 for b is self)
            tree(["c"], [0], ["root"])]
    # heads: 3 tokens total, 2 correct
    uas, _ = score_basic(gold, sys_)
    assert uas.accuracy == pytest.approx(2 / 3)


# ---- enhanced metrics ---------------------------------------------------

def enh(forms, deps):
    toks = [Token(id=i + 1, form=f, deps=tuple(d))
            for i, (f, d) in enumerate(zip(forms, deps))]
    return Sentence(tuple(toks))


def test_elas_hand_count():
    # gold has 4 edges, system has 5, overlap 3:
    # P = 3/5 = .6, R = 3/4 = .75, F1 = 2*.6*.75/1.35 = 2/3
    gold = [enh(["a", "b", "c"], [[(0, "root")], [(1, "obj")],
                                  [(1, "obl"), (2, "nmod")]])]
    sys_ = [enh(["a", "b", "c"], [[(0, "root"), (2, "dep")],
                                  [(1, "obj"), (3, "dep")],
                                  [(1, "obl")]])]
    _, elas = score_enhanced(gold, sys_)
    assert elas.precision == pytest.approx(0.6)
    assert elas.recall == pytest.approx(0.75)
    assert elas.f1 == pytest.approx(2 / 3, abs=1e-9)


def test_eulas_truncates_subtypes():
    gold = [enh(["a", "b"], [[(0, "root")], [(1, "obl:at")]])]
    sys_ = [enh(["a", "b"], [[(0, "root")], [(1, "obl:with")]])]
    eulas, elas = score_enhanced(gold, sys_)
    assert elas.f1 == pytest.approx(0.5)
    assert eulas.f1 == pytest.approx(1.0)


def test_elas_never_exceeds_eulas():
    gold = [enh(["a", "b", "c"], [[(0, "root")], [(1, "conj:or")],
                                  [(1, "obl:at")]])]
    sys_ = [enh(["a", "b", "c"], [[(0, "root")], [(1, "conj:and")],
                                  [(2, "obl:at")]])]
    eulas, elas = score_enhanced(gold, sys_)
    assert elas.f1 <= eulas.f1 + 1e-12


def test_elas_empty_system():
    gold = [enh(["a"], [[(0, "root")]])]
    sys_ = [enh(["a"], [[]])]
    _, elas = score_enhanced(gold, sys_)
    assert elas.f1 == 0.0 and elas.recall == 0.0


def test_eulas_duplicate_universal_edges():
    # two gold edges with the same (h, d) universal reading must not be
    # double-counted against one system edge
    gold = [enh(["a", "b"], [[(0, "root")], [(1, "obl:at"), (1, "obl:with")]])]
    sys_ = [enh(["a", "b"], [[(0, "root")], [(1, "obl:by")]])]
    eulas, _ = score_enhanced(gold, sys_)
    assert eulas.correct == 2  # root + one obl match
    assert eulas.recall == pytest.approx(2 / 3)


# ---- tags ----------------------------------------------------------------

def test_tag_accuracy():
    gold = [tree(["a", "b", "c"], [0, 1, 1], ["root", "x", "x"],
                 upos=["NOUN", "VERB", "NOUN"],
                 feats=["Case=Nom", "_", "Case=Acc"])]
    sys_ = [tree(["a", "b", "c"], [0, 1, 1], ["root", "x", "x"],
                 upos=["NOUN", "NOUN", "NOUN"],
                 feats=["Case=Nom", "_", "Case=Nom"])]
    upos, ufeats = score_tags(gold, sys_)
    assert upos.accuracy == pytest.approx(2 / 3)
    assert ufeats.accuracy == pytest.approx(2 / 3)


# ---- plumbing -------------------------------------------------------------

def test_alignment_errors():
    gold = [tree(["a", "b"], [0, 1], ["root", "x"])]
    with pytest.raises(AlignmentError):
        score_basic(gold, [tree(["a"], [0], ["root"])])
    with pytest.raises(AlignmentError):
        score_basic(gold, gold + gold)
    with pytest.raises(AlignmentError):
        score_basic(gold, [tree(["a", "zzz"], [0, 1], ["root", "x"])])


def test_evaluate_modes():
    gold = [tree(["a", "b"], [0, 1], ["root", "x"],
                 deps=[[(0, "root")], [(1, "x")]])]
    basic = evaluate(gold, gold, mode="basic")
    assert {"UAS", "LAS", "UPOS", "UFeats"} == set(basic.metrics)
    enh_rep = evaluate(gold, gold, mode="enhanced")
    assert {"ELAS", "EULAS"} == set(enh_rep.metrics)
    all_rep = evaluate(gold, gold, mode="all")
    assert {"UAS", "LAS", "ELAS", "EULAS", "UPOS", "UFeats"} == set(all_rep.metrics)


def test_metric_score_edge_cases():
    z = MetricScore(0, 0, 0)
    assert z.precision == 0.0 and z.recall == 0.0 and z.f1 == 0.0


# ---- parity with the official scripts, when available ---------------------

_DEFAULT_CONLL18 = os.path.join(
    os.path.dirname(__file__), "..", "examples",
    "universal_dependencies_evaluation_las_attachment",
    "r006__hopsparser__hopsparser__conll2018_eval.py")
CONLL18 = os.environ.get("CONLL18_EVAL", _DEFAULT_CONLL18)


@pytest.mark.skipif(not (CONLL18 and os.path.exists(CONLL18)),
                    reason="set CONLL18_EVAL to the official script path")
def test_parity_with_conll18_script(tmp_path):
    gold_path = str(tmp_path / "gold.conllu")
    sys_path = str(tmp_path / "sys.conllu")
    with open(gold_path, "w") as f:
        f.write(write_conllu(GOLD_10))
    with open(sys_path, "w") as f:
        f.write(write_conllu(SYS_10))
    out = subprocess.run(
        [sys.executable, CONLL18, "-v", gold_path, sys_path],
        capture_output=True, text=True, check=True).stdout
    uas, las = score_basic(GOLD_10, SYS_10)
    ours = {"UAS": uas, "LAS": las}
    for line in out.splitlines():
        cols = [c.strip() for c in line.split("|")]
        if cols and cols[0] in ("UAS", "LAS"):
            assert float(cols[3]) == pytest.approx(
                round(ours[cols[0]].f1 * 100, 2), abs=5e-3)
