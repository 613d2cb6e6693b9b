import numpy as np

from depgraph.autodiff import Tape
from depgraph.taggers import UNK_TAG, TagHead, TagVocabulary


def test_vocabulary_unk_first_then_sorted():
    v = TagVocabulary(["VERB", "NOUN", "VERB", "ADJ"])
    assert v.tags[0] == UNK_TAG
    assert v.tags[1:] == ("ADJ", "NOUN", "VERB")
    assert v.id_of("NOUN") == 2
    assert v.id_of("missing") == 0
    assert v.tag_of(3) == "VERB"


def test_tag_scores_linear():
    rng = np.random.default_rng(0)
    v = TagVocabulary(["A", "B"])
    head = TagHead("upos", 4, v, rng)
    reps = rng.normal(size=(3, 4))
    tape = Tape()
    out = head.tag_scores(tape, tape.const(reps))
    np.testing.assert_allclose(out.value,
                               reps @ head.w.values.T + head.b.values,
                               rtol=1e-12)


def test_predict_argmax_with_tie_break():
    rng = np.random.default_rng(1)
    v = TagVocabulary(["A", "B"])
    head = TagHead("upos", 2, v, rng)
    logits = np.array([[0.0, 1.0, 0.5],
                       [2.0, 2.0, 2.0]])  # tie -> lowest index -> <unk>
    assert head.predict(logits) == ["A", UNK_TAG]


def test_parameters_named():
    rng = np.random.default_rng(2)
    head = TagHead("ufeats", 3, TagVocabulary(["X"]), rng)
    names = {p.name for p in head.parameters()}
    assert len(names) == 2
    assert all(n.startswith("ufeats/") for n in names)
