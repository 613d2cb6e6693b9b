import os

import pytest
import torch

PARSER_FIXTURES = os.path.join(os.path.dirname(__file__),
                               "..", "..", "tests", "fixtures")

# WordPiece vocabulary tuned to the synthetic fixture treebanks: word stems
# as whole pieces, digits as continuation pieces, so "mira4" -> mira ##4.
VOCAB = list(dict.fromkeys(
    ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    + ["mira", "talo", "ranta", "kelda", "keldas", "veni", "solu", "parn"]
    + ["at", "in", "near", "with", "or", "and", "the"]
    + [f"##{i}" for i in range(10)]
    + [f"##{c}" for c in "abcdefghijklmnopqrstuvwxyz"]
    + list("abcdefghijklmnopqrstuvwxyz")
))


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """A small randomly initialized BERT saved to disk; deterministic."""
    from transformers import BertConfig, BertModel, BertTokenizer

    d = tmp_path_factory.mktemp("tiny-bert")
    vocab_path = str(d / "vocab.txt")
    with open(vocab_path, "w", encoding="utf-8") as f:
        f.write("\n".join(VOCAB) + "\n")
    tokenizer = BertTokenizer(vocab_path)
    config = BertConfig(
        vocab_size=len(VOCAB), hidden_size=64, num_hidden_layers=2,
        num_attention_heads=4, intermediate_size=128,
        max_position_embeddings=32)
    torch.manual_seed(0)
    model = BertModel(config)
    model.save_pretrained(str(d))
    tokenizer.save_pretrained(str(d))
    return str(d)


def fixture_path(name: str) -> str:
    return os.path.join(PARSER_FIXTURES, name)
