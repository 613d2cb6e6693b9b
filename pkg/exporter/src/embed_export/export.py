"""Hidden-state extraction: one (L, n, d) stack per sentence.

Layer 0 of the stack is the embedding layer, so a model with 12 encoder
layers yields L = 13 candidates for the downstream scalar mixture. Each
token is represented by its first subword; tokens are never dropped or
merged. Sentences longer than the model's position budget are processed
in overlapping windows and every token takes its vector from the window
where it sits most centrally.
"""

from __future__ import annotations

import numpy as np
import torch

from .conllu import read_token_forms
from .vecfile import write_vector_file


def parse_layer_spec(spec: str, n_available: int) -> list[int]:
    """"all" or a comma-separated list of layer indices (0 = embeddings)."""
    if spec == "all":
        return list(range(n_available))
    layers = []
    for part in spec.split(","):
        idx = int(part)
        if not (0 <= idx < n_available):
            raise ValueError(f"layer {idx} out of range 0..{n_available - 1}")
        layers.append(idx)
    if not layers:
        raise ValueError("empty layer selection")
    return layers


def subword_pieces(tokenizer, forms: list[str]) -> tuple[list[str], list[int]]:
    """All pieces for a sentence plus the first-subword index per token.

    A token the tokenizer maps to zero pieces is represented by the UNK
    piece so that token counts always match the CoNLL-U file.
    """
    pieces: list[str] = []
    first: list[int] = []
    for form in forms:
        sub = tokenizer.tokenize(form)
        if not sub:
            sub = [tokenizer.unk_token]
        first.append(len(pieces))
        pieces.extend(sub)
    return pieces, first


def _run_window(model, tokenizer, pieces: list[str], device) -> torch.Tensor:
    """Hidden states for [CLS] pieces [SEP]; returns (L+1, n_pieces, d)
    with the special tokens stripped."""
    ids = tokenizer.convert_tokens_to_ids(
        [tokenizer.cls_token] + pieces + [tokenizer.sep_token])
    batch = torch.tensor([ids], dtype=torch.long, device=device)
    out = model(input_ids=batch, output_hidden_states=True)
    stack = torch.stack(out.hidden_states, dim=0)  # (L+1, 1, seq, d)
    return stack[:, 0, 1:-1, :]


def sentence_vectors(model, tokenizer, forms: list[str],
                     max_len: int, device) -> np.ndarray:
    """(L+1, n_tokens, d) float32 for one sentence."""
    pieces, first = subword_pieces(tokenizer, forms)
    capacity = max_len - 2  # room for [CLS]/[SEP]
    if len(pieces) <= capacity:
        hidden = _run_window(model, tokenizer, pieces, device)
    else:
        stride = max(1, capacity // 2)
        starts = list(range(0, len(pieces) - capacity + stride, stride))
        starts = [min(s, len(pieces) - capacity) for s in starts]
        n_layers = model.config.num_hidden_layers + 1
        hidden = torch.zeros(n_layers, len(pieces), model.config.hidden_size)
        best_dist = np.full(len(pieces), np.inf)
        for start in dict.fromkeys(starts):  # unique, in order
            window = _run_window(model, tokenizer,
                                 pieces[start:start + capacity], device)
            center = start + (capacity - 1) / 2.0
            for offset in range(window.shape[1]):
                pos = start + offset
                dist = abs(pos - center)
                if dist < best_dist[pos]:
                    best_dist[pos] = dist
                    hidden[:, pos, :] = window[:, offset, :]
    return hidden[:, first, :].to(torch.float32).cpu().numpy()


def export(conllu_path: str, model_id: str, output_path: str,
           layers: str = "all", device: str = "cpu",
           batch_size: int = 1) -> int:
    """Export vectors for every sentence in conllu_path; returns the
    sentence count. batch_size is accepted for interface compatibility;
    sentences are processed one at a time."""
    from transformers import AutoModel, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(model_id)
    model = AutoModel.from_pretrained(model_id)
    model.eval()
    model.to(device)

    max_len = int(model.config.max_position_embeddings)
    sentences = read_token_forms(conllu_path)
    selected = None
    stacks: list[np.ndarray] = []
    with torch.no_grad():
        for forms in sentences:
            vecs = sentence_vectors(model, tokenizer, forms, max_len, device)
            if selected is None:
                selected = parse_layer_spec(layers, vecs.shape[0])
            stacks.append(vecs[selected])
    write_vector_file(output_path, stacks, model_id)
    return len(stacks)
