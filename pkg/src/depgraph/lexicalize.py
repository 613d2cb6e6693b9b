"""Delexicalization and relexicalization of enhanced dependency labels.

Lexicalized labels such as "obl:at" blow up the label vocabulary; at training
time the lexical part is replaced by a placeholder naming the attachment
relation that supplies it ("obl:[case]"). At prediction time placeholders are
resolved back to surface material by a rule cascade:

  (a) use the word form of a dependent attached via the placeholder relation;
  (b) in coordination, borrow the marker from a conjunct (either direction);
  (c) otherwise drop the placeholder and keep the base relation.

Matching is per word FORM, lowercased; tokens are not lemmatized.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .conllu import Sentence, Token

DEFAULT_LEXICALIZABLE = ("acl", "advcl", "conj", "nmod", "obl")
DEFAULT_ATTACHMENT = ("case", "cc", "mark")


@dataclass(frozen=True)
class LexRuleConfig:
    lexicalizable: frozenset[str] = frozenset(DEFAULT_LEXICALIZABLE)
    attachment: frozenset[str] = frozenset(DEFAULT_ATTACHMENT)

    @staticmethod
    def load(path: str) -> "LexRuleConfig":
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        return LexRuleConfig(
            lexicalizable=frozenset(data["lexicalizable"]),
            attachment=frozenset(data["attachment"]),
        )

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump({
                "lexicalizable": sorted(self.lexicalizable),
                "attachment": sorted(self.attachment),
            }, f, indent=2)
            f.write("\n")


def placeholder(base: str, attach_rel: str) -> str:
    return f"{base}:[{attach_rel}]"


def parse_placeholder(label: str) -> tuple[str, str] | None:
    """("obl", "case") for "obl:[case]"; None for non-placeholder labels."""
    base, sep, rest = label.partition(":")
    if sep and rest.startswith("[") and rest.endswith("]") and len(rest) > 2:
        return base, rest[1:-1]
    return None


def _attachment_dependents(sent: Sentence, head_id: int,
                           config: LexRuleConfig) -> list[tuple[int, str, str]]:
    """(dependent id, attachment relation, lowercased form) for enhanced
    dependents of head_id attached via an attachment relation."""
    out = []
    for tok in sent.tokens:
        for h, lab in tok.deps:
            base = lab.split(":")[0]
            if h == head_id and base in config.attachment:
                out.append((tok.id, base, tok.form.lower()))
    return sorted(out)


def delexicalize(sent: Sentence, config: LexRuleConfig) -> Sentence:
    """Rewrite "base:material" to "base:[rel]" wherever the dependent has an
    enhanced dependent supplying `material` via attachment relation `rel`.

    Idempotent: placeholder labels are left untouched.
    """
    new_tokens = []
    for tok in sent.tokens:
        new_deps = []
        for h, lab in tok.deps:
            new_deps.append((h, _delex_label(sent, tok, lab, config)))
        new_tokens.append(tok.with_deps(new_deps))
    return Sentence(tuple(new_tokens), sent.comments, sent.multiword_ranges)


def _delex_label(sent: Sentence, tok: Token, label: str, config: LexRuleConfig) -> str:
    base, sep, material = label.partition(":")
    if not sep or base not in config.lexicalizable:
        return label
    if parse_placeholder(label) is not None:
        return label
    material = material.lower()
    # Direct attachment dependents, then conjunction partners: the same
    # search the relexicalization cascade performs, so that gold labels
    # delexicalized here are recoverable at prediction time.
    for _, rel, form in _attachment_dependents(sent, tok.id, config):
        if form == material:
            return placeholder(base, rel)
    for partner in _conj_partners(sent, tok):
        for _, rel, form in _attachment_dependents(sent, partner, config):
            if form == material:
                return placeholder(base, rel)
    return label


def relexicalize(sent: Sentence, config: LexRuleConfig) -> Sentence:
    """Resolve placeholder labels via the rule cascade; the result never
    contains bracketed placeholders."""
    new_tokens = []
    for tok in sent.tokens:
        new_deps = []
        for h, lab in tok.deps:
            ph = parse_placeholder(lab)
            if ph is None:
                new_deps.append((h, lab))
                continue
            base, rel = ph
            material = _find_material(sent, tok, rel, config)
            new_deps.append((h, f"{base}:{material}" if material else base))
        new_tokens.append(tok.with_deps(new_deps))
    return Sentence(tuple(new_tokens), sent.comments, sent.multiword_ranges)


def _conj_partners(sent: Sentence, tok: Token) -> list[int]:
    """Coordination partners of tok, either direction: its conj heads, then
    its conj dependents."""
    partners: list[int] = []
    for h, lab in sorted(tok.deps):
        if lab.split(":")[0] == "conj" and h != 0:
            partners.append(h)
    for other in sent.tokens:
        for h, lab in other.deps:
            if h == tok.id and lab.split(":")[0] == "conj":
                partners.append(other.id)
    return partners


def _find_material(sent: Sentence, tok: Token, rel: str,
                   config: LexRuleConfig) -> str | None:
    # Rule (a): a direct dependent attached via the placeholder relation;
    # leftmost dependent wins.
    direct = [form for _, r, form in _attachment_dependents(sent, tok.id, config)
              if r == rel]
    if direct:
        return direct[0]
    # Rule (b): shared markers across coordination, in either direction.
    for partner in _conj_partners(sent, tok):
        forms = [form for _, r, form in _attachment_dependents(sent, partner, config)
                 if r == rel]
        if forms:
            return forms[0]
    # Rule (c): give up; the caller keeps the bare base relation.
    return None


def has_placeholders(sent: Sentence) -> bool:
    return any(parse_placeholder(lab) is not None
               for tok in sent.tokens for _, lab in tok.deps)
