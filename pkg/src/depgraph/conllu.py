"""CoNLL-U reading and writing, with basic trees and enhanced DEPS graphs.

All ten columns are preserved. Multiword token lines and comments are passed
through verbatim. Empty nodes (decimal ids like "3.1") are rejected.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace
from typing import Iterable, TextIO

COLUMN_NAMES = (
    "ID", "FORM", "LEMMA", "UPOS", "XPOS", "FEATS", "HEAD", "DEPREL", "DEPS", "MISC",
)


class ConlluError(ValueError):
    """Malformed CoNLL-U input; carries the 1-based line number."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


@dataclass(frozen=True)
class Token:
    id: int
    form: str
    lemma: str = "_"
    upos: str = "_"
    xpos: str = "_"
    feats: str = "_"
    head: int | None = None
    deprel: str | None = None
    deps: tuple[tuple[int, str], ...] = ()
    misc: str = "_"

    def with_tree(self, head: int, deprel: str) -> "Token":
        return replace(self, head=head, deprel=deprel)

    def with_deps(self, deps: Iterable[tuple[int, str]]) -> "Token":
        return replace(self, deps=tuple(sorted(set(deps))))


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    comments: tuple[str, ...] = ()
    multiword_ranges: tuple[tuple[int, int, str], ...] = ()

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def forms(self) -> list[str]:
        return [t.form for t in self.tokens]

    def tree_heads(self) -> list[int]:
        heads = []
        for t in self.tokens:
            if t.head is None:
                raise ValueError(f"token {t.id} has no basic head")
            heads.append(t.head)
        return heads

    def enhanced_edges(self) -> set[tuple[int, int, str]]:
        """All enhanced dependencies as (head, dependent, label) triples."""
        return {(h, t.id, lab) for t in self.tokens for h, lab in t.deps}


def _parse_deps(text: str, n_hint: int, lineno: int) -> tuple[tuple[int, str], ...]:
    if text == "_" or text == "":
        return ()
    out = []
    for item in text.split("|"):
        head_str, _, label = item.partition(":")
        if not label:
            raise ConlluError(f"malformed DEPS item {item!r}", lineno)
        if "." in head_str:
            raise ConlluError(f"empty-node head {head_str!r} in DEPS is not supported", lineno)
        try:
            head = int(head_str)
        except ValueError:
            raise ConlluError(f"non-integer DEPS head {head_str!r}", lineno)
        if head < 0:
            raise ConlluError(f"negative DEPS head {head}", lineno)
        out.append((head, label))
    return tuple(sorted(set(out)))


def _validate_sentence(sent: Sentence, lineno: int) -> None:
    n = len(sent.tokens)
    for i, tok in enumerate(sent.tokens, start=1):
        if tok.id != i:
            raise ConlluError(f"token ids must be 1..n; found {tok.id} at position {i}", lineno)
        if tok.head is not None and not (0 <= tok.head <= n):
            raise ConlluError(f"token {tok.id}: head {tok.head} out of range 0..{n}", lineno)
        for h, _ in tok.deps:
            if h > n:
                raise ConlluError(f"token {tok.id}: DEPS head {h} out of range", lineno)
            if h == tok.id:
                raise ConlluError(f"token {tok.id}: self-loop in DEPS", lineno)
    if all(t.head is not None for t in sent.tokens) and n > 0:
        _validate_tree([t.head for t in sent.tokens], lineno)


def _validate_tree(heads: list[int], lineno: int) -> None:
    n = len(heads)
    roots = [i for i, h in enumerate(heads) if h == 0]
    if len(roots) != 1:
        raise ConlluError(f"basic layer must have exactly one root, found {len(roots)}", lineno)
    # Walk up from each token; a cycle never reaches 0.
    for start in range(n):
        seen = set()
        node = start
        while heads[node] != 0:
            if node in seen:
                raise ConlluError("cycle in basic dependency tree", lineno)
            seen.add(node)
            node = heads[node] - 1


def _parse_token(line: str, lineno: int) -> Token:
    cols = line.split("\t")
    if len(cols) != 10:
        raise ConlluError(f"expected 10 tab-separated columns, got {len(cols)}", lineno)
    id_str = cols[0]
    if "." in id_str:
        raise ConlluError(f"empty nodes (id {id_str!r}) are not supported", lineno)
    try:
        tok_id = int(id_str)
    except ValueError:
        raise ConlluError(f"non-integer token id {id_str!r}", lineno)
    if tok_id < 1:
        raise ConlluError(f"token id must be >= 1, got {tok_id}", lineno)
    head: int | None
    if cols[6] == "_":
        head = None
    else:
        try:
            head = int(cols[6])
        except ValueError:
            raise ConlluError(f"non-integer head {cols[6]!r}", lineno)
        if head < 0:
            raise ConlluError(f"negative head {head}", lineno)
    deprel = None if cols[7] == "_" else cols[7]
    deps = _parse_deps(cols[8], tok_id, lineno)
    return Token(
        id=tok_id, form=cols[1], lemma=cols[2], upos=cols[3], xpos=cols[4],
        feats=cols[5], head=head, deprel=deprel, deps=deps, misc=cols[9],
    )


def read_conllu(source: TextIO | str | bytes) -> list[Sentence]:
    """Parse CoNLL-U text into sentences.

    Accepts a text stream, a string, or UTF-8 bytes. Raises ConlluError with
    the offending line number on malformed input.
    """
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        source = io.StringIO(source)

    sentences: list[Sentence] = []
    comments: list[str] = []
    tokens: list[Token] = []
    mwt: list[tuple[int, int, str]] = []
    sent_start_line = 1

    def flush(lineno: int) -> None:
        nonlocal comments, tokens, mwt
        if not tokens and not comments and not mwt:
            return
        if not tokens:
            raise ConlluError("sentence block with no token lines", lineno)
        sent = Sentence(tuple(tokens), tuple(comments), tuple(mwt))
        _validate_sentence(sent, sent_start_line)
        sentences.append(sent)
        comments, tokens, mwt = [], [], []

    lineno = 0
    for lineno, raw in enumerate(source, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line:
            flush(lineno)
            sent_start_line = lineno + 1
            continue
        if line.startswith("#"):
            if not tokens and not comments and not mwt:
                sent_start_line = lineno
            comments.append(line)
            continue
        first_col = line.split("\t", 1)[0]
        if "-" in first_col and not first_col.startswith("-"):
            cols = line.split("\t")
            if len(cols) != 10:
                raise ConlluError(f"expected 10 columns in multiword line, got {len(cols)}", lineno)
            start_s, _, end_s = first_col.partition("-")
            try:
                start, end = int(start_s), int(end_s)
            except ValueError:
                raise ConlluError(f"malformed multiword range {first_col!r}", lineno)
            mwt.append((start, end, cols[1]))
            continue
        if not tokens and not mwt and not comments:
            sent_start_line = lineno
        tokens.append(_parse_token(line, lineno))
    flush(lineno + 1)
    return sentences


def _token_line(tok: Token) -> str:
    deps = "|".join(f"{h}:{lab}" for h, lab in sorted(tok.deps)) if tok.deps else "_"
    head = "_" if tok.head is None else str(tok.head)
    deprel = tok.deprel if tok.deprel is not None else "_"
    return "\t".join([
        str(tok.id), tok.form, tok.lemma, tok.upos, tok.xpos, tok.feats,
        head, deprel, deps, tok.misc,
    ])


def write_conllu(sentences: Iterable[Sentence], sink: TextIO | None = None) -> str | None:
    """Serialize sentences; returns the string when no sink is given.

    DEPS is written sorted by (head, label), pipe-separated; empty deps as "_".
    """
    parts: list[str] = []
    for sent in sentences:
        for c in sent.comments:
            parts.append(c + "\n")
        mwt_by_start = {start: (start, end, form) for start, end, form in sent.multiword_ranges}
        for tok in sent.tokens:
            if tok.id in mwt_by_start:
                start, end, form = mwt_by_start[tok.id]
                parts.append("\t".join([f"{start}-{end}", form] + ["_"] * 8) + "\n")
            parts.append(_token_line(tok) + "\n")
        parts.append("\n")
    text = "".join(parts)
    if sink is None:
        return text
    sink.write(text)
    return None


def read_conllu_file(path: str) -> list[Sentence]:
    with open(path, "r", encoding="utf-8") as f:
        return read_conllu(f)


def write_conllu_file(sentences: Iterable[Sentence], path: str) -> None:
    import os
    import tempfile

    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            write_conllu(sentences, f)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
