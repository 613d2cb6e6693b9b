"""Minimal CoNLL-U reading: only token forms are needed for export.

Deliberately independent of the parser package; the two components share
nothing but the vector exchange format.
"""

from __future__ import annotations


def read_token_forms(path: str) -> list[list[str]]:
    """FORM column per sentence. Multiword ranges and empty nodes are
    skipped; the syntactic token lines are what the parser aligns against."""
    sentences: list[list[str]] = []
    current: list[str] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.rstrip("\n")
            if not line:
                if current:
                    sentences.append(current)
                    current = []
                continue
            if line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 10:
                raise ValueError(f"line {lineno}: expected 10 columns, got {len(cols)}")
            if "-" in cols[0] or "." in cols[0]:
                continue
            current.append(cols[1])
    if current:
        sentences.append(current)
    return sentences
