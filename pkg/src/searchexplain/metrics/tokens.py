"""Shared preprocessing for the lexical metrics."""

from __future__ import annotations

import unicodedata


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def normalize_tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, and emit each punctuation character as
    its own token."""
    tokens: list[str] = []
    buf: list[str] = []
    for ch in text.lower():
        if ch.isspace() or _is_punct(ch):
            if buf:
                tokens.append("".join(buf))
                buf = []
            if not ch.isspace():
                tokens.append(ch)
        else:
            buf.append(ch)
    if buf:
        tokens.append("".join(buf))
    return tokens
