"""Tokenisation helpers shared by the deterministic stub backends."""

from __future__ import annotations

import re
from collections import Counter

_TOKEN_RE = re.compile(r"[a-z0-9']+")

# Small closed-class list; enough to keep stub keyword tables from keying on glue words.
STOPWORDS = frozenset(
    """
    a an the and or but if then than so because as of at by for with about into
    through during before after to from up down in out on off over under again
    further once here there when where why how all any both each few more most
    other some such no nor not only own same too very can will just should now
    i me my we our you your he him his she her it its they them their this that
    these those am is are was were be been being have has had having do does did
    doing would could also
    """.split()
)


def tokens(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def content_tokens(text: str) -> list[str]:
    return [t for t in tokens(text) if t not in STOPWORDS]


def token_counts(text: str) -> Counter[str]:
    return Counter(tokens(text))


def salient_keywords(text: str, limit: int = 3) -> list[str]:
    """Up to ``limit`` distinct content words, longest first, ties by first appearance."""
    seen: dict[str, int] = {}
    for idx, tok in enumerate(content_tokens(text)):
        if tok not in seen:
            seen[tok] = idx
    ranked = sorted(seen.items(), key=lambda kv: (-len(kv[0]), kv[1]))
    return [tok for tok, _ in ranked[:limit]]
