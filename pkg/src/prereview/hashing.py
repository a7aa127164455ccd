"""Stable content hashing for ids, cache keys, seeds, and manifests."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

_SEP = "\x1f"  # unit separator keeps multi-part keys unambiguous


def stable_hash(*parts: str) -> str:
    """16-hex-char digest of the given string parts, stable across runs."""
    payload = _SEP.join(parts).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()[:16]


def hash_json(obj: Any) -> str:
    """Digest of an object's canonical JSON form."""
    return stable_hash(json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str))


def hash_file(path: Path | str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()[:16]


def derive_seed(*parts: object) -> int:
    """Deterministic 63-bit seed derived from arbitrary parts.

    Used to fan one configured seed out to independent stochastic steps.
    """
    digest = hashlib.sha256(_SEP.join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1
