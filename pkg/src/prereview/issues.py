"""Abstractive privacy-issue generation: fine-tune a seq2seq slot on
review->issue annotations and turn any review (real or simulated) into short
canonicalized issue phrases."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Protocol, Sequence

from .errors import ParseError, TrainingError
from .hashing import derive_seed, hash_json, stable_hash
from .text import STOPWORDS, content_tokens, tokens
from .training import seeded_split

log = logging.getLogger(__name__)

ISSUE_DELIMITER = "; "
MIN_ANNOTATIONS = 50
_ARTICLES = ("the", "a", "an")
_PUNCT_RE = re.compile(r"[^a-z0-9\s]+")


@dataclass(frozen=True)
class IssueAnnotation:
    """One labeled review with one or more short issue phrases (target 2-4 words)."""

    review_text: str
    issues: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.review_text.strip():
            raise ValueError("annotation review_text is empty")
        if not self.issues or any(not phrase.strip() for phrase in self.issues):
            raise ValueError("annotation needs at least one non-empty issue phrase")
        for phrase in self.issues:
            n_tokens = len(phrase.split())
            if not 1 <= n_tokens <= 6:
                raise ValueError(f"issue phrase {phrase!r} has {n_tokens} tokens, expected 1-6")


@dataclass(frozen=True)
class IssueGenConfig:
    train_fraction: float = 0.9
    epochs: int = 5
    learning_rate: float = 0.005
    label_smoothing: float = 0.1
    base_size: str = "base"
    issue_delimiter: str = ISSUE_DELIMITER
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.label_smoothing < 1.0:
            raise ValueError("label_smoothing must be in [0,1)")

    def to_json(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_json(cls, raw: dict[str, Any]) -> "IssueGenConfig":
        return cls(**raw)


@dataclass(frozen=True)
class Issue:
    """A canonicalized privacy concern, bucketed by method and release instance."""

    raw: str
    canonical: str
    method: str
    instance_index: int
    source_review_id: str

    def to_json(self) -> dict[str, Any]:
        return {
            "raw": self.raw,
            "canonical": self.canonical,
            "source_review_id": self.source_review_id,
        }


def load_annotations(path: Path | str) -> list[IssueAnnotation]:
    """Read line-delimited {review_text, issues: [phrases]} records; a record
    with zero issues is rejected naming its line number."""
    path = Path(path)
    annotations = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid record ({exc.msg})") from exc
            issues = raw.get("issues") or []
            if not issues:
                raise ParseError(f"{path}:{lineno}: annotation has no issues")
            try:
                annotations.append(
                    IssueAnnotation(
                        review_text=str(raw.get("review_text", "")),
                        issues=tuple(str(p) for p in issues),
                    )
                )
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
    return annotations


def canonicalize_issue(raw: str) -> str:
    """Normalize a decoded phrase: lowercase, strip punctuation, collapse
    whitespace, drop leading articles. May return '' for pure punctuation;
    callers drop (and log) those."""
    if not raw:
        raise ValueError("cannot canonicalize an empty phrase")
    lowered = _PUNCT_RE.sub(" ", raw.lower())
    parts = lowered.split()
    while parts and parts[0] in _ARTICLES:
        parts.pop(0)
    return " ".join(parts)


class IssueModel(Protocol):
    handle_id: str
    delimiter: str

    def decode(self, review_text: str) -> str:
        """Greedy-decode the delimiter-joined issue string for one review."""
        ...


class KeywordIssueModel:
    """Trained stub issue generator backed by a phrase -> trigger-token table.

    A phrase fires when the review shares at least min(2, |triggers|) tokens
    with its trigger set; fired phrases are emitted strongest-overlap first.
    """

    backend_name = "keyword-stub"

    def __init__(self, handle_id: str, table: dict[str, frozenset[str]], delimiter: str):
        self.handle_id = handle_id
        self.table = table
        self.delimiter = delimiter

    def decode(self, review_text: str) -> str:
        review_tokens = set(tokens(review_text))
        fired = []
        for phrase, triggers in self.table.items():
            overlap = len(review_tokens & triggers)
            if overlap >= min(2, len(triggers)) and overlap > 0:
                fired.append((-overlap, phrase))
        fired.sort()
        return self.delimiter.join(phrase for _, phrase in fired)

    def to_json(self) -> dict[str, Any]:
        return {
            "kind": "keyword_stub",
            "handle_id": self.handle_id,
            "delimiter": self.delimiter,
            "table": {phrase: sorted(triggers) for phrase, triggers in sorted(self.table.items())},
        }

    @classmethod
    def from_json(cls, raw: dict[str, Any]) -> "KeywordIssueModel":
        return cls(
            handle_id=str(raw["handle_id"]),
            table={phrase: frozenset(triggers) for phrase, triggers in raw["table"].items()},
            delimiter=str(raw["delimiter"]),
        )


class KeywordIssueBackend:
    """Stub issue-generation slot; training builds the trigger table."""

    name = "keyword-stub"

    def finetune(
        self, annotations: Sequence[IssueAnnotation], config: IssueGenConfig
    ) -> KeywordIssueModel:
        table: dict[str, set[str]] = {}
        for annotation in annotations:
            review_tokens = set(content_tokens(annotation.review_text))
            for phrase in annotation.issues:
                phrase_tokens = [t for t in tokens(phrase) if t not in STOPWORDS]
                grounded = [t for t in phrase_tokens if t in review_tokens]
                triggers = grounded or phrase_tokens
                table.setdefault(phrase, set()).update(triggers)
        handle_id = stable_hash(
            self.name,
            hash_json({phrase: sorted(trig) for phrase, trig in table.items()}),
            hash_json(config.to_json()),
        )
        return KeywordIssueModel(
            handle_id, {p: frozenset(t) for p, t in table.items()}, config.issue_delimiter
        )


class IssueBackend(Protocol):
    name: str

    def finetune(
        self, annotations: Sequence[IssueAnnotation], config: IssueGenConfig
    ) -> IssueModel: ...


def finetune_issue_model(
    annotations: Sequence[IssueAnnotation],
    config: IssueGenConfig,
    backend: IssueBackend | None = None,
) -> tuple[IssueModel, dict[str, Any]]:
    """Fine-tune the issue generator on annotations (targets are phrases joined
    with the configured delimiter). Returns (model, held-out quality log)."""
    if len(annotations) < MIN_ANNOTATIONS:
        raise TrainingError(
            f"issue model needs at least {MIN_ANNOTATIONS} annotations, got {len(annotations)}"
        )
    backend = backend or KeywordIssueBackend()
    train, held = seeded_split(
        list(annotations), config.train_fraction, derive_seed(config.seed, "issue-split")
    )
    model = backend.finetune(train, config)

    exact = overlap_sum = short_phrases = phrase_count = 0
    for annotation in held:
        gold = config.issue_delimiter.join(annotation.issues)
        decoded = model.decode(annotation.review_text)
        exact += int(decoded == gold)
        decoded_tokens, gold_tokens = set(tokens(decoded)), set(tokens(gold))
        union = decoded_tokens | gold_tokens
        overlap_sum += len(decoded_tokens & gold_tokens) / len(union) if union else 1.0
        for phrase in generate_issues(model, annotation.review_text):
            canonical = canonicalize_issue(phrase)
            if canonical:
                phrase_count += 1
                short_phrases += int(2 <= len(canonical.split()) <= 4)
    held_n = max(1, len(held))
    quality_log = {
        "backend": backend.name,
        "train_size": len(train),
        "held_out_size": len(held),
        "held_out_exact_match": exact / held_n,
        "held_out_token_overlap": overlap_sum / held_n,
        # soft 2-4-word target: logged, never asserted hard
        "held_out_len_2_4_fraction": (short_phrases / phrase_count) if phrase_count else None,
        "config": config.to_json(),
    }
    log.info(
        "issue model %s: exact=%0.3f overlap=%0.3f",
        model.handle_id,
        quality_log["held_out_exact_match"],
        quality_log["held_out_token_overlap"],
    )
    return model, quality_log


def generate_issues(model: IssueModel, review_text: str) -> list[str]:
    """Decode raw issue phrases for one review (deterministic greedy decode).

    Splits on the model delimiter dropping empties; if splitting yields nothing
    the full decoded string survives. An empty decode after one retry gives [].
    """
    if not review_text.strip():
        raise ValueError("review text is empty")
    decoded = model.decode(review_text).strip()
    if not decoded:
        decoded = model.decode(review_text).strip()  # single retry, then give up
        if not decoded:
            log.debug("no issues decoded for review %.60r", review_text)
            return []
    parts = [part.strip() for part in decoded.split(model.delimiter)]
    phrases = [part for part in parts if part]
    return phrases if phrases else [decoded]
