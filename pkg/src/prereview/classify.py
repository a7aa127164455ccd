"""Privacy review classification: three pluggable backend slots combined by a
regime-dependent voting rule, plus standard evaluation metrics.

Large corpora (>= the regime threshold) use a conjunctive three-backend vote;
smaller ones fall back to a single designated high-precision backend.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Any, Callable, Mapping, Protocol, Sequence

from .corpus import Review
from .errors import ParseError, TrainingError
from .hashing import derive_seed, hash_json
from .text import token_counts
from .training import stratified_split

log = logging.getLogger(__name__)

PRIVACY = "privacy"
NOT_PRIVACY = "not_privacy"

SLOTS = ("A", "B", "C")
# Slot A: fine-tuned bidirectional encoder. Slot B: its sentiment-pretrained
# variant. Slot C: frozen sentence embeddings + feed-forward head.
DEFAULT_EPOCHS = {"A": 3, "B": 3, "C": 20}
DEFAULT_DESIGNATED_SLOT = "C"
ENSEMBLE_MIN_REVIEWS = 15_000

REGIME_ENSEMBLE = "ensemble"
REGIME_SINGLE = "single-backend"


class ClassifierBackend(Protocol):
    name: str
    slot: str

    def predict(self, text: str) -> tuple[float, bool]:
        """Return (privacy score in [0,1], label = score >= threshold)."""
        ...


@dataclass(frozen=True)
class BackendScore:
    score: float
    is_privacy: bool


@dataclass(frozen=True)
class ClassificationResult:
    review_id: str
    per_backend: dict[str, BackendScore]
    ensemble_is_privacy: bool | None = None
    regime: str | None = None

    def to_json(self) -> dict[str, Any]:
        return {
            "review_id": self.review_id,
            "per_backend": {
                slot: {"score": bs.score, "label": PRIVACY if bs.is_privacy else NOT_PRIVACY}
                for slot, bs in sorted(self.per_backend.items())
            },
            "ensemble_label": (
                None
                if self.ensemble_is_privacy is None
                else (PRIVACY if self.ensemble_is_privacy else NOT_PRIVACY)
            ),
            "regime": self.regime,
        }

    @classmethod
    def from_json(cls, raw: dict[str, Any]) -> "ClassificationResult":
        ensemble = raw.get("ensemble_label")
        return cls(
            review_id=str(raw["review_id"]),
            per_backend={
                slot: BackendScore(float(entry["score"]), entry["label"] == PRIVACY)
                for slot, entry in raw["per_backend"].items()
            },
            ensemble_is_privacy=None if ensemble is None else ensemble == PRIVACY,
            regime=raw.get("regime"),
        )


@dataclass(frozen=True)
class TrainingRecipe:
    """Per-slot training configuration; epochs default by slot (A:3, B:3, C:20)."""

    slot: str
    kind: str = "stub"  # "stub" | "encoder" | "sentence_head"
    epochs: int | None = None
    threshold: float = 0.5
    validation_fraction: float = 0.1
    seed: int = 0
    sentiment_corpus: str | None = None
    base_model: str | None = None

    def resolved_epochs(self) -> int:
        return self.epochs if self.epochs is not None else DEFAULT_EPOCHS[self.slot]

    @property
    def recipe_hash(self) -> str:
        return hash_json(asdict(self))


class KeywordClassifierBackend:
    """Deterministic stub backend: a seeded naive-Bayes keyword scorer.

    First-class stand-in for the model-runtime slots so the whole pipeline and
    its tests run without any model weights.
    """

    def __init__(
        self,
        slot: str,
        token_log_odds: Mapping[str, float],
        bias: float,
        threshold: float = 0.5,
        seed: int = 0,
        recipe_hash: str | None = None,
    ):
        self.slot = slot
        self.name = f"stub-{slot}"
        self.token_log_odds = dict(token_log_odds)
        self.bias = bias
        self.threshold = threshold
        self.seed = seed
        self.recipe_hash = recipe_hash
        self.training_log: list[dict[str, Any]] = []

    def predict(self, text: str) -> tuple[float, bool]:
        total = self.bias
        for token, count in token_counts(text).items():
            total += count * self.token_log_odds.get(token, 0.0)
        score = 1.0 / (1.0 + math.exp(-max(-60.0, min(60.0, total))))
        return score, score >= self.threshold

    @classmethod
    def train(
        cls,
        slot: str,
        labeled: Sequence[tuple[str, bool]],
        recipe: TrainingRecipe,
    ) -> "KeywordClassifierBackend":
        train_set, val_set = stratified_split(
            list(labeled),
            [lab for _, lab in labeled],
            recipe.validation_fraction,
            derive_seed(recipe.seed, "val-split", slot),
        )
        pos_counts: dict[str, int] = {}
        neg_counts: dict[str, int] = {}
        n_pos = n_neg = 0
        pos_total = neg_total = 0
        for text, label in train_set:
            counts = token_counts(text)
            target = pos_counts if label else neg_counts
            for token, count in counts.items():
                target[token] = target.get(token, 0) + count
            if label:
                n_pos += 1
                pos_total += sum(counts.values())
            else:
                n_neg += 1
                neg_total += sum(counts.values())
        vocab = set(pos_counts) | set(neg_counts)
        alpha = 1.0
        log_odds = {}
        for token in vocab:
            p_pos = (pos_counts.get(token, 0) + alpha) / (pos_total + alpha * len(vocab))
            p_neg = (neg_counts.get(token, 0) + alpha) / (neg_total + alpha * len(vocab))
            # tiny per-(slot, token) jitter keeps the three stub slots distinct
            jitter = ((derive_seed(recipe.seed, slot, token) % 1001) - 500) / 500 * 0.05
            log_odds[token] = math.log(p_pos / p_neg) + jitter
        bias = math.log(n_pos / n_neg)
        backend = cls(slot, log_odds, bias, recipe.threshold, recipe.seed, recipe.recipe_hash)

        # Single-pass fit; the epoch loop exists only to log a validation curve
        # in the same shape the model-runtime backends produce.
        val_accuracy = None
        if val_set:
            correct = sum(1 for text, label in val_set if backend.predict(text)[1] == label)
            val_accuracy = correct / len(val_set)
        backend.training_log = [
            {"epoch": epoch, "val_accuracy": val_accuracy}
            for epoch in range(1, recipe.resolved_epochs() + 1)
        ]
        backend.training_log.append({"best_epoch": 1})
        return backend

    def to_json(self) -> dict[str, Any]:
        return {
            "kind": "keyword_stub",
            "slot": self.slot,
            "bias": self.bias,
            "threshold": self.threshold,
            "seed": self.seed,
            "recipe_hash": self.recipe_hash,
            "token_log_odds": dict(sorted(self.token_log_odds.items())),
        }

    @classmethod
    def from_json(cls, raw: dict[str, Any]) -> "KeywordClassifierBackend":
        return cls(
            slot=str(raw["slot"]),
            token_log_odds={k: float(v) for k, v in raw["token_log_odds"].items()},
            bias=float(raw["bias"]),
            threshold=float(raw["threshold"]),
            seed=int(raw["seed"]),
            recipe_hash=raw.get("recipe_hash"),
        )


# Crude built-in lexicon used when no labeled corpus is configured.
_DEFAULT_LEXICON = (
    "privacy private data tracking tracker tracked camera microphone location "
    "permission permissions contacts personal share sharing shared collect collects "
    "collecting collection sell selling sold spy spying consent account password "
    "leak leaked surveillance ads advertising advertisers profile history record "
    "recording recordings upload uploads uploaded intrusive creepy snooping gdpr "
    "identity expose exposed harvesting"
).split()


def lexicon_backend(slot: str, seed: int = 0, threshold: float = 0.5) -> KeywordClassifierBackend:
    weights = {}
    for token in _DEFAULT_LEXICON:
        jitter = ((derive_seed(seed, slot, token) % 1001) - 500) / 500 * 0.05
        weights[token] = 1.2 + jitter
    return KeywordClassifierBackend(slot, weights, bias=-2.0, threshold=threshold, seed=seed)


def train_backend(
    slot: str,
    labeled: Sequence[tuple[str, bool]],
    recipe: TrainingRecipe,
) -> ClassifierBackend:
    """Train one backend slot. Stub recipes train instantly; model-runtime
    recipes are dispatched to the neural module and may raise CapabilityError."""
    if slot not in SLOTS:
        raise ValueError(f"unknown slot {slot!r}; expected one of {SLOTS}")
    labels = {lab for _, lab in labeled}
    if len(labels) < 2:
        raise TrainingError(f"slot {slot}: training data contains a single class")
    if recipe.kind == "stub":
        return KeywordClassifierBackend.train(slot, labeled, recipe)
    from . import neural  # deferred: torch/transformers may be absent

    if recipe.kind == "sentence_head":
        return neural.train_sentence_head_backend(slot, labeled, recipe)
    if recipe.kind == "encoder":
        return neural.train_encoder_backend(slot, labeled, recipe)
    raise ValueError(f"unknown backend kind {recipe.kind!r}")


def classify_batch(
    backends: Mapping[str, ClassifierBackend],
    reviews: Sequence[Review],
) -> list[ClassificationResult]:
    """Score every review with all backends. Ensemble labels stay unset until
    ensemble_decide. Reviews with empty text are skipped with a log entry."""
    missing = [slot for slot in SLOTS if slot not in backends]
    if missing:
        raise ValueError(f"backends missing for slots: {missing}")
    results = []
    for review in reviews:
        if not review.text.strip():
            log.warning("skipping review %s: empty text", review.id)
            continue
        per_backend = {}
        for slot in SLOTS:
            score, label = backends[slot].predict(review.text)
            per_backend[slot] = BackendScore(score, label)
        results.append(ClassificationResult(review_id=review.id, per_backend=per_backend))
    return results


def ensemble_decide(
    result: ClassificationResult,
    corpus_review_count: int,
    designated_single: str = DEFAULT_DESIGNATED_SLOT,
    ensemble_min_reviews: int = ENSEMBLE_MIN_REVIEWS,
) -> ClassificationResult:
    """Apply the regime rule.

    At or above the threshold the vote is conjunctive: privacy only if all
    three backends say privacy. Below it, the designated backend alone decides.
    """
    missing = [slot for slot in SLOTS if slot not in result.per_backend]
    if missing:
        raise ValueError(f"per-backend labels missing for slots: {missing}")
    if corpus_review_count >= ensemble_min_reviews:
        verdict = all(result.per_backend[slot].is_privacy for slot in SLOTS)
        regime = REGIME_ENSEMBLE
    else:
        verdict = result.per_backend[designated_single].is_privacy
        regime = REGIME_SINGLE
    return replace(result, ensemble_is_privacy=verdict, regime=regime)


@dataclass(frozen=True)
class EnsembleClassifier:
    """Predict-callable view of the three backends under the regime rule.

    The reported score is the conjunction-compatible min of backend scores in
    the ensemble regime, and the designated backend's score otherwise.
    """

    backends: Mapping[str, ClassifierBackend]
    corpus_review_count: int
    designated_single: str = DEFAULT_DESIGNATED_SLOT
    ensemble_min_reviews: int = ENSEMBLE_MIN_REVIEWS
    name: str = "ensemble"
    slot: str = "ensemble"

    def predict(self, text: str) -> tuple[float, bool]:
        scores = {}
        labels = {}
        for slot in SLOTS:
            score, label = self.backends[slot].predict(text)
            scores[slot], labels[slot] = score, label
        if self.corpus_review_count >= self.ensemble_min_reviews:
            return min(scores.values()), all(labels.values())
        return scores[self.designated_single], labels[self.designated_single]


@dataclass(frozen=True)
class ClassifierMetrics:
    """Standard metrics; fields whose denominators vanish hold None, never 0."""

    accuracy: float
    precision: float | None
    recall: float | None
    f1: float | None
    auc: float | None
    support: int = 0

    def __post_init__(self) -> None:
        for name in ("accuracy", "precision", "recall", "f1", "auc"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0 + 1e-12:
                raise ValueError(f"{name} out of [0,1]: {value}")
        if self.precision is not None and self.recall is not None and self.f1 is not None:
            if self.precision + self.recall > 0:
                harmonic = 2 * self.precision * self.recall / (self.precision + self.recall)
                if abs(self.f1 - harmonic) > 1e-9:
                    raise ValueError(f"f1 {self.f1} inconsistent with precision/recall ({harmonic})")
            elif self.f1 != 0.0:
                raise ValueError("f1 must be 0 when precision and recall are both 0")

    def to_json(self) -> dict[str, Any]:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "auc": self.auc,
            "support": self.support,
        }


def rank_auc(scores: Sequence[float], labels: Sequence[bool]) -> float | None:
    """ROC AUC via the rank-sum statistic with midrank tie handling.

    Invariant under strictly monotone score transforms; None for one-class input.
    """
    if len(scores) != len(labels):
        raise ValueError("scores and labels must have equal length")
    n_pos = sum(labels)
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    order = sorted(range(len(scores)), key=lambda i: scores[i])
    ranks = [0.0] * len(scores)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        midrank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = midrank
        i = j + 1
    pos_rank_sum = sum(r for r, lab in zip(ranks, labels) if lab)
    u_stat = pos_rank_sum - n_pos * (n_pos + 1) / 2
    return u_stat / (n_pos * n_neg)


def evaluate_classifier(
    predictor: ClassifierBackend | Callable[[str], tuple[float, bool]],
    test: Sequence[tuple[str, bool]],
) -> ClassifierMetrics:
    """Confusion-count metrics plus ranking AUC for any (text)->(score,label) predictor."""
    if not test:
        raise ValueError("test set is empty")
    predict = predictor.predict if hasattr(predictor, "predict") else predictor
    scores: list[float] = []
    preds: list[bool] = []
    golds: list[bool] = []
    for text, label in test:
        score, pred = predict(text)
        scores.append(score)
        preds.append(pred)
        golds.append(label)
    tp = sum(1 for p, g in zip(preds, golds) if p and g)
    tn = sum(1 for p, g in zip(preds, golds) if not p and not g)
    fp = sum(1 for p, g in zip(preds, golds) if p and not g)
    fn = sum(1 for p, g in zip(preds, golds) if not p and g)
    accuracy = (tp + tn) / len(test)
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    if precision is None or recall is None:
        f1 = None
    elif precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
    return ClassifierMetrics(
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
        auc=rank_auc(scores, golds),
        support=len(test),
    )


def load_labeled(path: Path | str) -> list[tuple[str, bool]]:
    """Read a line-delimited {text, label in {privacy, not_privacy}} dataset."""
    labeled = []
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid record ({exc.msg})") from exc
            text = str(raw.get("text", "")).strip()
            label = raw.get("label")
            if not text or label not in (PRIVACY, NOT_PRIVACY):
                raise ParseError(f"{path}:{lineno}: need non-empty text and label in "
                                 f"{{{PRIVACY}, {NOT_PRIVACY}}}")
            labeled.append((text, label == PRIVACY))
    return labeled
