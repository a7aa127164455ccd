"""Review simulation: fine-tune a conditional generation backend on
feature-to-review pairs and generate n synthetic privacy reviews per
candidate feature, reproducibly."""

from __future__ import annotations

import logging
import math
import random
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Any, Protocol, Sequence

from .corpus import Feature
from .errors import DegenerateGenerationError, TrainingError
from .hashing import derive_seed, hash_json, stable_hash
from .mapping import PairRecord
from .text import salient_keywords, tokens
from .training import EarlyStopper, seeded_split

log = logging.getLogger(__name__)

MIN_TRAINING_PAIRS = 10


@dataclass(frozen=True)
class DecodeConfig:
    """Sampling decode settings; issues use greedy decoding, reviews use this."""

    temperature: float = 1.0
    nucleus_mass: float = 0.95
    max_tokens: int = 128


@dataclass(frozen=True)
class SimulatorConfig:
    train_fraction: float = 0.9
    epochs: int = 5
    early_stopping: bool = True
    patience: int = 1
    reviews_per_feature: int = 10
    decode: DecodeConfig = field(default_factory=DecodeConfig)
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0,1)")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.reviews_per_feature < 1:
            raise ValueError("reviews_per_feature must be >= 1")

    def to_json(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_json(cls, raw: dict[str, Any]) -> "SimulatorConfig":
        decode = DecodeConfig(**raw.get("decode", {}))
        fields = {k: v for k, v in raw.items() if k != "decode"}
        return cls(decode=decode, **fields)


@dataclass(frozen=True)
class SimulatedReview:
    """One generated review, tagged so the exact text can be regenerated."""

    candidate_feature_id: str
    text: str
    generation_index: int
    seed: int
    model_hash: str

    @property
    def review_id(self) -> str:
        return f"sim:{self.candidate_feature_id}:{self.generation_index}"

    def to_json(self) -> dict[str, Any]:
        return {
            "candidate_feature_id": self.candidate_feature_id,
            "generation_index": self.generation_index,
            "text": self.text,
            "seed": self.seed,
            "model_hash": self.model_hash,
        }


class GenerationModel(Protocol):
    """A trained conditional generator."""

    handle_id: str

    def generate(self, conditioning: str, decode: DecodeConfig, seed: int) -> str: ...


class GenerationBackend(Protocol):
    name: str

    def finetune(self, pairs: Sequence[PairRecord], config: SimulatorConfig) -> GenerationModel: ...


# Complaint templates for the stub generator. Each names at least one concrete
# privacy topic so downstream issue generation has something to key on.
_TEMPLATES = (
    "Ever since the {kw} update the app wants camera access all the time. Why does {kw2} need my camera?",
    "The new {kw} feature keeps asking for microphone access even when I am not in a call. Creepy.",
    "After they added {kw} the app started tracking my location in the background. Stop the location tracking.",
    "Why does {kw} need access to my contacts? Uploading my contacts for {kw2} is a privacy problem.",
    "The {kw} change means more personal data collection. I never agreed to this much data collection.",
    "I noticed {kw} sharing my usage data with advertisers. Targeted ads got worse right after.",
    "With {kw} my meeting recordings are stored in the cloud without a clear way to delete them.",
    "The {kw} screen wants my account profile details and photos. Too much personal information for {kw2}.",
    "Since {kw} arrived the app reads my calendar and message history. Why does it scan my messages?",
    "New {kw} permission prompts everywhere. Excessive permissions just to use {kw2}.",
    "The {kw} option quietly enabled analytics that collect my browsing history. Let me opt out.",
    "I think {kw} exposes my email and phone number to other participants. That data exposure is not okay.",
)

_TOPIC_TAILS = (
    "Please add a privacy setting for this.",
    "I want a clear consent prompt first.",
    "This should be opt in, not on by default.",
    "Fix it or I will uninstall.",
    "The privacy policy never mentioned this.",
    "",
)


class TemplateGenerationModel:
    """Trained stub generator: seeded templates filled with feature keywords.

    Deterministic for a fixed (handle, decode config, seed); distinct seeds
    give distinct template/topic draws.
    """

    backend_name = "template-stub"

    def __init__(self, handle_id: str, pair_count: int, training_log: dict[str, Any]):
        self.handle_id = handle_id
        self.pair_count = pair_count
        self.training_log = training_log

    def generate(self, conditioning: str, decode: DecodeConfig, seed: int) -> str:
        rng = random.Random(derive_seed(self.handle_id, hash_json(asdict(decode)), seed))
        keywords = salient_keywords(conditioning, limit=2)
        kw = keywords[0] if keywords else "this feature"
        kw2 = keywords[1] if len(keywords) > 1 else kw
        body = rng.choice(_TEMPLATES).format(kw=kw, kw2=kw2)
        tail = rng.choice(_TOPIC_TAILS)
        text = f"{body} {tail}".strip()
        words = text.split()
        if len(words) > decode.max_tokens:
            text = " ".join(words[: decode.max_tokens])
        return text

    def to_json(self) -> dict[str, Any]:
        return {
            "kind": "template_stub",
            "handle_id": self.handle_id,
            "pair_count": self.pair_count,
            "training_log": self.training_log,
        }

    @classmethod
    def from_json(cls, raw: dict[str, Any]) -> "TemplateGenerationModel":
        return cls(str(raw["handle_id"]), int(raw["pair_count"]), dict(raw["training_log"]))


class TemplateGenerationBackend:
    """Stub seq2seq slot: instant analytic 'training', template generation."""

    name = "template-stub"

    def finetune(self, pairs: Sequence[PairRecord], config: SimulatorConfig) -> TemplateGenerationModel:
        train, val = seeded_split(list(pairs), config.train_fraction, derive_seed(config.seed, "sim-split"))
        vocab = Counter()
        total = 0
        for record in train:
            for tok in tokens(record.review_text):
                vocab[tok] += 1
                total += 1

        def dataset_loss(records: Sequence[PairRecord]) -> float:
            # mean per-token NLL under the train-side unigram model (Laplace)
            if not records:
                return 0.0
            denom = total + len(vocab) + 1
            losses = []
            for record in records:
                toks = tokens(record.review_text) or [""]
                nll = -sum(math.log((vocab.get(t, 0) + 1) / denom) for t in toks) / len(toks)
                losses.append(nll)
            return sum(losses) / len(losses)

        train_loss = dataset_loss(train)
        val_loss = dataset_loss(val if val else train)
        # One-shot fit: the per-epoch curve is flat, so early stopping (patience
        # on validation loss) halts right after the patience window.
        stopper = EarlyStopper(patience=config.patience)
        curve = []
        for epoch in range(1, config.epochs + 1):
            curve.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss})
            if config.early_stopping and stopper.update(epoch, val_loss):
                break
        handle_id = stable_hash(
            self.name,
            hash_json([stable_hash(r.feature_id, r.review_id, str(r.rank)) for r in pairs]),
            hash_json(config.to_json()),
        )
        training_log = {
            "backend": self.name,
            "pair_count": len(pairs),
            "train_size": len(train),
            "val_size": len(val),
            "loss_curve": curve,
            "stopped_early": len(curve) < config.epochs,
            "best_epoch": stopper.best_epoch,
        }
        return TemplateGenerationModel(handle_id, len(pairs), training_log)


def finetune_simulator(
    pairs: Sequence[PairRecord],
    config: SimulatorConfig,
    backend: GenerationBackend | None = None,
) -> GenerationModel:
    """Fine-tune the review simulator on feature->review pairs (seeded 90:10
    split, early stopping on validation loss)."""
    if len(pairs) < MIN_TRAINING_PAIRS:
        raise TrainingError(
            f"simulator needs at least {MIN_TRAINING_PAIRS} training pairs, got {len(pairs)}"
        )
    backend = backend or TemplateGenerationBackend()
    model = backend.finetune(pairs, config)
    log.info("simulator %s trained on %d pairs", model.handle_id, len(pairs))
    return model


def simulate_reviews(
    model: GenerationModel,
    feature: Feature,
    config: SimulatorConfig,
) -> list[SimulatedReview]:
    """Generate exactly reviews_per_feature outputs for one candidate feature.

    Exact duplicates are regenerated with a bumped seed up to 3 times, then
    kept. Persistently empty generations raise DegenerateGenerationError.
    """
    if not feature.description.strip():
        raise ValueError(f"feature {feature.id} has an empty description")
    outputs: list[SimulatedReview] = []
    seen: set[str] = set()
    for index in range(config.reviews_per_feature):
        text = ""
        used_seed = -1
        for attempt in range(4):  # initial try + up to 3 reseeded retries
            used_seed = derive_seed(config.seed, feature.id, index, attempt)
            text = model.generate(feature.description, config.decode, used_seed).strip()
            if text and text not in seen:
                break
        if not text:
            raise DegenerateGenerationError(
                f"feature {feature.id}: empty generation after retries at index {index}"
            )
        seen.add(text)
        outputs.append(
            SimulatedReview(
                candidate_feature_id=feature.id,
                text=text,
                generation_index=index,
                seed=used_seed,
                model_hash=model.handle_id,
            )
        )
    return outputs
