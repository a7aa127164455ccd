"""Model-runtime backend implementations for the pluggable slots.

The feed-forward sentence-head classifier (slot C's recipe) runs on torch over
any embedding backend, so it works offline. The encoder classifiers and the
seq2seq generators need pretrained transformer weights; when the runtime or
the weights are unavailable they raise CapabilityError pointing at the stub
backends, which implement the same contracts.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .errors import CapabilityError, TrainingError
from .hashing import derive_seed, hash_json, stable_hash
from .issues import IssueAnnotation, IssueGenConfig
from .mapping import EmbeddingBackend, HashEmbeddingBackend, PairRecord
from .simulate import DecodeConfig, SimulatorConfig
from .training import EarlyStopper, seeded_split, stratified_split

log = logging.getLogger(__name__)

SENTENCE_HEAD_HIDDEN_UNITS = 512  # two feed-forward layers at this width
SENTENCE_HEAD_DIMENSION = 512


def _require_torch() -> Any:
    try:
        import torch
    except ImportError as exc:  # pragma: no cover - environment dependent
        raise CapabilityError(
            "torch is not installed; install the [models] extra or use the stub backends"
        ) from exc
    return torch


def _require_transformers() -> Any:
    try:
        import transformers
    except ImportError as exc:  # pragma: no cover - environment dependent
        raise CapabilityError(
            "transformers is not installed; install the [models] extra or use the stub backends"
        ) from exc
    return transformers


def _load_pretrained(loader: Any, model_name: str) -> Any:
    try:
        return loader.from_pretrained(model_name)
    except Exception as exc:
        raise CapabilityError(
            f"pretrained weights for {model_name!r} are unavailable in this environment; "
            "use the stub backends instead"
        ) from exc


class SentenceHeadClassifierBackend:
    """Frozen sentence embeddings + a two-layer 512-unit feed-forward head."""

    def __init__(
        self,
        slot: str,
        embedding_backend: EmbeddingBackend,
        threshold: float = 0.5,
        hidden_units: int = SENTENCE_HEAD_HIDDEN_UNITS,
    ):
        self.slot = slot
        self.name = f"sentence-head-{slot}"
        self.embedding_backend = embedding_backend
        self.threshold = threshold
        self.hidden_units = hidden_units
        self._model: Any = None
        self.training_log: list[dict[str, Any]] = []

    def _build_model(self) -> Any:
        torch = _require_torch()
        return torch.nn.Sequential(
            torch.nn.Linear(self.embedding_backend.dimension, self.hidden_units),
            torch.nn.ReLU(),
            torch.nn.Linear(self.hidden_units, self.hidden_units),
            torch.nn.ReLU(),
            torch.nn.Linear(self.hidden_units, 1),
        )

    def train(
        self,
        labeled: Sequence[tuple[str, bool]],
        epochs: int = 20,
        validation_fraction: float = 0.1,
        seed: int = 0,
        learning_rate: float = 1e-3,
    ) -> "SentenceHeadClassifierBackend":
        torch = _require_torch()
        labels = {lab for _, lab in labeled}
        if len(labels) < 2:
            raise TrainingError(f"slot {self.slot}: training data contains a single class")
        torch.manual_seed(derive_seed(seed, "sentence-head", self.slot))
        train_set, val_set = stratified_split(
            list(labeled), [lab for _, lab in labeled], validation_fraction, seed
        )

        def encode(batch: Sequence[tuple[str, bool]]) -> tuple[Any, Any]:
            xs = torch.tensor(
                np.stack([self.embedding_backend.embed(text) for text, _ in batch]),
                dtype=torch.float32,
            )
            ys = torch.tensor([[1.0 if lab else 0.0] for _, lab in batch], dtype=torch.float32)
            return xs, ys

        x_train, y_train = encode(train_set)
        x_val, y_val = encode(val_set) if val_set else (x_train, y_train)
        model = self._build_model()
        optimizer = torch.optim.Adam(model.parameters(), lr=learning_rate)
        loss_fn = torch.nn.BCEWithLogitsLoss()

        best_state = None
        best_accuracy = -1.0
        self.training_log = []
        for epoch in range(1, epochs + 1):
            model.train()
            optimizer.zero_grad()
            loss = loss_fn(model(x_train), y_train)
            loss.backward()
            optimizer.step()
            model.eval()
            with torch.no_grad():
                val_pred = torch.sigmoid(model(x_val)) >= self.threshold
                accuracy = float((val_pred == (y_val >= 0.5)).float().mean())
            self.training_log.append(
                {"epoch": epoch, "train_loss": loss.item(), "val_accuracy": accuracy}
            )
            if accuracy > best_accuracy:  # best epoch kept by validation performance
                best_accuracy = accuracy
                best_state = {k: v.clone() for k, v in model.state_dict().items()}
        if best_state is not None:
            model.load_state_dict(best_state)
        model.eval()
        self._model = model
        return self

    def predict(self, text: str) -> tuple[float, bool]:
        if self._model is None:
            raise TrainingError(f"backend {self.name} has not been trained")
        torch = _require_torch()
        with torch.no_grad():
            x = torch.tensor(
                np.asarray(self.embedding_backend.embed(text))[None, :], dtype=torch.float32
            )
            score = float(torch.sigmoid(self._model(x))[0, 0])
        return score, score >= self.threshold


def train_sentence_head_backend(
    slot: str, labeled: Sequence[tuple[str, bool]], recipe: Any
) -> SentenceHeadClassifierBackend:
    """Slot-C recipe: 512-dim sentence embeddings, 20-epoch head training.

    recipe.base_model selects the encoder; the default is the offline hash
    embedder at the recipe dimension so the head is trainable anywhere.
    """
    if recipe.base_model in (None, "hash"):
        embedder: EmbeddingBackend = HashEmbeddingBackend(
            dimension=SENTENCE_HEAD_DIMENSION, seed=recipe.seed
        )
    else:
        embedder = PretrainedSentenceEmbeddingBackend(recipe.base_model)
    backend = SentenceHeadClassifierBackend(slot, embedder, threshold=recipe.threshold)
    return backend.train(
        labeled,
        epochs=recipe.resolved_epochs(),
        validation_fraction=recipe.validation_fraction,
        seed=recipe.seed,
    )


class PretrainedSentenceEmbeddingBackend:
    """Mean-pooled hidden states of a pretrained encoder as sentence vectors."""

    def __init__(self, model_name: str):
        transformers = _require_transformers()
        torch = _require_torch()
        self.name = f"pretrained:{model_name}"
        self._torch = torch
        self._tokenizer = _load_pretrained(transformers.AutoTokenizer, model_name)
        self._model = _load_pretrained(transformers.AutoModel, model_name)
        self._model.eval()
        self.dimension = int(self._model.config.hidden_size)

    def embed(self, text: str) -> Any:
        torch = self._torch
        with torch.no_grad():
            encoded = self._tokenizer(text, return_tensors="pt", truncation=True, max_length=256)
            hidden = self._model(**encoded).last_hidden_state[0]
            return hidden.mean(dim=0).numpy()


class EncoderClassifierBackend:
    """Fine-tuned bidirectional-encoder classifier (slots A and B).

    Slot B first fine-tunes on a sentiment corpus when the recipe provides
    one; without it the recipe degrades to slot A's with a logged warning.
    """

    DEFAULT_MODEL = "bert-base-uncased"

    def __init__(self, slot: str, model_name: str | None = None, threshold: float = 0.5):
        self.slot = slot
        self.model_name = model_name or self.DEFAULT_MODEL
        self.name = f"encoder-{slot}:{self.model_name}"
        self.threshold = threshold
        self._tokenizer: Any = None
        self._model: Any = None
        self.training_log: list[dict[str, Any]] = []

    def _fine_tune(
        self,
        labeled: Sequence[tuple[str, bool]],
        epochs: int,
        validation_fraction: float,
        seed: int,
        learning_rate: float = 2e-5,
        batch_size: int = 16,
    ) -> None:
        torch = _require_torch()
        transformers = _require_transformers()
        if self._model is None:
            self._tokenizer = _load_pretrained(transformers.AutoTokenizer, self.model_name)
            self._model = _load_pretrained(
                transformers.AutoModelForSequenceClassification, self.model_name
            )
        torch.manual_seed(derive_seed(seed, "encoder", self.slot))
        train_set, val_set = stratified_split(
            list(labeled), [lab for _, lab in labeled], validation_fraction, seed
        )
        optimizer = torch.optim.AdamW(self._model.parameters(), lr=learning_rate)

        def batches(rows: Sequence[tuple[str, bool]]):
            for start in range(0, len(rows), batch_size):
                chunk = rows[start : start + batch_size]
                encoded = self._tokenizer(
                    [text for text, _ in chunk],
                    return_tensors="pt",
                    truncation=True,
                    padding=True,
                    max_length=256,
                )
                encoded["labels"] = torch.tensor([int(lab) for _, lab in chunk])
                yield encoded

        best_state = None
        best_accuracy = -1.0
        for epoch in range(1, epochs + 1):
            self._model.train()
            epoch_loss = 0.0
            for batch in batches(train_set):
                optimizer.zero_grad()
                output = self._model(**batch)
                output.loss.backward()
                optimizer.step()
                epoch_loss += float(output.loss)
            self._model.eval()
            correct = total = 0
            with torch.no_grad():
                for batch in batches(val_set or train_set):
                    labels = batch.pop("labels")
                    logits = self._model(**batch).logits
                    correct += int((logits.argmax(dim=-1) == labels).sum())
                    total += len(labels)
            accuracy = correct / max(1, total)
            self.training_log.append(
                {"epoch": epoch, "train_loss": epoch_loss, "val_accuracy": accuracy}
            )
            if accuracy > best_accuracy:
                best_accuracy = accuracy
                best_state = {k: v.clone() for k, v in self._model.state_dict().items()}
        if best_state is not None:
            self._model.load_state_dict(best_state)
        self._model.eval()

    def train(self, labeled: Sequence[tuple[str, bool]], recipe: Any) -> "EncoderClassifierBackend":
        labels = {lab for _, lab in labeled}
        if len(labels) < 2:
            raise TrainingError(f"slot {self.slot}: training data contains a single class")
        if recipe.sentiment_corpus:
            from .classify import load_labeled

            sentiment = load_labeled(recipe.sentiment_corpus)
            self._fine_tune(
                sentiment, epochs=1, validation_fraction=recipe.validation_fraction, seed=recipe.seed
            )
        elif self.slot == "B":
            log.warning(
                "slot B: no sentiment corpus configured; falling back to slot A's recipe"
            )
        self._fine_tune(
            labeled,
            epochs=recipe.resolved_epochs(),
            validation_fraction=recipe.validation_fraction,
            seed=recipe.seed,
        )
        return self

    def predict(self, text: str) -> tuple[float, bool]:
        if self._model is None:
            raise TrainingError(f"backend {self.name} has not been trained")
        torch = _require_torch()
        with torch.no_grad():
            encoded = self._tokenizer(text, return_tensors="pt", truncation=True, max_length=256)
            logits = self._model(**encoded).logits[0]
            score = float(torch.softmax(logits, dim=-1)[1])
        return score, score >= self.threshold


def train_encoder_backend(
    slot: str, labeled: Sequence[tuple[str, bool]], recipe: Any
) -> EncoderClassifierBackend:
    backend = EncoderClassifierBackend(slot, recipe.base_model, threshold=recipe.threshold)
    return backend.train(labeled, recipe)


@dataclass
class _Seq2SeqHandle:
    """Trained seq2seq model plus its provenance hash."""

    handle_id: str
    tokenizer: Any
    model: Any
    delimiter: str = ""

    def generate(self, conditioning: str, decode: DecodeConfig, seed: int) -> str:
        torch = _require_torch()
        torch.manual_seed(seed)
        inputs = self.tokenizer(conditioning, return_tensors="pt", truncation=True, max_length=512)
        output = self.model.generate(
            **inputs,
            do_sample=True,
            top_p=decode.nucleus_mass,
            temperature=decode.temperature,
            max_new_tokens=decode.max_tokens,
        )
        return self.tokenizer.decode(output[0], skip_special_tokens=True)

    def decode(self, review_text: str) -> str:
        inputs = self.tokenizer(review_text, return_tensors="pt", truncation=True, max_length=512)
        output = self.model.generate(**inputs, do_sample=False, num_beams=1, max_new_tokens=48)
        return self.tokenizer.decode(output[0], skip_special_tokens=True)


class Seq2SeqBackend:
    """Sequence-to-sequence slot shared by the review simulator (sampling
    decode) and the issue generator (greedy decode)."""

    SIMULATOR_DEFAULT = "facebook/bart-base"
    ISSUE_DEFAULT = "t5-base"

    def __init__(self, model_name: str):
        self.model_name = model_name
        self.name = f"seq2seq:{model_name}"

    def _fit(
        self,
        sources: Sequence[str],
        targets: Sequence[str],
        epochs: int,
        train_fraction: float,
        seed: int,
        learning_rate: float,
        label_smoothing: float = 0.0,
        early_stopping: bool = True,
        patience: int = 1,
        batch_size: int = 8,
    ) -> _Seq2SeqHandle:
        torch = _require_torch()
        transformers = _require_transformers()
        tokenizer = _load_pretrained(transformers.AutoTokenizer, self.model_name)
        model = _load_pretrained(transformers.AutoModelForSeq2SeqLM, self.model_name)
        torch.manual_seed(derive_seed(seed, "seq2seq", self.model_name))
        rows = list(zip(sources, targets))
        train_rows, val_rows = seeded_split(rows, train_fraction, seed)
        optimizer = torch.optim.AdamW(model.parameters(), lr=learning_rate)
        loss_fn = torch.nn.CrossEntropyLoss(
            ignore_index=tokenizer.pad_token_id, label_smoothing=label_smoothing
        )

        def batch_loss(chunk: Sequence[tuple[str, str]]) -> Any:
            encoded = tokenizer(
                [src for src, _ in chunk],
                text_target=[tgt for _, tgt in chunk],
                return_tensors="pt",
                truncation=True,
                padding=True,
                max_length=512,
            )
            labels = encoded.pop("labels")
            logits = model(**encoded, labels=labels).logits
            return loss_fn(logits.view(-1, logits.size(-1)), labels.view(-1))

        stopper = EarlyStopper(patience=patience)
        for epoch in range(1, epochs + 1):
            model.train()
            for start in range(0, len(train_rows), batch_size):
                optimizer.zero_grad()
                loss = batch_loss(train_rows[start : start + batch_size])
                loss.backward()
                optimizer.step()
            model.eval()
            with torch.no_grad():
                val_losses = [
                    float(batch_loss(val_rows[start : start + batch_size]))
                    for start in range(0, len(val_rows), batch_size)
                ] or [0.0]
            val_loss = sum(val_losses) / len(val_losses)
            log.info("%s epoch %d: val_loss=%.4f", self.name, epoch, val_loss)
            if early_stopping and stopper.update(epoch, val_loss):
                break
        model.eval()
        handle_id = stable_hash(self.name, hash_json({"n": len(rows), "seed": seed}))
        return _Seq2SeqHandle(handle_id=handle_id, tokenizer=tokenizer, model=model)

    def finetune(self, pairs: Sequence[PairRecord], config: SimulatorConfig) -> _Seq2SeqHandle:
        return self._fit(
            sources=[p.feature_text for p in pairs],
            targets=[p.review_text for p in pairs],
            epochs=config.epochs,
            train_fraction=config.train_fraction,
            seed=config.seed,
            learning_rate=3e-5,
            early_stopping=config.early_stopping,
            patience=config.patience,
        )

    def finetune_issues(
        self, annotations: Sequence[IssueAnnotation], config: IssueGenConfig
    ) -> _Seq2SeqHandle:
        handle = self._fit(
            sources=[a.review_text for a in annotations],
            targets=[config.issue_delimiter.join(a.issues) for a in annotations],
            epochs=config.epochs,
            train_fraction=config.train_fraction,
            seed=config.seed,
            learning_rate=config.learning_rate,
            label_smoothing=config.label_smoothing,
            early_stopping=False,
        )
        handle.delimiter = config.issue_delimiter
        return handle


class Seq2SeqIssueBackend(Seq2SeqBackend):
    """Issue-generation view of the seq2seq slot (delimiter-joined targets)."""

    def finetune(  # type: ignore[override]
        self, annotations: Sequence[IssueAnnotation], config: IssueGenConfig
    ) -> _Seq2SeqHandle:
        return self.finetune_issues(annotations, config)
