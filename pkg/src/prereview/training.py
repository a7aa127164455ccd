"""Small training utilities shared by stub and model-runtime backends."""

from __future__ import annotations

import random
from typing import Sequence, TypeVar

T = TypeVar("T")


def seeded_split(items: Sequence[T], train_fraction: float, seed: int) -> tuple[list[T], list[T]]:
    """Shuffle-split into (train, held_out). Small inputs keep at least one
    training item; the held-out part may be empty."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0,1): {train_fraction}")
    order = list(range(len(items)))
    random.Random(seed).shuffle(order)
    n_train = max(1, round(len(items) * train_fraction)) if items else 0
    train_idx = sorted(order[:n_train])
    held_idx = sorted(order[n_train:])
    return [items[i] for i in train_idx], [items[i] for i in held_idx]


def stratified_split(
    items: Sequence[T],
    labels: Sequence[bool],
    holdout_fraction: float,
    seed: int,
) -> tuple[list[T], list[T]]:
    """Per-class shuffle-split into (train, held_out); each class keeps at
    least one training item, and classes with >1 item contribute to holdout."""
    if len(items) != len(labels):
        raise ValueError("items and labels must have equal length")
    rng = random.Random(seed)
    train: list[T] = []
    held: list[T] = []
    for cls in (False, True):
        idx = [i for i, lab in enumerate(labels) if lab is cls]
        rng.shuffle(idx)
        n_hold = min(len(idx) - 1, round(len(idx) * holdout_fraction)) if idx else 0
        n_hold = max(n_hold, 1 if len(idx) > 1 else 0)
        held.extend(idx[:n_hold])
        train.extend(idx[n_hold:])
    return [items[i] for i in sorted(train)], [items[i] for i in sorted(held)]


class EarlyStopper:
    """Stops after ``patience`` epochs without validation-loss improvement."""

    def __init__(self, patience: int = 1, min_delta: float = 0.0):
        if patience < 0:
            raise ValueError("patience must be >= 0")
        self.patience = patience
        self.min_delta = min_delta
        self.best_loss: float | None = None
        self.best_epoch: int | None = None
        self._since_best = 0

    def update(self, epoch: int, loss: float) -> bool:
        """Record one epoch's validation loss; returns True when training should stop."""
        if self.best_loss is None or loss < self.best_loss - self.min_delta:
            self.best_loss = loss
            self.best_epoch = epoch
            self._since_best = 0
            return False
        self._since_best += 1
        return self._since_best > self.patience
