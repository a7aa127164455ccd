from __future__ import annotations

from datetime import date
from pathlib import Path

import pytest

from prereview.corpus import Feature, Month, Review

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


def make_feature(
    idx: int, month: str, app: str = "app", description: str | None = None
) -> Feature:
    return Feature(
        id=f"f{idx:03d}",
        app=app,
        description=description or f"Feature number {idx} adds a configurable widget panel.",
        release_month=Month.parse(month),
    )


def make_review(
    idx: int, day: str, app: str = "app", text: str | None = None, rating: int | None = None
) -> Review:
    return Review(
        id=f"r{idx:04d}",
        app=app,
        text=text or f"Review number {idx} talking about the app.",
        timestamp=date.fromisoformat(day),
        rating=rating,
    )
