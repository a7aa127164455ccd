"""Load features and reviews, group features into monthly release instances,
split instances at a cutoff into existing/candidate groups, and align reviews."""

from __future__ import annotations

import calendar
import json
import logging
from dataclasses import dataclass, field, replace
from datetime import date, datetime
from pathlib import Path
from typing import Any, Iterable

from .errors import ConfigError, EmptyCorpusError, ParseError
from .hashing import stable_hash

log = logging.getLogger(__name__)

ROLE_EXISTING = "existing"
ROLE_CANDIDATE = "candidate"


@dataclass(frozen=True, order=True)
class Month:
    """A calendar year-month; the default grouping granularity for releases."""

    year: int
    month: int

    def __post_init__(self) -> None:
        if not 1 <= self.month <= 12:
            raise ValueError(f"month out of range: {self.month}")

    @classmethod
    def parse(cls, value: str) -> "Month":
        """Accepts 'YYYY-MM' or a full ISO date (day is dropped)."""
        parts = value.strip().split("-")
        if len(parts) < 2:
            raise ValueError(f"not a year-month: {value!r}")
        return cls(int(parts[0]), int(parts[1]))

    @classmethod
    def from_date(cls, value: date) -> "Month":
        return cls(value.year, value.month)

    def first_day(self) -> date:
        return date(self.year, self.month, 1)

    def last_day(self) -> date:
        return date(self.year, self.month, calendar.monthrange(self.year, self.month)[1])

    def next(self) -> "Month":
        if self.month == 12:
            return Month(self.year + 1, 1)
        return Month(self.year, self.month + 1)

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"


def parse_timestamp(value: str) -> date:
    """Parse an ISO date or datetime string down to a calendar date."""
    value = value.strip()
    try:
        return datetime.fromisoformat(value).date()
    except ValueError:
        return date.fromisoformat(value)


@dataclass(frozen=True)
class Feature:
    """One release-note feature description."""

    id: str
    app: str
    description: str
    release_month: Month

    def to_json(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "app": self.app,
            "description": self.description,
            "release_month": str(self.release_month),
        }

    @classmethod
    def from_json(cls, raw: dict[str, Any]) -> "Feature":
        return cls(
            id=str(raw["id"]),
            app=str(raw["app"]),
            description=str(raw["description"]),
            release_month=Month.parse(str(raw["release_month"])),
        )


@dataclass(frozen=True)
class Review:
    """One user review as scraped from an app store export."""

    id: str
    app: str
    text: str
    timestamp: date
    rating: int | None = None

    def to_json(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "id": self.id,
            "app": self.app,
            "text": self.text,
            "timestamp": self.timestamp.isoformat(),
        }
        if self.rating is not None:
            doc["rating"] = self.rating
        return doc

    @classmethod
    def from_json(cls, raw: dict[str, Any]) -> "Review":
        rating = raw.get("rating")
        return cls(
            id=str(raw["id"]),
            app=str(raw["app"]),
            text=str(raw["text"]),
            timestamp=parse_timestamp(str(raw["timestamp"])),
            rating=int(rating) if rating is not None else None,
        )


@dataclass(frozen=True)
class ReleaseInstance:
    """The features shipped by one app within one period (a calendar month)."""

    app: str
    period: Month
    index: int
    role: str
    features: tuple[Feature, ...]

    def __post_init__(self) -> None:
        for feat in self.features:
            if feat.release_month != self.period:
                raise ValueError(
                    f"feature {feat.id} month {feat.release_month} != instance period {self.period}"
                )
            if feat.app != self.app:
                raise ValueError(f"feature {feat.id} app {feat.app!r} != instance app {self.app!r}")

    def to_json(self) -> dict[str, Any]:
        return {
            "app": self.app,
            "period": str(self.period),
            "index": self.index,
            "role": self.role,
            "features": [f.to_json() for f in self.features],
        }

    @classmethod
    def from_json(cls, raw: dict[str, Any]) -> "ReleaseInstance":
        return cls(
            app=str(raw["app"]),
            period=Month.parse(str(raw["period"])),
            index=int(raw["index"]),
            role=str(raw["role"]),
            features=tuple(Feature.from_json(f) for f in raw["features"]),
        )


@dataclass(frozen=True)
class CorpusSplit:
    """Release instances split at a cutoff, plus (optionally) aligned reviews.

    The existing group shares one review pool spanning its whole period; each
    candidate instance gets exactly the reviews that fall inside its own period.
    """

    app: str
    existing_instances: tuple[ReleaseInstance, ...]
    candidate_instances: tuple[ReleaseInstance, ...]
    cutoff: Month
    existing_reviews: tuple[Review, ...] = ()
    candidate_reviews: dict[int, tuple[Review, ...]] = field(default_factory=dict)
    discarded_review_ids: tuple[str, ...] = ()

    def existing_features(self) -> list[Feature]:
        return [f for inst in self.existing_instances for f in inst.features]

    def candidate_features(self) -> list[Feature]:
        return [f for inst in self.candidate_instances for f in inst.features]

    def review_alignment(self) -> dict[str, Any]:
        return {
            ROLE_EXISTING: list(self.existing_reviews),
            ROLE_CANDIDATE: {i: list(rs) for i, rs in self.candidate_reviews.items()},
        }

    def to_json(self) -> dict[str, Any]:
        return {
            "app": self.app,
            "cutoff": str(self.cutoff),
            "existing_instances": [i.to_json() for i in self.existing_instances],
            "candidate_instances": [i.to_json() for i in self.candidate_instances],
            "existing_reviews": [r.to_json() for r in self.existing_reviews],
            "candidate_reviews": {
                str(i): [r.to_json() for r in rs] for i, rs in sorted(self.candidate_reviews.items())
            },
            "discarded_review_ids": list(self.discarded_review_ids),
        }

    @classmethod
    def from_json(cls, raw: dict[str, Any]) -> "CorpusSplit":
        return cls(
            app=str(raw["app"]),
            existing_instances=tuple(ReleaseInstance.from_json(i) for i in raw["existing_instances"]),
            candidate_instances=tuple(ReleaseInstance.from_json(i) for i in raw["candidate_instances"]),
            cutoff=Month.parse(str(raw["cutoff"])),
            existing_reviews=tuple(Review.from_json(r) for r in raw["existing_reviews"]),
            candidate_reviews={
                int(i): tuple(Review.from_json(r) for r in rs)
                for i, rs in raw["candidate_reviews"].items()
            },
            discarded_review_ids=tuple(raw["discarded_review_ids"]),
        )


def _iter_records(path: Path | str) -> Iterable[tuple[int, dict[str, Any]]]:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid record ({exc.msg})") from exc
            if not isinstance(raw, dict):
                raise ParseError(f"{path}:{lineno}: record is not an object")
            yield lineno, raw


def load_features(
    path: Path | str,
    app: str,
    month_range: tuple[Month, Month] | None = None,
) -> list[Feature]:
    """Read line-delimited feature records for one app.

    Records without an explicit id get one hashed from (app, description, month),
    so reruns are deterministic. Records tagged with a different app are skipped.
    """
    features: list[Feature] = []
    for lineno, raw in _iter_records(path):
        record_app = str(raw.get("app", app))
        if record_app != app:
            continue
        description = str(raw.get("description", "")).strip()
        if not description:
            raise ParseError(f"{path}:{lineno}: feature description missing or empty")
        month_raw = raw.get("release_month")
        if month_raw is None:
            raise ParseError(f"{path}:{lineno}: release_month missing")
        try:
            month = Month.parse(str(month_raw))
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: bad release_month {month_raw!r}") from exc
        if month_range is not None and not (month_range[0] <= month <= month_range[1]):
            raise ParseError(
                f"{path}:{lineno}: release_month {month} outside configured range "
                f"{month_range[0]}..{month_range[1]}"
            )
        feature_id = str(raw["id"]) if "id" in raw else stable_hash(app, description, str(month))
        features.append(Feature(id=feature_id, app=app, description=description, release_month=month))
    if not features:
        raise EmptyCorpusError(f"{path}: no feature records for app {app!r}")
    return features


def load_reviews(
    path: Path | str,
    app: str,
    date_range: tuple[date, date] | None = None,
) -> list[Review]:
    """Read line-delimited review records for one app; may legitimately be empty."""
    reviews: list[Review] = []
    for lineno, raw in _iter_records(path):
        record_app = str(raw.get("app", app))
        if record_app != app:
            continue
        text = str(raw.get("text", "")).strip()
        if not text:
            raise ParseError(f"{path}:{lineno}: review text missing or empty")
        ts_raw = raw.get("timestamp")
        if ts_raw is None:
            raise ParseError(f"{path}:{lineno}: timestamp missing")
        try:
            when = parse_timestamp(str(ts_raw))
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: bad timestamp {ts_raw!r}") from exc
        if date_range is not None and not (date_range[0] <= when <= date_range[1]):
            raise ParseError(f"{path}:{lineno}: timestamp {when} outside collection window")
        rating = raw.get("rating")
        if rating is not None:
            rating = int(rating)
            if not 1 <= rating <= 5:
                raise ParseError(f"{path}:{lineno}: rating {rating} not in 1..5")
        review_id = str(raw["id"]) if "id" in raw else stable_hash(app, text, str(ts_raw))
        reviews.append(Review(id=review_id, app=app, text=text, timestamp=when, rating=rating))
    if not reviews:
        log.warning("%s: no review records for app %r", path, app)
    return reviews


def build_release_instances(features: list[Feature]) -> list[ReleaseInstance]:
    """Group features by calendar month into chronologically indexed instances.

    Months with no features produce no instance. Features keep input order
    within their instance. Re-announced duplicates are kept as-is.
    """
    if not features:
        return []
    apps = {f.app for f in features}
    if len(apps) > 1:
        raise ValueError(f"features span multiple apps: {sorted(apps)}")
    app = features[0].app
    by_month: dict[Month, list[Feature]] = {}
    for feat in features:
        by_month.setdefault(feat.release_month, []).append(feat)
    return [
        ReleaseInstance(app=app, period=month, index=idx, role=ROLE_EXISTING, features=tuple(group))
        for idx, (month, group) in enumerate(sorted(by_month.items()))
    ]


def split_groups(instances: list[ReleaseInstance], cutoff: Month) -> CorpusSplit:
    """Mark instances at or before the cutoff as existing, later ones as candidate.

    Candidate indices restart at 0. A cutoff earlier than the first instance is
    a range error; a cutoff past the last instance simply yields no candidates.
    """
    if not instances:
        raise ConfigError("cannot split an empty instance list")
    ordered = sorted(instances, key=lambda inst: inst.period)
    periods = [inst.period for inst in ordered]
    if len(set(periods)) != len(periods):
        raise ValueError("duplicate instance periods")
    if cutoff < periods[0]:
        raise ConfigError(f"cutoff {cutoff} precedes the first release instance ({periods[0]})")
    existing = [
        replace(inst, index=idx, role=ROLE_EXISTING)
        for idx, inst in enumerate(i for i in ordered if i.period <= cutoff)
    ]
    candidate = [
        replace(inst, index=idx, role=ROLE_CANDIDATE)
        for idx, inst in enumerate(i for i in ordered if i.period > cutoff)
    ]
    return CorpusSplit(
        app=ordered[0].app,
        existing_instances=tuple(existing),
        candidate_instances=tuple(candidate),
        cutoff=cutoff,
    )


def align_reviews(split: CorpusSplit, reviews: list[Review]) -> CorpusSplit:
    """Attach reviews to the split: one pool for the existing period, one bucket
    per candidate instance. Reviews outside every window are logged and discarded.
    """
    for review in reviews:
        if review.app != split.app:
            raise ValueError(f"review {review.id} belongs to app {review.app!r}, not {split.app!r}")

    existing_window: tuple[date, date] | None = None
    if split.existing_instances:
        existing_window = (
            split.existing_instances[0].period.first_day(),
            split.cutoff.last_day(),
        )
    candidate_windows = {
        inst.index: (inst.period.first_day(), inst.period.last_day())
        for inst in split.candidate_instances
    }

    existing_pool: list[Review] = []
    buckets: dict[int, list[Review]] = {inst.index: [] for inst in split.candidate_instances}
    discarded: list[str] = []
    for review in reviews:
        if existing_window and existing_window[0] <= review.timestamp <= existing_window[1]:
            existing_pool.append(review)
            continue
        for idx, (start, end) in candidate_windows.items():
            if start <= review.timestamp <= end:
                buckets[idx].append(review)
                break
        else:
            discarded.append(review.id)
    if discarded:
        log.info("discarded %d reviews outside every alignment window", len(discarded))
    return replace(
        split,
        existing_reviews=tuple(existing_pool),
        candidate_reviews={idx: tuple(rs) for idx, rs in buckets.items()},
        discarded_review_ids=tuple(discarded),
    )
