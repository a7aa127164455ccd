"""Per-release-instance issue ledgers for the two compared methods:

* baseline — classify real post-release reviews per candidate instance, then
  generate issues from the privacy ones, bucketed by review timestamp;
* predicted — simulate reviews for each candidate feature before release and
  generate issues from the simulations.

Both methods funnel through the same canonicalization/dedup path so metric
differences reflect content, not normalization.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from .classify import (
    DEFAULT_DESIGNATED_SLOT,
    ENSEMBLE_MIN_REVIEWS,
    ClassifierBackend,
    classify_batch,
    ensemble_decide,
)
from .corpus import CorpusSplit
from .errors import DegenerateGenerationError
from .issues import Issue, IssueModel, canonicalize_issue, generate_issues
from .mapping import PairRecord
from .simulate import GenerationModel, SimulatedReview, SimulatorConfig, simulate_reviews

log = logging.getLogger(__name__)

METHOD_BASELINE = "baseline"
METHOD_PREDICTED = "predicted"


@dataclass
class MethodIssueLedger:
    """Canonical issues per candidate instance for one method.

    Instance indices are contiguous from 0; within an instance, issues are
    deduplicated by canonical form (set semantics, first occurrence kept).
    """

    method: str
    per_instance: dict[int, list[Issue]] = field(default_factory=dict)

    @classmethod
    def empty(cls, method: str, instance_count: int) -> "MethodIssueLedger":
        return cls(method=method, per_instance={i: [] for i in range(instance_count)})

    def __post_init__(self) -> None:
        indices = sorted(self.per_instance)
        if indices != list(range(len(indices))):
            raise ValueError(f"instance indices not contiguous from 0: {indices}")

    @property
    def instance_indices(self) -> list[int]:
        return sorted(self.per_instance)

    def add_issue(self, instance_index: int, raw_phrase: str, source_review_id: str) -> bool:
        """Canonicalize and record one phrase; returns False for drops (pure
        punctuation) and within-instance duplicates."""
        if instance_index not in self.per_instance:
            raise KeyError(f"instance {instance_index} not in ledger")
        canonical = canonicalize_issue(raw_phrase)
        if not canonical:
            log.debug("dropped issue with empty canonical form: %r", raw_phrase)
            return False
        if canonical in self.canonical_set(instance_index):
            return False
        self.per_instance[instance_index].append(
            Issue(
                raw=raw_phrase,
                canonical=canonical,
                method=self.method,
                instance_index=instance_index,
                source_review_id=source_review_id,
            )
        )
        return True

    def canonical_set(self, instance_index: int) -> set[str]:
        return {issue.canonical for issue in self.per_instance[instance_index]}

    def cumulative_set(self, instance_index: int) -> set[str]:
        union: set[str] = set()
        for i in range(instance_index + 1):
            union |= self.canonical_set(i)
        return union

    def to_json(self) -> dict[str, Any]:
        return {
            self.method: {
                str(i): [issue.to_json() for issue in issues]
                for i, issues in sorted(self.per_instance.items())
            }
        }

    @classmethod
    def from_json(cls, raw: Mapping[str, Any]) -> "MethodIssueLedger":
        if len(raw) != 1:
            raise ValueError("ledger JSON must map exactly one method")
        method = next(iter(raw))
        ledger = cls(method=method, per_instance={int(i): [] for i in raw[method]})
        for i, entries in raw[method].items():
            for entry in entries:
                ledger.per_instance[int(i)].append(
                    Issue(
                        raw=str(entry["raw"]),
                        canonical=str(entry["canonical"]),
                        method=method,
                        instance_index=int(i),
                        source_review_id=str(entry["source_review_id"]),
                    )
                )
        return ledger

    def save(self, path: Path) -> None:
        path.write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> "MethodIssueLedger":
        return cls.from_json(json.loads(path.read_text(encoding="utf-8")))


def assert_existing_provenance(pairs: Sequence[PairRecord], split: CorpusSplit) -> None:
    """Leakage guard: every paired review must come from the existing-period
    pool, i.e. nothing the simulator saw postdates the cutoff."""
    existing_ids = {review.id for review in split.existing_reviews}
    offenders = [pair.review_id for pair in pairs if pair.review_id not in existing_ids]
    if offenders:
        raise ValueError(
            f"simulator training pairs reference {len(offenders)} reviews outside the "
            f"existing pool (first: {offenders[0]}); cutoff hygiene violated"
        )


def run_baseline(
    split: CorpusSplit,
    backends: Mapping[str, ClassifierBackend],
    issue_model: IssueModel,
    corpus_review_count: int,
    designated_slot: str = DEFAULT_DESIGNATED_SLOT,
    ensemble_min_reviews: int = ENSEMBLE_MIN_REVIEWS,
) -> MethodIssueLedger:
    """Post-release method: per candidate instance, privacy-classify its real
    reviews (same regime rule as everywhere else) and summarise the privacy
    ones into issues. Instances with no privacy reviews give empty sets."""
    ledger = MethodIssueLedger.empty(METHOD_BASELINE, len(split.candidate_instances))
    for instance in split.candidate_instances:
        reviews = list(split.candidate_reviews.get(instance.index, ()))
        if not reviews:
            continue
        results = classify_batch(backends, reviews)
        decided = [
            ensemble_decide(result, corpus_review_count, designated_slot, ensemble_min_reviews)
            for result in results
        ]
        privacy_ids = {r.review_id for r in decided if r.ensemble_is_privacy}
        for review in reviews:
            if review.id not in privacy_ids:
                continue
            for phrase in generate_issues(issue_model, review.text):
                ledger.add_issue(instance.index, phrase, review.id)
    return ledger


def run_predicted(
    split: CorpusSplit,
    pairs: Sequence[PairRecord],
    simulator: GenerationModel,
    issue_model: IssueModel,
    config: SimulatorConfig,
    simulation_sink: list[SimulatedReview] | None = None,
) -> MethodIssueLedger:
    """Pre-release method: simulate reviews for every candidate feature and
    summarise them into issues. Simulated reviews skip the privacy classifier
    and go straight to the issue model. Pass a list as simulation_sink to
    collect every generated review for persistence."""
    assert_existing_provenance(pairs, split)
    ledger = MethodIssueLedger.empty(METHOD_PREDICTED, len(split.candidate_instances))
    for instance in split.candidate_instances:
        for feature in instance.features:
            try:
                simulated = simulate_reviews(simulator, feature, config)
            except DegenerateGenerationError as exc:
                log.warning("skipping feature %s: %s", feature.id, exc)
                continue
            if simulation_sink is not None:
                simulation_sink.extend(simulated)
            for review in simulated:
                for phrase in generate_issues(issue_model, review.text):
                    ledger.add_issue(instance.index, phrase, review.review_id)
    return ledger
