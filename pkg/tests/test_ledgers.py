from __future__ import annotations

import json
from pathlib import Path

import pytest

from prereview.classify import SLOTS
from prereview.corpus import Month, align_reviews, build_release_instances, split_groups
from prereview.issues import IssueAnnotation, IssueGenConfig, KeywordIssueBackend
from prereview.ledgers import (
    METHOD_BASELINE,
    METHOD_PREDICTED,
    MethodIssueLedger,
    assert_existing_provenance,
    run_baseline,
    run_predicted,
)
from prereview.mapping import PairRecord
from prereview.simulate import SimulatorConfig, TemplateGenerationBackend, finetune_simulator

from .conftest import make_feature, make_review


class MarkerBackend:
    """Labels a review privacy iff it contains the word 'tracking'."""

    def __init__(self, slot: str):
        self.slot = slot
        self.name = f"marker-{slot}"

    def predict(self, text: str) -> tuple[float, bool]:
        privacy = "tracking" in text.lower()
        return (0.9 if privacy else 0.1), privacy


BACKENDS = {slot: MarkerBackend(slot) for slot in SLOTS}

ISSUE_ANNOTATIONS = [
    IssueAnnotation("Tracking my camera access all day.", ("unnecessary camera access",)),
    IssueAnnotation("Tracking location in the background.", ("background location tracking",)),
    IssueAnnotation("Tracking and excessive data collection.", ("excessive data collection",)),
]


def issue_model():
    return KeywordIssueBackend().finetune(ISSUE_ANNOTATIONS, IssueGenConfig())


def candidate_split(n_candidate_months: int = 3):
    features = [make_feature(0, "2024-01", description="base feature with camera")]
    serial = 1
    for month_idx in range(n_candidate_months):
        month = f"2024-{7 + month_idx:02d}"
        for _ in range(2):
            features.append(
                make_feature(serial, month, description=f"candidate capability {serial} sync")
            )
            serial += 1
    return split_groups(build_release_instances(features), Month.parse("2024-06"))


class TestRunBaseline:
    def test_table_driven_oracle_ledger(self) -> None:
        """30 reviews with a known keyword->issue table match the hand ledger."""
        split = candidate_split(3)
        reviews = []
        serial = 0
        texts_by_month = {
            "2024-07": ["tracking camera access nonsense", "lovely app"],
            "2024-08": ["tracking location background stuff", "tracking camera access again"],
            "2024-09": ["nothing to see", "great update"],
        }
        for month, texts in texts_by_month.items():
            for text in texts * 5:  # 10 reviews per month -> 30 total
                serial += 1
                reviews.append(make_review(serial, f"{month}-15", text=text))
        split = align_reviews(split, reviews)
        ledger = run_baseline(split, BACKENDS, issue_model(), corpus_review_count=30)
        # hand-computed expectation from the fixed tables above
        expected = {
            0: {"unnecessary camera access"},
            1: {"background location tracking", "unnecessary camera access"},
            2: set(),
        }
        assert {i: ledger.canonical_set(i) for i in ledger.instance_indices} == expected

    def test_zero_review_instance_is_a_valid_empty_set(self) -> None:
        split = align_reviews(candidate_split(3), [])
        ledger = run_baseline(split, BACKENDS, issue_model(), corpus_review_count=0)
        assert ledger.instance_indices == [0, 1, 2]
        assert all(ledger.canonical_set(i) == set() for i in range(3))

    def test_privacy_message_spread_keeps_instance_count_and_growth(self) -> None:
        # 63 privacy messages across 10 instances: sets exist per instance and
        # the cumulative union never shrinks
        months = []
        year, month_num = 2024, 7
        for _ in range(10):
            months.append(f"{year}-{month_num:02d}")
            month_num += 1
            if month_num > 12:
                year, month_num = year + 1, 1
        split = split_groups(
            build_release_instances(
                [make_feature(0, "2024-01")]
                + [make_feature(i + 1, months[i % 10]) for i in range(20)]
            ),
            Month.parse("2024-06"),
        )
        texts = [
            "tracking camera access problem",
            "tracking location background problem",
            "tracking excessive data collection",
        ]
        reviews = [
            make_review(serial, f"{months[serial % 10]}-10", text=texts[serial % 3])
            for serial in range(63)
        ]
        split = align_reviews(split, reviews)
        ledger = run_baseline(split, BACKENDS, issue_model(), corpus_review_count=63)
        assert len(ledger.instance_indices) == 10
        cumulative = [len(ledger.cumulative_set(i)) for i in range(10)]
        assert cumulative == sorted(cumulative)

    def test_within_instance_dedup_by_canonical_form(self) -> None:
        split = candidate_split(1)
        reviews = [
            make_review(1, "2024-07-01", text="tracking camera access!"),
            make_review(2, "2024-07-02", text="TRACKING camera ACCESS?!"),
        ]
        split = align_reviews(split, reviews)
        ledger = run_baseline(split, BACKENDS, issue_model(), corpus_review_count=2)
        assert len(ledger.per_instance[0]) == 1


def existing_pairs(split) -> list[PairRecord]:
    pool = list(split.existing_reviews)
    pairs = []
    for idx, feature in enumerate(split.existing_features()):
        review = pool[idx % len(pool)]
        pairs.append(
            PairRecord(feature.id, review.id, feature.description, review.text, 0.8, 1)
        )
    return pairs


class TestRunPredicted:
    def build(self):
        split = candidate_split(3)
        reviews = [
            make_review(i, "2024-02-10", text=f"tracking camera data review {i}") for i in range(12)
        ]
        split = align_reviews(split, reviews)
        pairs = existing_pairs(split) * 12  # clear the 10-pair training minimum
        simulator = finetune_simulator(pairs, SimulatorConfig(seed=5), TemplateGenerationBackend())
        return split, pairs, simulator

    def test_every_candidate_instance_gets_issues(self) -> None:
        split, pairs, simulator = self.build()
        annotations = [
            IssueAnnotation(
                "The camera access prompt is constant and unnecessary camera access hurts.",
                ("unnecessary camera access",),
            ),
            IssueAnnotation(
                "Background location tracking plus excessive data collection everywhere.",
                ("background location tracking", "excessive data collection"),
            ),
            IssueAnnotation(
                "Sharing usage data with advertisers means targeted ads follow me.",
                ("usage data sharing",),
            ),
            IssueAnnotation(
                "Microphone access concern while idle; contacts access concern on signup.",
                ("microphone access concern", "contacts access concern"),
            ),
            IssueAnnotation(
                "Cloud recordings concern: my recordings live in the cloud forever. "
                "Excessive personal information request at signup. Excessive permissions. "
                "Message history scanning. Browsing history collection. Personal data exposure.",
                ("cloud recordings concern", "excessive personal information request"),
            ),
        ]
        model = KeywordIssueBackend().finetune(annotations, IssueGenConfig())
        ledger = run_predicted(split, pairs, simulator, model, SimulatorConfig(seed=5))
        assert ledger.method == METHOD_PREDICTED
        assert ledger.instance_indices == [0, 1, 2]
        for i in range(3):
            assert ledger.canonical_set(i), f"instance {i} unexpectedly empty"

    def test_determinism_across_runs(self) -> None:
        split, pairs, simulator = self.build()
        model = issue_model()
        config = SimulatorConfig(seed=9)
        one = run_predicted(split, pairs, simulator, model, config)
        two = run_predicted(split, pairs, simulator, model, config)
        assert one.to_json() == two.to_json()

    def test_leakage_guard_rejects_candidate_period_pairs(self) -> None:
        split, pairs, simulator = self.build()
        poisoned = pairs + [
            PairRecord("f001", "r-candidate-era", "text", "future review", 0.9, 1)
        ]
        with pytest.raises(ValueError, match="cutoff hygiene"):
            run_predicted(split, poisoned, simulator, issue_model(), SimulatorConfig(seed=1))

    def test_provenance_scan_passes_for_existing_pool(self) -> None:
        split, pairs, _ = self.build()
        assert_existing_provenance(pairs, split)  # should not raise


class TestLedgerContainer:
    def test_indices_must_be_contiguous(self) -> None:
        with pytest.raises(ValueError, match="contiguous"):
            MethodIssueLedger(method=METHOD_BASELINE, per_instance={0: [], 2: []})

    def test_add_issue_canonicalizes_and_dedupes(self) -> None:
        ledger = MethodIssueLedger.empty(METHOD_PREDICTED, 1)
        assert ledger.add_issue(0, "The Excessive   Permissions!!", "src1")
        assert not ledger.add_issue(0, "excessive permissions", "src2")  # duplicate canonical
        assert not ledger.add_issue(0, "?!?!", "src3")  # canonicalizes to nothing
        assert ledger.canonical_set(0) == {"excessive permissions"}

    def test_json_round_trip(self, tmp_path: Path) -> None:
        ledger = MethodIssueLedger.empty(METHOD_BASELINE, 2)
        ledger.add_issue(0, "Unnecessary Camera Access", "r1")
        ledger.add_issue(1, "excessive permissions", "r2")
        path = tmp_path / "ledger.json"
        ledger.save(path)
        restored = MethodIssueLedger.load(path)
        assert restored.to_json() == ledger.to_json()
        assert restored.canonical_set(0) == {"unnecessary camera access"}

    def test_single_method_mapping_enforced(self) -> None:
        with pytest.raises(ValueError, match="exactly one method"):
            MethodIssueLedger.from_json({"a": {}, "b": {}})

    def test_both_methods_share_the_normalization_path(self) -> None:
        # symmetry of plumbing: identical raw phrases produce identical sets
        raw_phrases = ["The Data Selling concern", "  Excessive   Permissions!! "]
        baseline = MethodIssueLedger.empty(METHOD_BASELINE, 1)
        predicted = MethodIssueLedger.empty(METHOD_PREDICTED, 1)
        for phrase in raw_phrases:
            baseline.add_issue(0, phrase, "b")
            predicted.add_issue(0, phrase, "p")
        assert baseline.canonical_set(0) == predicted.canonical_set(0)
