from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prereview.errors import CapabilityError
from prereview.evaluate import (
    IssueMatcher,
    MATCH_EXACT,
    MATCH_SEMANTIC,
    agreement_stats,
    build_overlap_series,
    cohen_kappa,
    match_common,
    overlap_ratios,
    percent_agreement,
    temporal_overlap_ratios,
)
from prereview.ledgers import METHOD_BASELINE, METHOD_PREDICTED, MethodIssueLedger

from .ledger_fixtures import (
    WORD_TABLE,
    ZOOM_TABLE,
    build_ledgers_from_cumulative,
    random_ledger_pair,
)

EXACT = IssueMatcher(mode=MATCH_EXACT)


class PlannedVectors:
    """Embedding backend mapping known phrases onto fixed 2-d directions."""

    name = "planned"
    dimension = 2

    def __init__(self, angles: dict[str, float]):
        self.angles = angles

    def embed(self, text: str) -> np.ndarray:
        angle = self.angles[text]
        return np.array([math.cos(angle), math.sin(angle)])


class TestMatchCommon:
    def test_identical_sets_fully_common(self) -> None:
        issues = {"excessive permissions", "location tracking"}
        assert match_common(issues, set(issues), EXACT) == issues

    def test_disjoint_sets_empty(self) -> None:
        assert match_common({"a b"}, {"c d"}, EXACT) == set()

    def test_semantic_match_above_threshold(self) -> None:
        # backend tuned so the pair scores cosine 0.9 >= 0.85
        backend = PlannedVectors(
            {"excessive permissions": 0.0, "excessive permission requests": math.acos(0.9)}
        )
        matcher = IssueMatcher(mode=MATCH_SEMANTIC, threshold=0.85, backend=backend)
        common = match_common(
            {"excessive permissions"}, {"excessive permission requests"}, matcher
        )
        assert common == {"excessive permissions"}

    def test_semantic_below_threshold_no_match(self) -> None:
        backend = PlannedVectors({"a b": 0.0, "c d": math.acos(0.5)})
        matcher = IssueMatcher(mode=MATCH_SEMANTIC, threshold=0.85, backend=backend)
        assert match_common({"a b"}, {"c d"}, matcher) == set()

    def test_semantic_without_backend_is_a_capability_error(self) -> None:
        matcher = IssueMatcher(mode=MATCH_SEMANTIC, threshold=0.85, backend=None)
        with pytest.raises(CapabilityError):
            match_common({"a"}, {"b"}, matcher)

    def test_exact_mode_is_an_intersection(self) -> None:
        rng = random.Random(0)
        vocab = [f"tok {i}" for i in range(30)]
        a = set(rng.sample(vocab, 12))
        b = set(rng.sample(vocab, 12))
        assert match_common(a, b, EXACT) == a & b


class TestOverlapRatios:
    def test_word_second_instance(self) -> None:
        baseline, predicted = build_ledgers_from_cumulative(WORD_TABLE)
        b_ratio, p_ratio = overlap_ratios(baseline, predicted, 1, EXACT)
        assert b_ratio == pytest.approx(6 / 14)
        assert p_ratio == pytest.approx(6 / 28)
        assert abs(b_ratio - 0.43) <= 0.005 + 1e-12
        assert abs(p_ratio - 0.21) <= 0.005 + 1e-12

    def test_zoom_first_instance(self) -> None:
        baseline, predicted = build_ledgers_from_cumulative(ZOOM_TABLE)
        b_ratio, p_ratio = overlap_ratios(baseline, predicted, 0, EXACT)
        assert b_ratio == pytest.approx(3 / 5)
        assert p_ratio == pytest.approx(3 / 33)

    def test_word_first_instance_is_zero_zero(self) -> None:
        baseline, predicted = build_ledgers_from_cumulative(WORD_TABLE)
        assert overlap_ratios(baseline, predicted, 0, EXACT) == (0.0, 0.0)

    def test_identical_ledgers_are_fully_overlapping(self) -> None:
        rng = random.Random(1)
        baseline, _ = random_ledger_pair(rng, 6)
        clone = MethodIssueLedger.from_json(
            {METHOD_PREDICTED: baseline.to_json()[METHOD_BASELINE]}
        )
        for i in range(6):
            if baseline.cumulative_set(i):
                assert overlap_ratios(baseline, clone, i, EXACT) == (1.0, 1.0)

    def test_out_of_range_instance_errors(self) -> None:
        baseline, predicted = build_ledgers_from_cumulative(ZOOM_TABLE)
        with pytest.raises(IndexError):
            overlap_ratios(baseline, predicted, 10, EXACT)

    def test_empty_sets_give_zero_not_nan(self) -> None:
        baseline = MethodIssueLedger.empty(METHOD_BASELINE, 2)
        predicted = MethodIssueLedger.empty(METHOD_PREDICTED, 2)
        assert overlap_ratios(baseline, predicted, 0, EXACT) == (0.0, 0.0)


def hand_ledgers() -> tuple[MethodIssueLedger, MethodIssueLedger]:
    baseline = MethodIssueLedger.empty(METHOD_BASELINE, 3)
    predicted = MethodIssueLedger.empty(METHOD_PREDICTED, 3)
    for i, tokens in enumerate([["alpha"], ["beta"], ["gamma", "delta"]]):
        for token in tokens:
            baseline.add_issue(i, token, f"b{i}")
    for i, tokens in enumerate([["beta", "xray"], ["alpha", "gamma"], ["yankee"]]):
        for token in tokens:
            predicted.add_issue(i, token, f"p{i}")
    return baseline, predicted


def brute_force_temporal(baseline, predicted, i, n):
    """Exhaustive set-enumeration oracle for the temporal common set."""
    b_cum = set().union(*(baseline.canonical_set(j) for j in range(i + 1)))
    p_cum = set().union(*(predicted.canonical_set(j) for j in range(i + 1)))
    future = set()
    for j in range(i + 1, n + 1):
        future |= baseline.canonical_set(j)
    return (b_cum & p_cum) | (p_cum & future), b_cum, p_cum


class TestTemporalOverlap:
    def test_hand_enumerated_three_instance_case(self) -> None:
        baseline, predicted = hand_ledgers()
        # i=0: common {} ; predicted cum {beta,xray}; future baseline {beta,gamma,delta}
        #      -> temporal set {beta}
        assert temporal_overlap_ratios(baseline, predicted, 0, 2, EXACT) == (1 / 1, 1 / 2)
        # i=1: common {alpha,beta}; confirmed {gamma} -> |T|=3 over (2, 4)
        assert temporal_overlap_ratios(baseline, predicted, 1, 2, EXACT) == (3 / 2, 3 / 4)
        # i=n: reduces to the plain overlap ratios
        assert temporal_overlap_ratios(baseline, predicted, 2, 2, EXACT) == (3 / 4, 3 / 5)

    def test_matches_brute_force_on_random_ledgers(self) -> None:
        rng = random.Random(21)
        for _ in range(30):
            n_instances = rng.randint(3, 9)
            baseline, predicted = random_ledger_pair(rng, n_instances)
            n = n_instances - 1
            for i in range(n_instances):
                temporal, b_cum, p_cum = brute_force_temporal(baseline, predicted, i, n)
                expected = (
                    len(temporal) / len(b_cum) if b_cum else 0.0,
                    len(temporal) / len(p_cum) if p_cum else 0.0,
                )
                assert temporal_overlap_ratios(baseline, predicted, i, n, EXACT) == expected

    def test_prediction_confirmed_two_instances_later_counts(self) -> None:
        baseline = MethodIssueLedger.empty(METHOD_BASELINE, 4)
        predicted = MethodIssueLedger.empty(METHOD_PREDICTED, 4)
        predicted.add_issue(0, "early warning", "p0")
        baseline.add_issue(2, "early warning", "b2")  # confirmed at i+2 <= n
        b_ratio, p_ratio = temporal_overlap_ratios(baseline, predicted, 0, 3, EXACT)
        assert p_ratio == 1.0  # the single early prediction is credited
        assert b_ratio == 0.0  # baseline had found nothing yet (0/0 -> 0)

    def test_equality_with_plain_ratio_at_the_window_end(self) -> None:
        baseline, predicted = build_ledgers_from_cumulative(ZOOM_TABLE)
        n = len(ZOOM_TABLE) - 1
        assert temporal_overlap_ratios(baseline, predicted, n, n, EXACT) == overlap_ratios(
            baseline, predicted, n, EXACT
        )

    def test_window_before_instance_errors(self) -> None:
        baseline, predicted = build_ledgers_from_cumulative(ZOOM_TABLE)
        with pytest.raises(ValueError, match="window"):
            temporal_overlap_ratios(baseline, predicted, 3, 2, EXACT)


class TestOverlapSeries:
    def test_published_word_series_round_trips(self) -> None:
        baseline, predicted = build_ledgers_from_cumulative(WORD_TABLE)
        series = build_overlap_series(baseline, predicted, EXACT)
        for row, (b, p, c, b_ratio, p_ratio) in zip(series.rows, WORD_TABLE):
            assert (row.baseline_count, row.predicted_count, row.common_count) == (b, p, c)
            assert abs(row.baseline_ratio - b_ratio) <= 0.005 + 1e-12
            assert abs(row.predicted_ratio - p_ratio) <= 0.005 + 1e-12

    def test_unique_count_identity(self) -> None:
        baseline, predicted = build_ledgers_from_cumulative(WORD_TABLE)
        series = build_overlap_series(baseline, predicted, EXACT)
        for row in series.rows:
            assert row.unique_baseline == row.baseline_count - row.common_count
            assert row.unique_predicted == row.predicted_count - row.common_count

    def test_monotone_cumulative_sets(self) -> None:
        rng = random.Random(3)
        baseline, predicted = random_ledger_pair(rng, 8)
        series = build_overlap_series(baseline, predicted, EXACT)
        for earlier, later in zip(series.rows, series.rows[1:]):
            assert earlier.baseline_cum <= later.baseline_cum
            assert earlier.predicted_cum <= later.predicted_cum
            assert earlier.common_cum <= later.common_cum

    def test_temporal_dominance_for_predicted(self) -> None:
        rng = random.Random(9)
        for _ in range(20):
            baseline, predicted = random_ledger_pair(rng, rng.randint(3, 10))
            series = build_overlap_series(baseline, predicted, EXACT)
            for row in series.rows:
                assert row.predicted_temporal_ratio >= row.predicted_ratio - 1e-12
            assert series.rows[-1].predicted_temporal_ratio == pytest.approx(
                series.rows[-1].predicted_ratio
            )

    def test_mismatched_ledger_coverage_rejected(self) -> None:
        baseline = MethodIssueLedger.empty(METHOD_BASELINE, 3)
        predicted = MethodIssueLedger.empty(METHOD_PREDICTED, 2)
        with pytest.raises(ValueError, match="different instances"):
            build_overlap_series(baseline, predicted, EXACT)

    def test_common_subset_of_both_cumulative_sets(self) -> None:
        rng = random.Random(30)
        baseline, predicted = random_ledger_pair(rng, 6)
        series = build_overlap_series(baseline, predicted, EXACT)
        for row in series.rows:
            assert row.common_cum <= row.baseline_cum
            assert row.common_cum <= row.predicted_cum
            assert row.common_cum == row.baseline_cum & row.predicted_cum  # exact mode


class TestCohenKappa:
    def test_perfect_agreement(self) -> None:
        assert cohen_kappa([1, 0, 1, 0], [1, 0, 1, 0]) == pytest.approx(1.0, abs=1e-12)

    def test_chance_level_agreement_closed_form(self) -> None:
        # p_o = 0.5, p_e = 0.5 -> kappa 0
        assert cohen_kappa([1, 1, 0, 0], [1, 0, 0, 1]) == pytest.approx(0.0, abs=1e-12)

    def test_perfect_disagreement_closed_form(self) -> None:
        # p_o = 0, p_e = 0.5 -> kappa -1
        assert cohen_kappa([1, 1, 0, 0], [0, 0, 1, 1]) == pytest.approx(-1.0, abs=1e-12)

    def test_degenerate_identical_constants_flagged_as_one(self) -> None:
        stats = agreement_stats([1, 1, 1], [1, 1, 1])
        assert stats.kappa == 1.0
        assert stats.degenerate_marginals

    def test_constant_rater_with_partial_partner(self) -> None:
        # one rater accepts everything, the other 75%: agreement 0.75, kappa 0
        a = [1] * 16
        b = [1] * 12 + [0] * 4
        stats = agreement_stats(a, b)
        assert stats.percent_agreement == pytest.approx(0.75)
        assert stats.kappa == pytest.approx(0.0, abs=1e-12)
        assert not stats.degenerate_marginals

    def test_length_mismatch_and_empty_rejected(self) -> None:
        with pytest.raises(ValueError):
            cohen_kappa([1, 0], [1])
        with pytest.raises(ValueError):
            cohen_kappa([], [])

    @settings(max_examples=150, deadline=None)
    @given(
        pairs=st.lists(
            st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=60
        )
    )
    def test_kappa_bounds_property(self, pairs: list[tuple[int, int]]) -> None:
        a = [x for x, _ in pairs]
        b = [y for _, y in pairs]
        kappa = cohen_kappa(a, b)
        assert -1.0 - 1e-9 <= kappa <= 1.0 + 1e-9


class TestPercentAgreement:
    def test_match_count_over_length(self) -> None:
        assert percent_agreement([1, 0, 1], [1, 1, 1]) == pytest.approx(2 / 3)

    def test_zero_length_rejected(self) -> None:
        with pytest.raises(ValueError, match="empty"):
            percent_agreement([], [])

    def test_random_vectors_match_counting_oracle(self) -> None:
        rng = random.Random(8)
        for _ in range(200):
            n = rng.randint(1, 50)
            a = [rng.randint(0, 1) for _ in range(n)]
            b = [rng.randint(0, 1) for _ in range(n)]
            matches = sum(1 for x, y in zip(a, b) if x == y)  # independent count
            assert percent_agreement(a, b) == matches / n
