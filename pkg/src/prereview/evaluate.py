"""Comparison metrics between the two issue ledgers: cumulative common/unique
counts, overlap ratios, temporal overlap ratios, and inter-rater agreement."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

from .errors import CapabilityError
from .ledgers import MethodIssueLedger
from .mapping import EmbeddingBackend, cosine, embed_batch

MATCH_EXACT = "exact"
MATCH_SEMANTIC = "semantic"
DEFAULT_SEMANTIC_THRESHOLD = 0.85


@dataclass(frozen=True)
class IssueMatcher:
    """Issue-equality rule used for 'common issue' counting.

    Exact mode intersects canonical strings (an equivalence relation).
    Semantic mode keeps issues of the first set with some second-set issue at
    cosine >= threshold, deduplicated to first-set representatives.
    """

    mode: str = MATCH_EXACT
    threshold: float = DEFAULT_SEMANTIC_THRESHOLD
    backend: EmbeddingBackend | None = None

    def __post_init__(self) -> None:
        if self.mode not in (MATCH_EXACT, MATCH_SEMANTIC):
            raise ValueError(f"unknown matcher mode {self.mode!r}")
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError("threshold must be in (0,1]")


def match_common(a: set[str], b: set[str], matcher: IssueMatcher) -> set[str]:
    """The common-issue set between two canonical issue sets."""
    if matcher.mode == MATCH_EXACT:
        return a & b
    if matcher.backend is None:
        raise CapabilityError("semantic matching requires an embedding backend")
    if not a or not b:
        return set()
    a_list, b_list = sorted(a), sorted(b)
    a_vecs = embed_batch(matcher.backend, a_list)
    b_vecs = embed_batch(matcher.backend, b_list)
    common = set()
    for issue, vec in zip(a_list, a_vecs):
        if vec is None:
            continue
        for other in b_vecs:
            if other is not None and cosine(vec, other) >= matcher.threshold:
                common.add(issue)
                break
    return common


def _ratio(numerator: int, denominator: int) -> float:
    """Overlap ratio with the documented 0/0 -> 0 convention."""
    return numerator / denominator if denominator else 0.0


def _check_coverage(baseline: MethodIssueLedger, predicted: MethodIssueLedger, i: int) -> None:
    for ledger in (baseline, predicted):
        if i not in ledger.per_instance:
            raise IndexError(
                f"instance {i} out of range for {ledger.method} ledger "
                f"(has {len(ledger.per_instance)} instances)"
            )


def overlap_ratios(
    baseline: MethodIssueLedger,
    predicted: MethodIssueLedger,
    i: int,
    matcher: IssueMatcher,
) -> tuple[float, float]:
    """(baseline ratio, predicted ratio) at instance i: the size of the common
    set over the cumulative unions, divided by each method's cumulative union."""
    _check_coverage(baseline, predicted, i)
    baseline_cum = baseline.cumulative_set(i)
    predicted_cum = predicted.cumulative_set(i)
    common = match_common(baseline_cum, predicted_cum, matcher)
    return _ratio(len(common), len(baseline_cum)), _ratio(len(common), len(predicted_cum))


def temporal_common_set(
    baseline: MethodIssueLedger,
    predicted: MethodIssueLedger,
    i: int,
    window: int,
    matcher: IssueMatcher,
) -> set[str]:
    """Common set extended with predicted issues confirmed by the baseline in
    later instances (i+1..window): early predictions credited once the
    baseline eventually sees them."""
    if window < i:
        raise ValueError(f"evaluation window {window} precedes instance {i}")
    _check_coverage(baseline, predicted, i)
    _check_coverage(baseline, predicted, window)
    baseline_cum = baseline.cumulative_set(i)
    predicted_cum = predicted.cumulative_set(i)
    common = match_common(baseline_cum, predicted_cum, matcher)
    future_union: set[str] = set()
    for j in range(i + 1, window + 1):
        future_union |= baseline.canonical_set(j)
    confirmed = match_common(predicted_cum, future_union, matcher)
    return common | confirmed


def temporal_overlap_ratios(
    baseline: MethodIssueLedger,
    predicted: MethodIssueLedger,
    i: int,
    window: int,
    matcher: IssueMatcher,
) -> tuple[float, float]:
    """Overlap ratios whose shared numerator also credits early predictions
    confirmed within the evaluation window. At i == window they reduce to the
    plain overlap ratios."""
    temporal = temporal_common_set(baseline, predicted, i, window, matcher)
    baseline_count = len(baseline.cumulative_set(i))
    predicted_count = len(predicted.cumulative_set(i))
    return _ratio(len(temporal), baseline_count), _ratio(len(temporal), predicted_count)


@dataclass(frozen=True)
class OverlapRow:
    """Cumulative comparison state at one candidate instance."""

    index: int
    baseline_cum: frozenset[str]
    predicted_cum: frozenset[str]
    common_cum: frozenset[str]
    temporal_common: frozenset[str]
    baseline_ratio: float
    predicted_ratio: float
    baseline_temporal_ratio: float
    predicted_temporal_ratio: float

    @property
    def baseline_count(self) -> int:
        return len(self.baseline_cum)

    @property
    def predicted_count(self) -> int:
        return len(self.predicted_cum)

    @property
    def common_count(self) -> int:
        return len(self.common_cum)

    @property
    def unique_baseline(self) -> int:
        return len(self.baseline_cum - self.common_cum)

    @property
    def unique_predicted(self) -> int:
        return len(self.predicted_cum - self.common_cum)


@dataclass(frozen=True)
class OverlapSeries:
    """Per-instance cumulative overlap rows plus the evaluation window."""

    rows: tuple[OverlapRow, ...]
    window: int
    matcher_mode: str

    def row(self, i: int) -> OverlapRow:
        return self.rows[i]


def build_overlap_series(
    baseline: MethodIssueLedger,
    predicted: MethodIssueLedger,
    matcher: IssueMatcher,
    window: int | None = None,
) -> OverlapSeries:
    """Evaluate every instance 0..window; both ledgers must cover the same
    contiguous index range."""
    if baseline.instance_indices != predicted.instance_indices:
        raise ValueError(
            f"ledgers cover different instances: {baseline.instance_indices} "
            f"vs {predicted.instance_indices}"
        )
    if not baseline.instance_indices:
        raise ValueError("ledgers are empty")
    last = baseline.instance_indices[-1]
    window = last if window is None else window
    if not 0 <= window <= last:
        raise ValueError(f"window {window} out of range 0..{last}")

    rows = []
    baseline_cum: set[str] = set()
    predicted_cum: set[str] = set()
    for i in range(window + 1):
        baseline_cum |= baseline.canonical_set(i)
        predicted_cum |= predicted.canonical_set(i)
        common = match_common(baseline_cum, predicted_cum, matcher)
        temporal = temporal_common_set(baseline, predicted, i, window, matcher)
        rows.append(
            OverlapRow(
                index=i,
                baseline_cum=frozenset(baseline_cum),
                predicted_cum=frozenset(predicted_cum),
                common_cum=frozenset(common),
                temporal_common=frozenset(temporal),
                baseline_ratio=_ratio(len(common), len(baseline_cum)),
                predicted_ratio=_ratio(len(common), len(predicted_cum)),
                baseline_temporal_ratio=_ratio(len(temporal), len(baseline_cum)),
                predicted_temporal_ratio=_ratio(len(temporal), len(predicted_cum)),
            )
        )
    return OverlapSeries(rows=tuple(rows), window=window, matcher_mode=matcher.mode)


@dataclass(frozen=True)
class AgreementStats:
    """Chance-corrected and raw agreement between two raters."""

    kappa: float
    percent_agreement: float
    degenerate_marginals: bool = False


def percent_agreement(a: Sequence[Any], b: Sequence[Any]) -> float:
    if len(a) != len(b):
        raise ValueError("vectors must have equal length")
    if not a:
        raise ValueError("vectors are empty")
    return sum(1 for x, y in zip(a, b) if x == y) / len(a)


def cohen_kappa(a: Sequence[Any], b: Sequence[Any]) -> float:
    """(p_o - p_e) / (1 - p_e) with chance agreement from the rater marginals.

    When both raters are constant and identical (p_e = 1) kappa is defined as 1.
    """
    return agreement_stats(a, b).kappa


def agreement_stats(a: Sequence[Any], b: Sequence[Any]) -> AgreementStats:
    observed = percent_agreement(a, b)
    n = len(a)
    categories = set(a) | set(b)
    expected = sum((list(a).count(c) / n) * (list(b).count(c) / n) for c in categories)
    if abs(1.0 - expected) < 1e-15:
        return AgreementStats(kappa=1.0, percent_agreement=observed, degenerate_marginals=True)
    kappa = (observed - expected) / (1.0 - expected)
    return AgreementStats(kappa=kappa, percent_agreement=observed)
