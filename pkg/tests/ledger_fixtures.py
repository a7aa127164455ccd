"""Test helpers: construct issue-ledger pairs with exact cumulative cardinalities.

`build_ledgers_from_cumulative` turns per-instance cumulative targets
(baseline count, predicted count, common count) into concrete ledgers whose
cumulative unions reproduce those numbers exactly, including the cases where
an issue enters one ledger early and the other ledger later.
"""

from __future__ import annotations

import itertools
import random

from prereview.ledgers import METHOD_BASELINE, METHOD_PREDICTED, MethodIssueLedger

# Published cumulative series used by the acceptance suite: for each app,
# rows of (baseline cumulative, predicted cumulative, common cumulative) plus
# the printed two-decimal ratios (baseline ratio, predicted ratio).
WORD_TABLE = [
    (5, 8, 0, 0.00, 0.00),
    (14, 28, 6, 0.43, 0.21),
    (27, 39, 7, 0.26, 0.18),
    (32, 40, 9, 0.28, 0.23),
    (39, 42, 11, 0.28, 0.26),
    (43, 50, 18, 0.42, 0.36),
    (46, 52, 18, 0.39, 0.35),
    (49, 53, 19, 0.39, 0.36),
    (53, 58, 24, 0.45, 0.41),
    (58, 61, 26, 0.45, 0.43),
    (63, 61, 30, 0.48, 0.49),
    (63, 61, 30, 0.48, 0.49),
]

ZOOM_TABLE = [
    (5, 33, 3, 0.60, 0.09),
    (12, 40, 7, 0.58, 0.18),
    (19, 42, 10, 0.53, 0.24),
    (23, 43, 12, 0.52, 0.28),
    (31, 48, 17, 0.55, 0.35),
    (33, 49, 18, 0.55, 0.37),
    (37, 49, 19, 0.51, 0.39),
    (40, 49, 20, 0.50, 0.41),
    (42, 49, 20, 0.48, 0.41),
    (43, 50, 20, 0.47, 0.40),
]

WEBEX_TABLE = [
    (14, 30, 9, 0.64, 0.30),
    (24, 30, 16, 0.67, 0.53),
    (30, 31, 17, 0.57, 0.55),
    (36, 31, 18, 0.50, 0.58),
    (43, 35, 20, 0.47, 0.57),
    (51, 39, 22, 0.43, 0.56),
    (54, 39, 25, 0.46, 0.64),
    (57, 39, 25, 0.44, 0.64),
    (60, 43, 26, 0.43, 0.60),
    (60, 43, 26, 0.43, 0.60),
    (60, 43, 26, 0.43, 0.60),
    (61, 43, 27, 0.44, 0.63),
    (62, 44, 28, 0.45, 0.64),
]


def build_ledgers_from_cumulative(
    rows: list[tuple[int, int, int]] | list[tuple[int, int, int, float, float]],
) -> tuple[MethodIssueLedger, MethodIssueLedger]:
    """Build (baseline, predicted) ledgers hitting the cumulative targets.

    New common issues at instance i come from three sources: brand-new tokens
    added to both sides, baseline-only tokens the predicted side picks up, and
    predicted-only tokens the baseline later confirms.
    """
    targets = [(r[0], r[1], r[2]) for r in rows]
    baseline = MethodIssueLedger.empty(METHOD_BASELINE, len(targets))
    predicted = MethodIssueLedger.empty(METHOD_PREDICTED, len(targets))
    serial = itertools.count()

    def fresh() -> str:
        return f"issue token {next(serial)}"

    baseline_only: list[str] = []
    predicted_only: list[str] = []
    prev_b = prev_p = prev_c = 0
    for i, (b, p, c) in enumerate(targets):
        delta_b, delta_p, delta_c = b - prev_b, p - prev_p, c - prev_c
        if min(delta_b, delta_p, delta_c) < 0:
            raise ValueError(f"cumulative counts must be non-decreasing (instance {i})")
        n_new = min(delta_c, delta_b, delta_p)
        leftover = delta_c - n_new
        promote_from_baseline = min(leftover, delta_p - n_new, len(baseline_only))
        promote_from_predicted = leftover - promote_from_baseline
        if promote_from_predicted > delta_b - n_new or promote_from_predicted > len(predicted_only):
            raise ValueError(f"infeasible cumulative targets at instance {i}")

        for _ in range(n_new):
            token = fresh()
            baseline.add_issue(i, token, f"b{i}")
            predicted.add_issue(i, token, f"p{i}")
        for _ in range(promote_from_baseline):
            token = baseline_only.pop(0)
            predicted.add_issue(i, token, f"p{i}")
        for _ in range(promote_from_predicted):
            token = predicted_only.pop(0)
            baseline.add_issue(i, token, f"b{i}")
        for _ in range(delta_b - n_new - promote_from_predicted):
            token = fresh()
            baseline.add_issue(i, token, f"b{i}")
            baseline_only.append(token)
        for _ in range(delta_p - n_new - promote_from_baseline):
            token = fresh()
            predicted.add_issue(i, token, f"p{i}")
            predicted_only.append(token)
        prev_b, prev_p, prev_c = b, p, c

    # self-check: the construction must reproduce every target exactly
    for i, (b, p, c) in enumerate(targets):
        b_cum = baseline.cumulative_set(i)
        p_cum = predicted.cumulative_set(i)
        assert len(b_cum) == b, f"instance {i}: baseline {len(b_cum)} != {b}"
        assert len(p_cum) == p, f"instance {i}: predicted {len(p_cum)} != {p}"
        assert len(b_cum & p_cum) == c, f"instance {i}: common {len(b_cum & p_cum)} != {c}"
    return baseline, predicted


def random_ledger_pair(
    rng: random.Random, n_instances: int, vocab_size: int = 50
) -> tuple[MethodIssueLedger, MethodIssueLedger]:
    vocab = [f"issue token {i}" for i in range(vocab_size)]
    baseline = MethodIssueLedger.empty(METHOD_BASELINE, n_instances)
    predicted = MethodIssueLedger.empty(METHOD_PREDICTED, n_instances)
    for i in range(n_instances):
        for ledger in (baseline, predicted):
            for token in rng.sample(vocab, rng.randint(0, 10)):
                ledger.add_issue(i, token, f"src-{ledger.method}-{i}")
    return baseline, predicted
