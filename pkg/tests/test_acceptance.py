"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion lines.
Criterion 7 (model-runtime classifier fidelity) is informational and needs
PREREVIEW_LABELED_CORPUS plus PREREVIEW_RUN_MODEL_TESTS=1.
"""

from __future__ import annotations

import itertools
import json
import os
import random
import time
from pathlib import Path

import pytest

from prereview.classify import BackendScore, ClassificationResult, ensemble_decide
from prereview.cli import main
from prereview.evaluate import (
    IssueMatcher,
    agreement_stats,
    build_overlap_series,
    cohen_kappa,
    overlap_ratios,
    percent_agreement,
)
from prereview.mapping import HashEmbeddingBackend, cosine, map_feature

from .conftest import FIXTURES, make_feature, make_review
from .ledger_fixtures import (
    WEBEX_TABLE,
    WORD_TABLE,
    ZOOM_TABLE,
    build_ledgers_from_cumulative,
    random_ledger_pair,
)

EXACT = IssueMatcher(mode="exact")
TOLERANCE = 0.005 + 1e-12


def report(criterion: int, name: str, verdict: str = "PASS") -> None:
    print(f"[acceptance] criterion {criterion} ({name}): {verdict}")


def test_criterion_1_table_arithmetic_oracle() -> None:
    """Synthetic ledgers at the published cumulative cardinalities reproduce
    every printed ratio within +/-0.005, in under a second."""
    started = time.perf_counter()
    checked = 0
    for table in (WORD_TABLE, ZOOM_TABLE, WEBEX_TABLE):
        baseline, predicted = build_ledgers_from_cumulative(table)
        for i, (_, _, _, printed_baseline, printed_predicted) in enumerate(table):
            b_ratio, p_ratio = overlap_ratios(baseline, predicted, i, EXACT)
            assert abs(b_ratio - printed_baseline) <= TOLERANCE, (table.index, i)
            assert abs(p_ratio - printed_predicted) <= TOLERANCE
            checked += 2
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0, f"oracle took {elapsed:.3f}s"
    assert checked == 2 * (len(WORD_TABLE) + len(ZOOM_TABLE) + len(WEBEX_TABLE))
    report(1, "table arithmetic oracle")


def test_criterion_2_ensemble_truth_table() -> None:
    """All 8 label triples under both regimes (counts 15000 and 14999)."""
    cases = 0
    for labels in itertools.product([True, False], repeat=3):
        result = ClassificationResult(
            review_id="r",
            per_backend={
                slot: BackendScore(0.9 if lab else 0.1, lab)
                for slot, lab in zip("ABC", labels)
            },
        )
        ensemble = ensemble_decide(result, corpus_review_count=15_000)
        assert ensemble.regime == "ensemble"
        assert ensemble.ensemble_is_privacy is all(labels)
        single = ensemble_decide(result, corpus_review_count=14_999)
        assert single.regime == "single-backend"
        assert single.ensemble_is_privacy is labels[2]
        cases += 2
    assert cases == 16
    report(2, "ensemble truth table 16/16")


def test_criterion_3_top_k_mapping_oracle() -> None:
    """map_feature equals brute-force full-sort ranking on 200 random pools."""
    rng = random.Random(20240809)
    backend = HashEmbeddingBackend(dimension=24, seed=7)
    vocab = [f"word{i}" for i in range(40)]

    def text() -> str:
        return " ".join(rng.choice(vocab) for _ in range(rng.randint(2, 4)))

    for trial in range(200):
        pool_size = rng.randint(1, 1000)
        feature = make_feature(trial, "2024-01", description=text())
        pool = [make_review(i, "2024-01-10", text=text()) for i in range(pool_size)]
        k = rng.choice([1, 5, 10, 25])
        got = [(p.review_id, p.rank, p.similarity) for p in map_feature(feature, pool, backend, k)]
        feature_vec = backend.embed(feature.description)
        scored = sorted(
            ((cosine(feature_vec, backend.embed(r.text)), r.id) for r in pool),
            key=lambda item: (-item[0], item[1]),
        )
        expected = [(rid, rank, sim) for rank, (sim, rid) in enumerate(scored[:k], start=1)]
        assert got == expected, f"trial {trial} diverged from the brute-force oracle"
    report(3, "top-k mapping oracle, 200/200 trials")


def test_criterion_4_temporal_dominance_property() -> None:
    """On 100 random ledger pairs: predicted temporal ratio dominates the plain
    ratio everywhere, equals it at the window end, and cumulative sets grow."""
    rng = random.Random(99)
    violations = 0
    for _ in range(100):
        n_instances = rng.randint(3, 15)
        baseline, predicted = random_ledger_pair(rng, n_instances)
        series = build_overlap_series(baseline, predicted, EXACT)
        previous = None
        for row in series.rows:
            if row.predicted_temporal_ratio < row.predicted_ratio - 1e-12:
                violations += 1
            if previous is not None and not (
                previous.baseline_cum <= row.baseline_cum
                and previous.predicted_cum <= row.predicted_cum
                and previous.common_cum <= row.common_cum
            ):
                violations += 1
            previous = row
        final = series.rows[-1]
        if abs(final.predicted_temporal_ratio - final.predicted_ratio) > 1e-12:
            violations += 1
    assert violations == 0
    report(4, "temporal dominance property, zero violations")


def test_criterion_5_agreement_statistics() -> None:
    """Closed-form kappa cases to 1e-12; percent agreement vs counting oracle."""
    assert cohen_kappa([1, 0, 1, 0], [1, 0, 1, 0]) == pytest.approx(1.0, abs=1e-12)
    assert cohen_kappa([1, 1, 0, 0], [1, 0, 0, 1]) == pytest.approx(0.0, abs=1e-12)
    assert cohen_kappa([1, 1, 0, 0], [0, 0, 1, 1]) == pytest.approx(-1.0, abs=1e-12)
    rng = random.Random(5)
    for _ in range(1000):
        n = rng.randint(1, 40)
        a = [rng.randint(0, 1) for _ in range(n)]
        b = [rng.randint(0, 1) for _ in range(n)]
        matches = sum(1 for x, y in zip(a, b) if x == y)
        assert percent_agreement(a, b) == matches / n
        stats = agreement_stats(a, b)
        assert -1.0 - 1e-9 <= stats.kappa <= 1.0 + 1e-9
    report(5, "agreement statistics")


def _full_cli_run(run_dir: Path) -> float:
    commands = (
        ["ingest"],
        ["classify"],
        ["map"],
        ["train", "simulator"],
        ["train", "issue-model"],
        ["run", "--method", "both"],
        ["evaluate"],
        ["report"],
    )
    config = str(FIXTURES / "config.json")
    started = time.perf_counter()
    for command in commands:
        code = main([*command, "--config", config, "--run-dir", str(run_dir)])
        assert code == 0, f"{command} exited {code}"
    return time.perf_counter() - started


def _run_tree(run_dir: Path) -> dict[str, bytes]:
    return {
        str(path.relative_to(run_dir)): path.read_bytes()
        for path in sorted(run_dir.rglob("*"))
        if path.is_file() and path.name != "manifest.json"
    }


def test_criterion_6_end_to_end_stub_run(tmp_path: Path) -> None:
    """Two cold ingest->report runs on the bundled fixture: each under 60 s,
    byte-identical artifacts, and a non-empty predicted ledger everywhere."""
    first_dir, second_dir = tmp_path / "one", tmp_path / "two"
    first_time = _full_cli_run(first_dir)
    second_time = _full_cli_run(second_dir)
    assert first_time < 60.0 and second_time < 60.0, (first_time, second_time)
    first_tree, second_tree = _run_tree(first_dir), _run_tree(second_dir)
    assert first_tree.keys() == second_tree.keys()
    different = [rel for rel in first_tree if first_tree[rel] != second_tree[rel]]
    assert not different, f"artifacts differ across cold runs: {different}"
    ledger = json.loads((first_dir / "ledgers/predicted.json").read_text())["predicted"]
    assert len(ledger) == 4  # fixture has four candidate months
    for index, entries in ledger.items():
        assert entries, f"candidate instance {index} has an empty predicted issue set"
    assert (first_dir / "report.md").read_text().strip()
    report(6, f"end-to-end stub run ({first_time:.1f}s + {second_time:.1f}s, byte-identical)")


@pytest.mark.skipif(
    not (os.environ.get("PREREVIEW_RUN_MODEL_TESTS") and os.environ.get("PREREVIEW_LABELED_CORPUS")),
    reason="informational model-runtime check; set PREREVIEW_RUN_MODEL_TESTS=1 and "
    "PREREVIEW_LABELED_CORPUS=<labeled corpus path> to run",
)
def test_criterion_7_classifier_fidelity_informational() -> None:
    """Train the three model-runtime backends on the public labeled corpus and
    compare held-out precision against the published 0.81/0.79/0.82 within
    +/-0.10. Informational: a miss is reported, not failed."""
    from prereview.classify import TrainingRecipe, evaluate_classifier, load_labeled, train_backend
    from prereview.training import stratified_split

    labeled = load_labeled(os.environ["PREREVIEW_LABELED_CORPUS"])
    train_pool, test_set = stratified_split(labeled, [lab for _, lab in labeled], 0.2, seed=0)
    targets = {"A": 0.81, "B": 0.79, "C": 0.82}
    kinds = {"A": "encoder", "B": "encoder", "C": "sentence_head"}
    verdicts = []
    for slot, target in targets.items():
        backend = train_backend(slot, train_pool, TrainingRecipe(slot=slot, kind=kinds[slot], seed=0))
        precision = evaluate_classifier(backend, test_set).precision
        within = precision is not None and abs(precision - target) <= 0.10
        verdicts.append(f"{slot}: precision={precision} target={target} within=+-0.10 {within}")
    verdict = "PASS" if all(v.endswith("True") for v in verdicts) else "INFO-MISS"
    report(7, "classifier fidelity (informational): " + "; ".join(verdicts), verdict)
