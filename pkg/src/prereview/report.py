"""Report formatting: per-app overlap tables (CSV/Markdown), temporal-ratio
plot data, JSON series, and the classifier metrics table."""

from __future__ import annotations

import csv
import io
from typing import Any, Mapping

from .classify import SLOTS, ClassifierMetrics
from .evaluate import OverlapSeries

OVERLAP_COLUMNS = (
    "Instance #",
    "Baseline issues",
    "Predicted issues",
    "Common issues",
    "Unique baseline issues",
    "Unique predicted issues",
    "Baseline overlap ratio",
    "Predicted overlap ratio",
)

METRIC_ROWS = ("Accuracy", "Precision", "Recall", "F1 score", "AUC")

_FOOTNOTE = (
    "Ratios are over cumulative issue sets; an empty denominator is reported as 0. "
    "Issue matching mode: {mode}."
)


def _two_dp(value: float) -> str:
    return f"{value:.2f}"


def overlap_table_rows(series: OverlapSeries) -> list[list[str]]:
    rows = []
    for row in series.rows:
        rows.append(
            [
                f"Instance {row.index + 1}",
                str(row.baseline_count),
                str(row.predicted_count),
                str(row.common_count),
                str(row.unique_baseline),
                str(row.unique_predicted),
                _two_dp(row.baseline_ratio),
                _two_dp(row.predicted_ratio),
            ]
        )
    return rows


def overlap_table_csv(series: OverlapSeries) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(OVERLAP_COLUMNS)
    writer.writerows(overlap_table_rows(series))
    return buffer.getvalue()


def overlap_table_markdown(series: OverlapSeries, app: str) -> str:
    lines = [
        f"## Cumulative issue overlap — {app}",
        "",
        "| " + " | ".join(OVERLAP_COLUMNS) + " |",
        "|" + "|".join(["---"] * len(OVERLAP_COLUMNS)) + "|",
    ]
    for row in overlap_table_rows(series):
        lines.append("| " + " | ".join(row) + " |")
    lines += ["", _FOOTNOTE.format(mode=series.matcher_mode), ""]
    return "\n".join(lines)


def temporal_plot_csv(series: OverlapSeries) -> str:
    """Plot data: x = instance number, y = each method's temporal overlap ratio."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["instance", "baseline_temporal_ratio", "predicted_temporal_ratio"])
    for row in series.rows:
        writer.writerow(
            [row.index + 1, repr(row.baseline_temporal_ratio), repr(row.predicted_temporal_ratio)]
        )
    return buffer.getvalue()


def series_to_json(series: OverlapSeries, app: str) -> dict[str, Any]:
    """Raw (unrounded) series values for downstream tooling."""
    return {
        "app": app,
        "matcher_mode": series.matcher_mode,
        "window": series.window,
        "instances": [
            {
                "index": row.index,
                "baseline_issues": row.baseline_count,
                "predicted_issues": row.predicted_count,
                "common_issues": row.common_count,
                "unique_baseline": row.unique_baseline,
                "unique_predicted": row.unique_predicted,
                "baseline_overlap_ratio": row.baseline_ratio,
                "predicted_overlap_ratio": row.predicted_ratio,
                "baseline_temporal_ratio": row.baseline_temporal_ratio,
                "predicted_temporal_ratio": row.predicted_temporal_ratio,
            }
            for row in series.rows
        ],
    }


def _metric_cell(value: float | None) -> str:
    return "undefined" if value is None else _two_dp(value)


def metrics_table_csv(metrics_by_slot: Mapping[str, ClassifierMetrics]) -> str:
    slots = [slot for slot in SLOTS if slot in metrics_by_slot]
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["Metrics"] + [f"Backend {slot}" for slot in slots])
    for row_name, attr in zip(METRIC_ROWS, ("accuracy", "precision", "recall", "f1", "auc")):
        writer.writerow(
            [row_name] + [_metric_cell(getattr(metrics_by_slot[slot], attr)) for slot in slots]
        )
    return buffer.getvalue()


def metrics_table_markdown(
    metrics_by_slot: Mapping[str, ClassifierMetrics], note: str | None = None
) -> str:
    slots = [slot for slot in SLOTS if slot in metrics_by_slot]
    header = ["Metrics"] + [f"Backend {slot}" for slot in slots]
    lines = [
        "## Privacy classifier performance",
        "",
        "| " + " | ".join(header) + " |",
        "|" + "|".join(["---"] * len(header)) + "|",
    ]
    for row_name, attr in zip(METRIC_ROWS, ("accuracy", "precision", "recall", "f1", "auc")):
        cells = [_metric_cell(getattr(metrics_by_slot[slot], attr)) for slot in slots]
        lines.append("| " + " | ".join([row_name] + cells) + " |")
    if note:
        lines += ["", note]
    lines.append("")
    return "\n".join(lines)


def summary_markdown(
    app: str,
    series: OverlapSeries,
    artifact_links: Mapping[str, str],
    regime_note: str,
) -> str:
    """Top-level run report linking every table and series file."""
    final = series.rows[-1]
    lines = [
        f"# Release privacy-issue forecast — {app}",
        "",
        f"Candidate instances evaluated: {len(series.rows)} (window = instance {series.window + 1}).",
        f"{regime_note}",
        "",
        "## Headline numbers (final instance)",
        "",
        f"- Baseline cumulative issues: {final.baseline_count}",
        f"- Predicted cumulative issues: {final.predicted_count}",
        f"- Common issues: {final.common_count}",
        f"- Baseline overlap ratio: {_two_dp(final.baseline_ratio)}",
        f"- Predicted overlap ratio: {_two_dp(final.predicted_ratio)}",
        "",
        "## Artifacts",
        "",
    ]
    for label, target in sorted(artifact_links.items()):
        lines.append(f"- [{label}]({target})")
    lines += ["", _FOOTNOTE.format(mode=series.matcher_mode), ""]
    return "\n".join(lines)
