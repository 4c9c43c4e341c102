"""Learning-curve aggregation, percent-of-full reporting, and tables.

A LearningCurve holds one MetricsRecord per annotation budget plus the
full-set budget. Reporting derives percent-of-full columns, detects the
first budget whose score reaches a fraction of the full-set score, and
renders comparison tables for selection strategies.

Threshold comparisons always use unrounded scores. Only display values
are rounded: scores to 4 decimals and percents to 2, half-up, applied to
the shortest decimal rendering of the float. All renderings are
deterministic, so identical inputs produce byte-identical text.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Mapping, NamedTuple, Sequence

from .coreset import EmbeddingMatrix, SelectionManifest
from .errors import InternalError, ReportError
from .instance_metrics import MetricsRecord

METRIC_NAMES = ("f1", "accuracy", "pq", "precision", "recall")

_STRATEGY_ROWS = (
    ("coreset", True),
    ("coreset", False),
    ("random", True),
    ("random", False),
)


class CurveRow(NamedTuple):
    budget: int
    fraction: float
    record: MetricsRecord


class PercentEntry(NamedTuple):
    budget: int
    score: float
    percent: float


@dataclass(frozen=True)
class LearningCurve:
    """Per-budget metric records, strictly increasing in budget.

    Attributes:
        rows: (budget, fraction, record) rows; fraction = budget /
            full_budget.
        full_budget: The budget treated as the full annotation set;
            exactly one row carries it.
    """

    rows: tuple[CurveRow, ...]
    full_budget: int

    def full_record(self) -> MetricsRecord:
        for row in self.rows:
            if row.budget == self.full_budget:
                return row.record
        raise InternalError("curve lost its full-budget row")


def round_half_up(x: float, places: int) -> float:
    """Round x half-up at the given decimal place.

    Applied to the shortest decimal rendering of x, so 92.655 rounds to
    92.66 even though its binary value sits a hair below the midpoint.
    """
    quantum = Decimal(1).scaleb(-places)
    return float(Decimal(repr(float(x))).quantize(quantum, rounding=ROUND_HALF_UP))


def format_score(x: float) -> str:
    """Render a score with 4 decimals, half-up."""
    return f"{round_half_up(x, 4):.4f}"


def format_percent(x: float) -> str:
    """Render a percentage with 2 decimals, half-up."""
    return f"{round_half_up(x, 2):.2f}"


def build_curve(
    records: Mapping[int, MetricsRecord], full_budget: int | None = None
) -> LearningCurve:
    """Assemble a LearningCurve from per-budget records.

    Args:
        records: Mapping from budget to its MetricsRecord.
        full_budget: Budget of the full annotation set; defaults to the
            largest budget present.

    Raises:
        ReportError: On an empty mapping, a negative budget, or a
            full_budget without a record.
    """
    if not records:
        raise ReportError("a learning curve needs at least one record")
    budgets = sorted(records)
    if budgets[0] < 0:
        raise ReportError(f"budgets must be non-negative, got {budgets[0]}")
    if full_budget is None:
        full_budget = budgets[-1]
    if full_budget not in records:
        raise ReportError(f"no record for full budget {full_budget}")
    if full_budget <= 0:
        raise ReportError(f"full budget must be positive, got {full_budget}")
    rows = tuple(
        CurveRow(budget=b, fraction=b / full_budget, record=records[b]) for b in budgets
    )
    return LearningCurve(rows=rows, full_budget=full_budget)


def _metric_value(record: MetricsRecord, metric: str) -> float:
    if metric not in METRIC_NAMES:
        raise ReportError(f"unknown metric {metric!r}, expected one of {METRIC_NAMES}")
    return float(getattr(record, metric))


def percent_of_full(curve: LearningCurve, metric: str) -> list[PercentEntry]:
    """Express one metric as a percentage of its full-set score.

    Args:
        curve: The learning curve.
        metric: One of f1, accuracy, pq, precision, recall.

    Returns:
        One PercentEntry per budget. The score field stays unrounded; the
        percent field is the display value, 100 * score / full_score
        rounded half-up to 2 decimals.

    Raises:
        ReportError: On an unknown metric or a zero full-set score.
    """
    full_score = _metric_value(curve.full_record(), metric)
    if full_score == 0.0:
        raise ReportError(f"full-set score for {metric!r} is zero; percents undefined")
    out = []
    for row in curve.rows:
        score = _metric_value(row.record, metric)
        out.append(
            PercentEntry(
                budget=row.budget,
                score=score,
                percent=round_half_up(100.0 * score / full_score, 2),
            )
        )
    return out


def first_surpass(curve: LearningCurve, metric: str, fraction: float) -> int:
    """Return the smallest budget whose score reaches fraction * full score.

    The comparison uses unrounded scores. The full-budget row always
    qualifies for fraction <= 1, so a budget is always returned.

    Args:
        curve: The learning curve.
        metric: One of f1, accuracy, pq, precision, recall.
        fraction: Target fraction of the full-set score, in (0, 1].

    Raises:
        ReportError: On an unknown metric or fraction outside (0, 1].
    """
    if not 0.0 < fraction <= 1.0:
        raise ReportError(f"fraction must lie in (0, 1], got {fraction}")
    full_score = _metric_value(curve.full_record(), metric)
    target = fraction * full_score
    for row in curve.rows:
        if _metric_value(row.record, metric) >= target:
            return row.budget
    raise InternalError("full-budget row failed to reach its own score")


def _render_aligned(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    table = [list(header)] + [list(r) for r in rows]
    widths = [max(len(row[c]) for row in table) for c in range(len(header))]
    lines = []
    for row in table:
        lines.append("  ".join(cell.rjust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def comparison_table(records: Mapping[tuple[str, bool], MetricsRecord]) -> str:
    """Render the strategy comparison table.

    Rows appear in the fixed order coreset w/, coreset w/o, random w/,
    random w/o (w/ marks a pre-trained downstream model); columns are f1,
    accuracy, pq, precision. Missing cells render as "-", and row order
    is independent of insertion order.

    Args:
        records: Mapping from (strategy, pretrained) to its record.

    Raises:
        ReportError: On an empty mapping or an unknown strategy name.
    """
    if not records:
        raise ReportError("comparison_table requires at least one record")
    for strategy, _ in records:
        if strategy not in ("coreset", "random"):
            raise ReportError(f"unknown strategy {strategy!r}")
    header = ["selection", "pretrained", "f1", "accuracy", "pq", "precision"]
    rows = []
    for strategy, pretrained in _STRATEGY_ROWS:
        record = records.get((strategy, pretrained))
        cells = [strategy, "w/" if pretrained else "w/o"]
        if record is None:
            cells.extend(["-"] * 4)
        else:
            cells.extend(
                format_score(_metric_value(record, m))
                for m in ("f1", "accuracy", "pq", "precision")
            )
        rows.append(cells)
    return _render_aligned(header, rows)


def render_curve_table(curve: LearningCurve, metrics: Sequence[str] = METRIC_NAMES) -> str:
    """Render the per-budget score and percent table as aligned text."""
    percents = {m: percent_of_full(curve, m) for m in metrics}
    header = ["budget", "fraction%"]
    for m in metrics:
        header.extend([m, f"{m}%"])
    rows = []
    for i, row in enumerate(curve.rows):
        cells = [str(row.budget), format_percent(100.0 * row.fraction)]
        for m in metrics:
            entry = percents[m][i]
            cells.extend([format_score(entry.score), format_percent(entry.percent)])
        rows.append(cells)
    return _render_aligned(header, rows)


def percent_csv(curve: LearningCurve, metrics: Sequence[str] = METRIC_NAMES) -> str:
    """Render the long-form percent table as CSV.

    Columns: metric, budget, score (unrounded repr), percent (2-decimal
    display string).
    """
    lines = ["metric,budget,score,percent"]
    for m in metrics:
        for entry in percent_of_full(curve, m):
            lines.append(f"{m},{entry.budget},{entry.score!r},{format_percent(entry.percent)}")
    return "\n".join(lines) + "\n"


def surpass_summary(
    curve: LearningCurve, fraction: float, metrics: Sequence[str] = METRIC_NAMES
) -> str:
    """Render one first-surpass line per metric."""
    lines = [
        f"metric={m} fraction={fraction!r} budget={first_surpass(curve, m, fraction)}"
        for m in metrics
    ]
    return "\n".join(lines) + "\n"


def selection_export_csv(E: EmbeddingMatrix, manifest: SelectionManifest) -> str:
    """Render embedding rows with selection flags for external plotting.

    Columns: id, selected (1 when the id is in the manifest), dim_0 ..
    dim_{D-1} with unrounded repr values.

    Raises:
        ReportError: If the manifest selects ids absent from E.
    """
    chosen = set(manifest.selected)
    unknown = chosen - set(E.ids)
    if unknown:
        raise ReportError(f"manifest selects unknown id {sorted(unknown)[0]!r}")
    dim = E.values.shape[1]
    lines = ["id,selected," + ",".join(f"dim_{i}" for i in range(dim))]
    for i, item in enumerate(E.ids):
        flag = "1" if item in chosen else "0"
        coords = ",".join(repr(float(v)) for v in E.values[i])
        lines.append(f"{item},{flag},{coords}")
    return "\n".join(lines) + "\n"
