"""Presentation helpers: percentage formatting and aligned text tables.

All numeric presentation goes through `percent`, which renders a fraction
as a percentage with exactly two decimals under half-up rounding, so
reports are stable across platforms. JSON emission keeps raw fractions;
rounding is strictly a presentation concern.
"""

from __future__ import annotations

from decimal import ROUND_HALF_UP, Decimal
from typing import Optional, Sequence

from .scorer import EvidenceReport, ScoreReport
from .tournament import BreakerRow, SystemRow

PENDING = "pending"


def percent(value: Optional[float]) -> str:
    """Fraction → percentage string with two decimals, half-up rounding."""
    if value is None:
        return PENDING
    # Stabilize the binary float *before* quantizing so values that are
    # exactly representable in decimal (0.56322 -> 56.322) round half-up on
    # their decimal form, not on binary noise.
    stabilized = Decimal(f"{value * 100:.6f}")
    return str(stabilized.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def signed_percent(value: float) -> str:
    text = percent(value)
    return text if text.startswith("-") else f"+{text}"


def format_table(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    """Left-aligned first column, right-aligned rest, two-space gutters."""
    table = [list(headers)] + [list(r) for r in rows]
    widths = [max(len(row[col]) for row in table)
              for col in range(len(headers))]
    lines = []
    for index, row in enumerate(table):
        cells = [row[0].ljust(widths[0])]
        cells += [cell.rjust(widths[col])
                  for col, cell in enumerate(row) if col > 0]
        lines.append("  ".join(cells).rstrip())
        if index == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def format_score_comparison(before: ScoreReport,
                            after: Optional[ScoreReport] = None,
                            before_evidence: Optional[EvidenceReport] = None,
                            after_evidence: Optional[EvidenceReport] = None,
                            ) -> str:
    """Metric rows with Before / After / Delta columns (After and Delta
    appear only when a second report is supplied)."""
    metrics: list[tuple[str, float, Optional[float]]] = [
        ("FEVER score (%)", before.fever_score,
         after.fever_score if after else None),
        ("Label accuracy (%)", before.label_accuracy,
         after.label_accuracy if after else None),
    ]
    if before_evidence is not None:
        metrics += [
            ("Evidence precision (%)", before_evidence.precision,
             after_evidence.precision if after_evidence else None),
            ("Evidence recall (%)", before_evidence.recall,
             after_evidence.recall if after_evidence else None),
            ("Evidence F1 (%)", before_evidence.f1,
             after_evidence.f1 if after_evidence else None),
        ]
    if after is None:
        headers = ["Metric", "Value"]
        rows = [[name, percent(b)] for name, b, _ in metrics]
        rows.append(["Instances", str(before.n)])
    else:
        headers = ["Metric", "Before", "After", "Delta"]
        rows = [[name, percent(b), percent(a), signed_percent(a - b)]
                for name, b, a in metrics if a is not None]
        rows.append(["Instances", str(before.n), str(after.n), ""])
    return format_table(headers, rows)


def format_breakdown(breakdown: dict[str, ScoreReport]) -> str:
    headers = ["Slice", "FEVER (%)", "Accuracy (%)", "N"]
    rows = [[key, percent(report.fever_score),
             percent(report.label_accuracy), str(report.n)]
            for key, report in breakdown.items()]
    return format_table(headers, rows)


def format_breaker_table(rows: Sequence[BreakerRow]) -> str:
    headers = ["Rank", "Breaker", "Potency (%)", "Accept (%)", "Adjusted (%)"]
    body = [[str(r.rank), r.breaker_id, percent(r.potency),
             percent(r.acceptance_rate), percent(r.adjusted_potency)]
            for r in rows]
    return format_table(headers, body)


def format_system_table(rows: Sequence[SystemRow]) -> str:
    headers = ["Rank", "System", "Resilience (%)"]
    body = [[str(r.rank), r.system_id, percent(r.resilience)] for r in rows]
    return format_table(headers, body)


def format_bigram_table(top: Sequence[tuple[tuple[str, str], int]]) -> str:
    headers = ["Bigram", "Count"]
    body = [[f"{a} {b}", str(count)] for (a, b), count in top]
    return format_table(headers, body)
