"""Report emission: everything here is recomputable from the journal.

Percentages are formatted with round-half-even at two decimals using
integer arithmetic only, so reports are bit-stable across platforms.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .difficulty import DifficultyConfig, average_score, CapabilityState, fold
from .interview import RunResult
from .records import BatchDossier, DifficultyLevel
from .validation import ValidationReport


def format_percent(value: Fraction) -> str:
    """100*value rendered to two decimals with round-half-even."""
    scaled = value * 10_000  # hundredths of a percent
    whole, remainder = divmod(scaled.numerator, scaled.denominator)
    doubled = 2 * remainder
    if doubled > scaled.denominator or (doubled == scaled.denominator and whole % 2 == 1):
        whole += 1
    sign = "-" if whole < 0 else ""
    whole = abs(whole)
    return f"{sign}{whole // 100}.{whole % 100:02d}"


def format_fraction(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


def difficulty_histogram(
    dossiers: Sequence[BatchDossier],
) -> dict[int, dict[DifficultyLevel, int]]:
    """Asked-difficulty counts per round; round 0 is the grading stage."""
    histogram: dict[int, dict[DifficultyLevel, int]] = {}
    for dossier in dossiers:
        for record in dossier.all_records():
            per_level = histogram.setdefault(
                record.round, {level: 0 for level in DifficultyLevel}
            )
            per_level[record.asked_difficulty] += 1
    return histogram


def per_round_series(
    dossiers: Sequence[BatchDossier], config: DifficultyConfig
) -> list[dict]:
    """Per-round answer counts, correct rate, and mean running score.

    This is the data series behind round-count analyses; plotting is out
    of scope.
    """
    rounds = sorted({r.round for d in dossiers for r in d.all_records()})
    series = []
    for round_no in rounds:
        asked = 0
        correct = 0
        running_averages: list[Fraction] = []
        for dossier in dossiers:
            records = [r for r in dossier.all_records() if r.round <= round_no]
            in_round = [r for r in records if r.round == round_no]
            if not in_round:
                continue
            asked += len(in_round)
            correct += sum(1 for r in in_round if r.correct)
            state = CapabilityState()
            for record in sorted(records, key=lambda r: (r.round, r.question.id)):
                state = fold(state, record, config)
            running_averages.append(average_score(state, config))
        mean_avg = (
            sum(running_averages, start=Fraction(0)) / len(running_averages)
            if running_averages
            else Fraction(0)
        )
        series.append(
            {
                "round": round_no,
                "asked": asked,
                "correct": correct,
                "correct_rate": format_fraction(Fraction(correct, asked)) if asked else "0/1",
                "mean_avg_score": format_fraction(mean_avg),
            }
        )
    return series


def emit_report(
    run_result: RunResult,
    config: DifficultyConfig,
    validation_report: ValidationReport | None = None,
) -> str:
    """Human-readable markdown report for a completed run."""
    lines: list[str] = []
    lines.append("# Evaluation run report")
    lines.append("")
    lines.append("## Summary")
    lines.append("")
    sc = run_result.global_score
    lines.append(f"- Global score: {format_fraction(sc)} ({float(sc):.4f})")
    lines.append(f"- Questions graded: {run_result.totals.grading}")
    lines.append(f"- Extension questions asked: {run_result.totals.extension}")
    lines.append(f"- Batches: {len(run_result.dossiers)}")
    lines.append("")

    lines.append("## Per-batch score trajectory")
    lines.append("")
    lines.append("| batch | seed correct | extension correct | final avg score |")
    lines.append("|---|---|---|---|")
    for dossier in run_result.dossiers:
        seed_ok = sum(1 for r in dossier.seed_records if r.correct)
        ext_ok = sum(1 for r in dossier.extension_records if r.correct)
        lines.append(
            f"| {dossier.batch_id} | {seed_ok}/{len(dossier.seed_records)} "
            f"| {ext_ok}/{len(dossier.extension_records)} "
            f"| {format_fraction(dossier.final_avg_score)} |"
        )
    lines.append("")

    lines.append("## Difficulty histogram per round")
    lines.append("")
    lines.append("| round | easy | medium | hard |")
    lines.append("|---|---|---|---|")
    histogram = difficulty_histogram(run_result.dossiers)
    for round_no in sorted(histogram):
        counts = histogram[round_no]
        lines.append(
            f"| {round_no} | {counts[DifficultyLevel.EASY]} "
            f"| {counts[DifficultyLevel.MEDIUM]} | {counts[DifficultyLevel.HARD]} |"
        )
    lines.append("")

    lines.append("## Per-round series")
    lines.append("")
    lines.append("| round | asked | correct | correct rate | mean avg score |")
    lines.append("|---|---|---|---|---|")
    for row in per_round_series(run_result.dossiers, config):
        lines.append(
            f"| {row['round']} | {row['asked']} | {row['correct']} "
            f"| {row['correct_rate']} | {row['mean_avg_score']} |"
        )
    lines.append("")

    if validation_report is not None:
        lines.append("## Suggestion validation")
        lines.append("")
        lines.append("| ACC1 | ACC2 | CR | CtE |")
        lines.append("|---|---|---|---|")
        lines.append(
            f"| {format_percent(validation_report.acc1)} "
            f"| {format_percent(validation_report.acc2)} "
            f"| {format_percent(validation_report.cr)} "
            f"| {format_percent(validation_report.cte)} |"
        )
        lines.append("")
        lines.append(f"Questions validated: {validation_report.n_total}")
        lines.append("")
    return "\n".join(lines)


def validation_row(report: ValidationReport) -> str:
    """The four metrics as printed percentages, space separated."""
    return " ".join(
        format_percent(v) for v in (report.acc1, report.acc2, report.cr, report.cte)
    )
