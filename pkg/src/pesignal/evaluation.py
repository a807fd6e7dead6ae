"""Scoring of prediction tables: ROC/AUC, F1, confusion counts.

The ROC sweeps the classification threshold over every distinct score
plus sentinels below and above, classifying UP at or above the
threshold. The trapezoid area under that curve equals the rank
statistic (probability a random UP outscores a random DOWN, ties at
half), which the tests exploit as an independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DataError
from .response import Label


def scored_pairs(records) -> list:
    """(p_up, actual) for the records whose actual label exists."""
    return [(rec.p_up, rec.actual) for rec in records if rec.actual is not None]


def _trapezoid(points) -> float:
    return math.fsum(
        (x1 - x0) * (y0 + y1) / 2.0 for (x0, y0), (x1, y1) in zip(points, points[1:])
    )


@dataclass(frozen=True)
class RocCurve:
    """Threshold-sweep curve from (0,0) to (1,1), fpr non-decreasing."""

    points: tuple
    auc: float

    def __post_init__(self):
        if not self.points or self.points[0] != (0.0, 0.0) or self.points[-1] != (1.0, 1.0):
            raise ValueError("ROC must run from (0,0) to (1,1)")
        for (x0, _), (x1, _) in zip(self.points, self.points[1:]):
            if x1 < x0:
                raise ValueError("fpr must be non-decreasing along the curve")
        if abs(self.auc - _trapezoid(self.points)) > 1e-12:
            raise ValueError("auc does not match the trapezoid area of the points")


def roc(pairs) -> RocCurve:
    """ROC over (p_up, actual) pairs; both classes must appear.

    Thresholds: every distinct score, plus 0 and a value just above 1,
    descending, so the curve starts empty at (0,0) and ends all-UP at
    (1,1).
    """
    pos = [p for p, y in pairs if y is Label.UP]
    neg = [p for p, y in pairs if y is Label.DOWN]
    if not pos or not neg:
        raise DataError("AUC undefined: need at least one UP and one DOWN outcome")
    above_one = math.nextafter(1.0, 2.0)
    thresholds = sorted({0.0, above_one} | {p for p, _ in pairs}, reverse=True)
    points = []
    for theta in thresholds:
        tpr = sum(1 for p in pos if p >= theta) / len(pos)
        fpr = sum(1 for p in neg if p >= theta) / len(neg)
        if not points or points[-1] != (fpr, tpr):
            points.append((fpr, tpr))
    return RocCurve(tuple(points), _trapezoid(points))


def pooled_roc(pair_lists) -> RocCurve:
    """ROC of the concatenated raw pairs, never an average of AUCs."""
    populated = [pairs for pairs in pair_lists if pairs]
    if len(populated) < 2:
        raise DataError("pooling needs scored records from at least two sectors")
    merged = [pair for pairs in populated for pair in pairs]
    return roc(merged)


def confusion(pairs, threshold: float) -> tuple:
    """(tp, fp, tn, fn) classifying UP at p_up >= threshold."""
    tp = fp = tn = fn = 0
    for p, actual in pairs:
        predicted_up = p >= threshold
        if predicted_up and actual is Label.UP:
            tp += 1
        elif predicted_up:
            fp += 1
        elif actual is Label.DOWN:
            tn += 1
        else:
            fn += 1
    return tp, fp, tn, fn


def f1(pairs, threshold: float) -> float:
    """2PR/(P+R); 0 whenever precision or recall is undefined or both are 0."""
    tp, fp, _, fn = confusion(pairs, threshold)
    if tp + fp == 0 or tp + fn == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class ScoreReport:
    """Scored-record summary for one scope (or the pooled 'ALL').

    auc is None when only one outcome class appears; degenerate F1 and
    missing AUC are named in flags so sweeps over many sectors stay
    total.
    """

    scope_name: str
    n: int
    unscored: int
    auc: float | None
    f1: float
    precision: float | None
    recall: float | None
    tp: int
    fp: int
    tn: int
    fn: int
    flags: tuple = ()

    def __post_init__(self):
        if self.tp + self.fp + self.tn + self.fn != self.n:
            raise ValueError("confusion counts must sum to the scored count")


def report(records, threshold: float, scope_name: str | None = None) -> ScoreReport:
    """Bundle ROC, F1, and confusion for a record list; total on degenerate input."""
    if scope_name is None:
        if not records:
            raise DataError("cannot infer a scope name from no records")
        scope_name = records[0].scope.name
    pairs = scored_pairs(records)
    unscored = len(records) - len(pairs)
    tp, fp, tn, fn = confusion(pairs, threshold)
    flags = []
    try:
        auc = roc(pairs).auc if pairs else None
        if auc is None:
            flags.append("no_scored_records")
    except DataError:
        auc = None
        flags.append("single_class_auc")
    precision = tp / (tp + fp) if tp + fp > 0 else None
    recall = tp / (tp + fn) if tp + fn > 0 else None
    score = f1(pairs, threshold)
    if precision is None or recall is None or precision + recall == 0.0:
        flags.append("degenerate_f1")
    return ScoreReport(
        scope_name=scope_name,
        n=len(pairs),
        unscored=unscored,
        auc=auc,
        f1=score,
        precision=precision,
        recall=recall,
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        flags=tuple(flags),
    )


def _json_number(value) -> str:
    return "null" if value is None else f"{value:.6f}"


def score_report_json(rep: ScoreReport) -> str:
    """One JSON object per report, floats at fixed 6 decimals."""
    flags = ", ".join(f'"{flag}"' for flag in rep.flags)
    return (
        "{"
        f'"scope": "{rep.scope_name}", "n": {rep.n}, "unscored": {rep.unscored}, '
        f'"auc": {_json_number(rep.auc)}, "f1": {_json_number(rep.f1)}, '
        f'"precision": {_json_number(rep.precision)}, "recall": {_json_number(rep.recall)}, '
        f'"tp": {rep.tp}, "fp": {rep.fp}, "tn": {rep.tn}, "fn": {rep.fn}, '
        f'"flags": [{flags}]'
        "}"
    )


def write_score_reports(reports, stream):
    for rep in reports:
        stream.write(score_report_json(rep) + "\n")


def write_roc_points(curve: RocCurve, stream):
    stream.write("fpr,tpr\n")
    for fpr, tpr in curve.points:
        stream.write(f"{fpr:.6f},{tpr:.6f}\n")


def write_scatter(records, stream):
    """Per-quarter dots for plotting: prediction vs outcome."""
    stream.write("scope,quarter_end,predicted,actual,correct\n")
    for rec in records:
        actual = "NA" if rec.actual is None else rec.actual.value
        correct = "NA" if rec.correct is None else ("1" if rec.correct else "0")
        stream.write(
            f"{rec.scope.name},{rec.quarter.end_date().isoformat()},"
            f"{rec.predicted.value},{actual},{correct}\n"
        )
