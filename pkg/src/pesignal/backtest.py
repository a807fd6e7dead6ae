"""Walk-forward orchestration: standardize, estimate, predict one ahead.

Quarters are identified by their end dates. The prediction for quarter
q is issued with information available at the end of q: the trailing
z-scores through q and the estimation labels y(t), t <= q-1, whose
forward returns settle by the end of q. Each window re-estimates from
zero; windows share no state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DataError, InsufficientHistoryError, NumericalError
from .features import Scope
from .logit import FitConfig, FitReport, LogitParams, TrainingSample, classify, fit, prob_up
from .quarters import Quarter, quarter_count, quarter_range
from .response import Label
from .standardize import build_zscore_table


@dataclass(frozen=True)
class BacktestConfig:
    std_window: int = 12
    est_window: int = 7
    learning_rate: float = 1e-3
    tolerance: float = 1e-6
    max_iter: int = 100_000
    threshold: float = 0.5

    def __post_init__(self):
        if self.std_window < 2:
            raise ValueError("std_window must be at least 2 quarters")
        if self.est_window < 2:
            raise ValueError("est_window must be at least 2 quarters")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        self.fit_config()

    def fit_config(self) -> FitConfig:
        return FitConfig(
            learning_rate=self.learning_rate,
            tolerance=self.tolerance,
            max_iter=self.max_iter,
        )

    def min_quarters(self) -> int:
        return self.std_window + self.est_window


@dataclass(frozen=True)
class ScheduleEntry:
    """One slide: estimate on [window_start, window_end], predict the next."""

    window_start: Quarter
    window_end: Quarter
    predicted: Quarter

    def window(self) -> list:
        return quarter_range(self.window_start, self.window_end)


def schedule(first: Quarter, last: Quarter, std_window: int, est_window: int) -> list:
    """All one-ahead slides over the feature range [first, last].

    The first std_window - 1 quarters only feed standardization, the
    next est_window feed the first estimation window, and the quarter
    after that is the first predicted one. The count works out to
    quarter_count - std_window - est_window + 1.
    """
    if std_window < 2 or est_window < 2:
        raise ValueError("std_window and est_window must both be at least 2")
    n = quarter_count(first, last)
    needed = std_window + est_window
    if n < needed:
        raise InsufficientHistoryError(
            f"walk-forward needs at least {needed} quarters"
            f" ({std_window} to standardize, {est_window} to estimate,"
            f" predicting the one after), got {n}"
        )
    entries = []
    for k in range(n - needed + 1):
        window_start = first + (std_window - 1 + k)
        window_end = window_start + (est_window - 1)
        entries.append(ScheduleEntry(window_start, window_end, window_end + 1))
    return entries


@dataclass(frozen=True)
class PredictionRecord:
    """One out-of-sample prediction.

    actual is None when the trailing price needed to score the quarter
    does not exist. params and fit are None on records read back from
    disk.
    """

    scope: Scope
    quarter: Quarter
    p_up: float
    predicted: Label
    actual: Label | None
    params: LogitParams | None = None
    fit: FitReport | None = None

    def __post_init__(self):
        if not (math.isfinite(self.p_up) and 0.0 <= self.p_up <= 1.0):
            raise ValueError(f"p_up must lie in [0, 1], got {self.p_up!r}")

    @property
    def correct(self) -> bool | None:
        return None if self.actual is None else self.predicted is self.actual


@dataclass(frozen=True)
class SkippedWindow:
    predicted: Quarter
    reason: str


@dataclass(frozen=True)
class BacktestResult:
    scope: Scope
    records: tuple
    skipped: tuple


def run(feature_rows, labels, config: BacktestConfig = BacktestConfig()) -> BacktestResult:
    """Walk the schedule over a single-scope feature table.

    labels are ResponseLabels for the same scope; estimation windows
    missing a z row or a label are skipped with a diagnostic, never
    imputed. The predicted quarter's own label may be absent, which
    leaves that record unscored.
    """
    if not feature_rows:
        raise DataError("empty feature table")
    scope = feature_rows[0].scope
    for lab in labels:
        if lab.scope != scope:
            raise DataError(f"label scope {lab.scope.name} does not match {scope.name}")
    table = build_zscore_table(feature_rows, config.std_window)
    z_by_quarter = {row.quarter: row for row in table.rows}
    y_by_quarter = {lab.quarter: lab.y for lab in labels}
    entries = schedule(
        feature_rows[0].quarter, feature_rows[-1].quarter, config.std_window, config.est_window
    )
    fit_config = config.fit_config()
    records = []
    skipped = []

    def skip(entry, reason):
        skipped.append(SkippedWindow(entry.predicted, reason))

    for entry in entries:
        z_pred = z_by_quarter.get(entry.predicted)
        if z_pred is None:
            skip(entry, f"no z-score row at predicted quarter {entry.predicted}")
            continue
        samples = []
        problem = None
        for t in entry.window():
            z_row = z_by_quarter.get(t)
            if z_row is None:
                problem = f"no z-score row at {t} inside the estimation window"
                break
            y = y_by_quarter.get(t)
            if y is None:
                problem = f"no label at {t} inside the estimation window"
                break
            samples.append((z_row.z, y))
        if problem is not None:
            skip(entry, problem)
            continue
        training = [TrainingSample(z, y) for z, y in samples]
        try:
            report = fit(training, fit_config)
        except NumericalError as exc:
            skip(entry, f"estimation failed: {exc}")
            continue
        p = prob_up(z_pred.z, report.params)
        records.append(
            PredictionRecord(
                scope=scope,
                quarter=entry.predicted,
                p_up=p,
                predicted=classify(p, config.threshold),
                actual=y_by_quarter.get(entry.predicted),
                params=report.params,
                fit=report,
            )
        )
    return BacktestResult(scope, tuple(records), tuple(skipped))


def write_predictions(records, stream):
    """Prediction table: 6-decimal p_up, NA for unscored actual/correct."""
    stream.write("scope,quarter_end,p_up,predicted,actual,correct\n")
    for rec in records:
        actual = "NA" if rec.actual is None else rec.actual.value
        correct = "NA" if rec.correct is None else ("1" if rec.correct else "0")
        stream.write(
            f"{rec.scope.name},{rec.quarter.end_date().isoformat()},"
            f"{rec.p_up:.6f},{rec.predicted.value},{actual},{correct}\n"
        )


def read_predictions(stream) -> list:
    """Parse a prediction table back; params and fit come back as None."""
    header = stream.readline().rstrip("\n")
    expected = "scope,quarter_end,p_up,predicted,actual,correct"
    if header != expected:
        raise DataError(f"unexpected prediction table header: {header!r}")
    records = []
    for line_no, line in enumerate(stream, start=2):
        line = line.rstrip("\n")
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise DataError(f"prediction table line {line_no}: expected 6 columns")
        scope_name, quarter_end, p_up, predicted, actual, _ = parts
        try:
            records.append(
                PredictionRecord(
                    scope=Scope.of_name(scope_name),
                    quarter=Quarter.parse(quarter_end),
                    p_up=float(p_up),
                    predicted=Label(predicted),
                    actual=None if actual == "NA" else Label(actual),
                )
            )
        except ValueError as exc:
            raise DataError(f"prediction table line {line_no}: {exc}") from None
    return records
