"""Command-line entry point.

Four file-composable commands: synth writes synthetic input files,
features aggregates and standardizes them, backtest walks the windows
forward, evaluate scores the predictions. Configuration comes from an
optional JSON file plus flag overrides; flags win. Every run drops a
manifest beside its outputs recording the resolved configuration and
the SHA-256 of every file read or written, and a manifest is itself
accepted as --config for reruns.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import io
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .backtest import BacktestConfig, run, write_predictions, read_predictions
from .errors import DataError, InsufficientHistoryError, NumericalError, UsageError
from .evaluation import report, roc, scored_pairs, write_roc_points, write_scatter, write_score_reports
from .features import Scope, build_feature_table, read_feature_table, write_feature_table
from .ingest import (
    BROAD_INDEX_NAME,
    DealFileFormat,
    PriceFileFormat,
    SECTOR_NAMES,
    first_deals,
    parse_deals,
    parse_prices,
    write_deals,
    write_prices,
)
from .logit import fit_report_line
from .quarters import Quarter
from .response import build_labels
from .standardize import build_zscore_table, write_zscore_table
from .synthetic import SyntheticSpec, generate_dataset

log = logging.getLogger("pesignal")

_DEAL_COLUMN_KEYS = ("company_id", "company_name", "sector", "date", "aum", "rank", "investor")
_PRICE_COLUMN_KEYS = ("index_name", "date", "value")


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings for one command invocation."""

    deals: str | None = None
    prices: str | None = None
    pe: str | None = None
    out: str = "out"
    scopes: tuple = (BROAD_INDEX_NAME,)
    first: str | None = None
    last: str | None = None
    t: int = 12
    ne: int = 7
    eta: float = 1e-3
    tolerance: float = 1e-6
    max_iter: int = 100_000
    threshold: float = 0.5
    strict: bool = False
    seed: int = 1
    n_quarters: int = 68
    n_sectors: int = 3
    start: str = "2000Q1"
    noise_scale: float = 1.0
    base_deal_intensity: float = 18.0
    planted_w: tuple = (2.0, -1.5, 1.0, -1.0, 1.5)
    planted_b: float = 0.25
    delimiter: str = ","
    deal_columns: tuple = ()
    price_columns: tuple = ()

    def out_dir(self) -> Path:
        return Path(self.out)

    def deals_path(self) -> Path:
        return Path(self.deals) if self.deals else self.out_dir() / "deals.csv"

    def prices_path(self) -> Path:
        return Path(self.prices) if self.prices else self.out_dir() / "prices.csv"

    def pe_path(self) -> Path:
        return Path(self.pe) if self.pe else self.out_dir() / "pe.csv"

    def deal_format(self) -> DealFileFormat:
        return DealFileFormat(delimiter=self.delimiter, **dict(self.deal_columns))

    def price_format(self) -> PriceFileFormat:
        return PriceFileFormat(delimiter=self.delimiter, **dict(self.price_columns))

    def scope_list(self) -> list:
        scopes = []
        for name in self.scopes:
            if name != BROAD_INDEX_NAME and name not in SECTOR_NAMES:
                raise UsageError(f"unknown scope {name!r}")
            scopes.append(Scope.of_name(name))
        return scopes

    def backtest_config(self) -> BacktestConfig:
        try:
            return BacktestConfig(
                std_window=self.t,
                est_window=self.ne,
                learning_rate=self.eta,
                tolerance=self.tolerance,
                max_iter=self.max_iter,
                threshold=self.threshold,
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    def synthetic_spec(self) -> SyntheticSpec:
        try:
            return SyntheticSpec(
                seed=self.seed,
                n_quarters=self.n_quarters,
                n_sectors=self.n_sectors,
                start=Quarter.parse(self.start),
                std_window=self.t,
                planted_w=tuple(self.planted_w),
                planted_b=self.planted_b,
                noise_scale=self.noise_scale,
                base_deal_intensity=self.base_deal_intensity,
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["scopes"] = list(self.scopes)
        out["planted_w"] = list(self.planted_w)
        out["deal_columns"] = dict(self.deal_columns)
        out["price_columns"] = dict(self.price_columns)
        return out


_INT_KEYS = {"t", "ne", "max_iter", "seed", "n_quarters", "n_sectors"}
_FLOAT_KEYS = {"eta", "tolerance", "threshold", "noise_scale", "base_deal_intensity", "planted_b"}


def _coerce(key: str, value):
    try:
        if key in _INT_KEYS:
            if isinstance(value, bool) or value != int(value):
                raise ValueError
            return int(value)
        if key in _FLOAT_KEYS:
            if isinstance(value, bool):
                raise ValueError
            return float(value)
        if key == "strict":
            if not isinstance(value, bool):
                raise ValueError
            return value
        if key == "scopes":
            if isinstance(value, str):
                value = [part.strip() for part in value.split(",") if part.strip()]
            return tuple(str(v) for v in value)
        if key == "planted_w":
            return tuple(float(v) for v in value)
        if key in ("deal_columns", "price_columns"):
            wanted = _DEAL_COLUMN_KEYS if key == "deal_columns" else _PRICE_COLUMN_KEYS
            for column in value:
                if column not in wanted:
                    raise UsageError(f"unknown {key} entry {column!r}")
            return tuple(sorted((str(k), str(v)) for k, v in value.items()))
        if value is None or isinstance(value, str):
            return value
        raise ValueError
    except (TypeError, ValueError):
        raise UsageError(f"bad value for {key!r}: {value!r}") from None


def load_config_file(path) -> dict:
    """JSON settings; a run manifest unwraps to its embedded config."""
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    if "command" in data and "config" in data:
        data = data["config"]
    return data


def resolve_config(file_settings: dict, overrides: dict) -> RunConfig:
    """Defaults, then the config file, then flags; flags win."""
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    merged = {}
    for source in (file_settings, overrides):
        for key, value in source.items():
            if key not in fields:
                raise UsageError(f"unknown config key {key!r}")
            merged[key] = _coerce(key, value)
    return RunConfig(**merged)


def _slug(name: str) -> str:
    return name.lower().replace(" ", "_").replace("-", "_")


def _write_atomic(path: Path, text: str):
    tmp = path.parent / (path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _render(write, *args) -> str:
    buffer = io.StringIO()
    write(*args, buffer)
    return buffer.getvalue()


def _digest(path: Path) -> str:
    try:
        return hashlib.sha256(path.read_bytes()).hexdigest()
    except FileNotFoundError:
        raise UsageError(f"input file not found: {path}") from None


def _write_manifest(command: str, config: RunConfig, inputs, outputs):
    manifest = {
        "command": command,
        "config": config.to_dict(),
        "inputs": {str(path): _digest(Path(path)) for path in inputs},
        "outputs": {str(path): _digest(Path(path)) for path in outputs},
    }
    path = config.out_dir() / f"manifest_{command}.json"
    _write_atomic(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _series_for(series_map: dict, name: str, path: Path):
    if name not in series_map:
        raise DataError(f"{path} has no series named {name!r}")
    return series_map[name]


def cmd_synth(config: RunConfig) -> int:
    spec = config.synthetic_spec()
    data = generate_dataset(spec)
    config = dataclasses.replace(
        config,
        scopes=tuple(s.name for s in spec.scopes()),
        deals=str(config.deals_path()),
        prices=str(config.prices_path()),
        pe=str(config.pe_path()),
    )
    out = config.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    targets = {
        config.deals_path(): _render(write_deals, data.deals),
        config.prices_path(): _render(write_prices, data.prices),
        config.pe_path(): _render(write_prices, data.pe),
    }
    for path, text in targets.items():
        path.parent.mkdir(parents=True, exist_ok=True)
        _write_atomic(path, text)
    log.info("synth: %d deals, %d scopes, %d quarters", len(data.deals), len(spec.scopes()), spec.n_quarters)
    _write_manifest("synth", config, [], list(targets))
    return 0


def _open_input(path: Path):
    try:
        return open(path, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise UsageError(f"input file not found: {path}") from None


def cmd_features(config: RunConfig) -> int:
    deals_path = config.deals_path()
    pe_path = config.pe_path()
    with _open_input(deals_path) as handle:
        parsed = parse_deals(handle, config.deal_format(), strict=config.strict)
    for issue in parsed.issues:
        log.warning("%s %s", deals_path, issue)
    records = first_deals(parsed.records)
    with _open_input(pe_path) as handle:
        pe_map = parse_prices(handle, config.price_format())
    market_pe = _series_for(pe_map, BROAD_INDEX_NAME, pe_path)
    first = Quarter.parse(config.first) if config.first else market_pe.start
    last = Quarter.parse(config.last) if config.last else market_pe.end
    out = config.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    for scope in config.scope_list():
        sector_pe = None if scope.is_broad else _series_for(pe_map, scope.name, pe_path)
        rows = build_feature_table(records, scope, first, last, market_pe, sector_pe)
        table = build_zscore_table(rows, config.t)
        if table.dropped:
            log.warning("%s: %d quarters dropped for missing features", scope.name, len(table.dropped))
        if table.zero_variance:
            log.warning("%s: %d zero-variance windows pinned to z=0", scope.name, len(table.zero_variance))
        feature_path = out / f"features_{_slug(scope.name)}.csv"
        z_path = out / f"zscores_{_slug(scope.name)}.csv"
        _write_atomic(feature_path, _render(write_feature_table, rows))
        _write_atomic(z_path, _render(write_zscore_table, table))
        outputs += [feature_path, z_path]
    _write_manifest("features", config, [deals_path, pe_path], outputs)
    return 0


def cmd_backtest(config: RunConfig) -> int:
    prices_path = config.prices_path()
    with _open_input(prices_path) as handle:
        price_map = parse_prices(handle, config.price_format())
    market_prices = _series_for(price_map, BROAD_INDEX_NAME, prices_path)
    out = config.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    bt_config = config.backtest_config()
    inputs = [prices_path]
    outputs = []
    for scope in config.scope_list():
        feature_path = out / f"features_{_slug(scope.name)}.csv"
        with _open_input(feature_path) as handle:
            rows = read_feature_table(handle)
        inputs.append(feature_path)
        sector_prices = None if scope.is_broad else _series_for(price_map, scope.name, prices_path)
        labels = build_labels(scope, market_prices, sector_prices)
        result = run(rows, labels, bt_config)
        for skip in result.skipped:
            log.warning("%s %s: skipped, %s", scope.name, skip.predicted, skip.reason)
        for record in result.records:
            log.info("%s %s %s", scope.name, record.quarter, fit_report_line(record.fit))
        prediction_path = out / f"predictions_{_slug(scope.name)}.csv"
        _write_atomic(prediction_path, _render(write_predictions, result.records))
        outputs.append(prediction_path)
    _write_manifest("backtest", config, inputs, outputs)
    return 0


def cmd_evaluate(config: RunConfig) -> int:
    out = config.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    inputs = []
    outputs = []
    reports = []
    pooled_records = []
    per_scope = []
    for scope in config.scope_list():
        prediction_path = out / f"predictions_{_slug(scope.name)}.csv"
        with _open_input(prediction_path) as handle:
            records = read_predictions(handle)
        inputs.append(prediction_path)
        per_scope.append((scope.name, records))
        pooled_records.extend(records)
    if len(per_scope) > 1:
        per_scope.append(("ALL", pooled_records))
    for name, records in per_scope:
        scope_report = report(records, config.threshold, scope_name=name)
        reports.append(scope_report)
        for flag in scope_report.flags:
            log.warning("%s: %s", name, flag)
        try:
            curve = roc(scored_pairs(records))
        except DataError as exc:
            log.warning("%s: no ROC curve, %s", name, exc)
        else:
            roc_path = out / f"roc_{_slug(name)}.csv"
            _write_atomic(roc_path, _render(write_roc_points, curve))
            outputs.append(roc_path)
        if name != "ALL":
            scatter_path = out / f"scatter_{_slug(name)}.csv"
            _write_atomic(scatter_path, _render(write_scatter, records))
            outputs.append(scatter_path)
    scores_path = out / "scores.jsonl"
    _write_atomic(scores_path, _render(write_score_reports, reports))
    outputs.append(scores_path)
    _write_manifest("evaluate", config, inputs, outputs)
    return 0


_COMMANDS = {
    "synth": cmd_synth,
    "features": cmd_features,
    "backtest": cmd_backtest,
    "evaluate": cmd_evaluate,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON settings file or a previous run manifest")
    common.add_argument("--out", metavar="DIR", help="output directory (default: out)")
    common.add_argument("--strict", action="store_true", default=None, help="promote row-level deal issues to errors")
    common.add_argument("--seed", type=int, metavar="N", help="synthetic data seed")
    common.add_argument("--scopes", metavar="LIST", help="comma-separated scope names (Market or sector names)")
    common.add_argument("--t", type=int, metavar="N", help="standardization window in quarters")
    common.add_argument("--ne", type=int, metavar="N", help="estimation window in quarters")
    common.add_argument("--eta", type=float, metavar="X", help="gradient ascent learning rate")
    common.add_argument("--threshold", type=float, metavar="X", help="classification threshold on P(UP)")
    parser = _Parser(prog="pesignal", description=__doc__)
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, help_text in (
        ("synth", "write synthetic deal, price, and P/E files"),
        ("features", "aggregate deals into feature and z-score tables"),
        ("backtest", "walk windows forward and write prediction tables"),
        ("evaluate", "score predictions: reports, ROC points, scatters"),
    ):
        subparsers.add_parser(name, parents=[common], help=help_text)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    try:
        args = _build_parser().parse_args(argv)
        file_settings = load_config_file(args.config) if args.config else {}
        overrides = {
            key: value
            for key, value in vars(args).items()
            if key not in ("command", "config") and value is not None
        }
        config = resolve_config(file_settings, overrides)
        return _COMMANDS[args.command](config)
    except UsageError as exc:
        print(f"pesignal: usage error: {exc}", file=sys.stderr)
        return 1
    except InsufficientHistoryError as exc:
        print(f"pesignal: insufficient history: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"pesignal: data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"pesignal: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
