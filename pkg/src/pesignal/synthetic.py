"""Desk-scale synthetic data with a planted logit relationship.

Deals are drawn per sector from smooth positive intensity/level paths
(optionally roughened by autocorrelated noise), then aggregated by the
real feature pipeline, so generated tables and ingested tables agree by
construction. Labels are drawn from the planted law on standardized
features, and prices are synthesized backward from the drawn labels so
the response module reproduces them exactly.

All randomness flows from counter-based streams keyed (seed, purpose,
scope), so regenerating fewer sectors or fewer quarters yields a prefix
of the larger dataset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import timedelta
from pathlib import Path

import numpy as np

from .features import BROAD_SCOPE, Scope, build_feature_table
from .ingest import AumBucket, DealRecord, SECTOR_NAMES, write_deals, write_prices
from .logit import LogitParams, TrainingSample, prob_up
from .quarters import Quarter, QuarterlySeries
from .response import Label, build_labels
from .standardize import ZScoreTable, build_zscore_table

# stream purposes; the broad market uses index _BROAD_STREAM
_P_INTENSITY = 1
_P_AUM = 2
_P_PE = 3
_P_DEALS = 4
_P_LABELS = 5
_P_SAMPLES = 6
_P_COUNTS = 7
_BROAD_STREAM = 0xFFFFFFFF


def _stream(seed: int, purpose: int, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed, (purpose << 32) | index]))


@dataclass(frozen=True)
class SyntheticSpec:
    seed: int = 1
    n_quarters: int = 68
    n_sectors: int = 3
    start: Quarter = Quarter(2000, 1)
    std_window: int = 12
    planted_w: tuple = (2.0, -1.5, 1.0, -1.0, 1.5)
    planted_b: float = 0.25
    noise_scale: float = 1.0
    base_deal_intensity: float = 18.0

    def __post_init__(self):
        if self.seed < 0:
            raise ValueError("seed must be >= 0")
        if self.std_window < 2:
            raise ValueError("std_window must be at least 2")
        if self.n_quarters < self.std_window + 2:
            raise ValueError(
                f"need at least std_window + 2 = {self.std_window + 2} quarters"
            )
        if not 1 <= self.n_sectors <= len(SECTOR_NAMES):
            raise ValueError(f"n_sectors must lie in 1..{len(SECTOR_NAMES)}")
        if len(self.planted_w) != 5:
            raise ValueError("planted_w carries one weight per broad feature (5)")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be >= 0")
        if self.base_deal_intensity <= 0:
            raise ValueError("base_deal_intensity must be > 0")

    @property
    def last(self) -> Quarter:
        return self.start + (self.n_quarters - 1)

    def scopes(self) -> list:
        return [BROAD_SCOPE] + [Scope(name) for name in SECTOR_NAMES[: self.n_sectors]]


def planted_params(spec: SyntheticSpec, scope: Scope) -> LogitParams:
    """Planted coefficients for a scope.

    Sectors reuse the broad weights by shared feature name; the
    sector-only columns inherit the leftover broad weights
    (sector_count_pct takes the ranking weight, sector_pe the market
    P/E weight).
    """
    w = spec.planted_w
    if scope.is_broad:
        return LogitParams(tuple(w), spec.planted_b)
    by_name = dict(zip(("deal_count", "avg_aum", "weighted_avg_aum", "avg_fund_ranking", "market_pe"), w))
    sector_w = (
        by_name["deal_count"],
        by_name["avg_fund_ranking"],
        by_name["avg_aum"],
        by_name["weighted_avg_aum"],
        by_name["market_pe"],
        by_name["market_pe"],
    )
    return LogitParams(sector_w, spec.planted_b)


def _ar1(rng: np.random.Generator, n: int, rho: float = 0.8, scale: float = 0.6) -> np.ndarray:
    eps = rng.normal(size=n)
    out = np.empty(n)
    level = 0.0
    for k in range(n):
        level = rho * level + scale * eps[k]
        out[k] = level
    return out


def deal_intensity_path(spec: SyntheticSpec, sector_idx: int) -> np.ndarray:
    """Expected deals per quarter for one sector; positive and smooth."""
    k = np.arange(spec.n_quarters)
    base = spec.base_deal_intensity * (1.0 + 0.4 * np.sin(2 * np.pi * (k + 2 * sector_idx) / 12))
    if spec.noise_scale == 0:
        return base
    ar = _ar1(_stream(spec.seed, _P_INTENSITY, sector_idx), spec.n_quarters)
    return base * np.exp(0.25 * spec.noise_scale * ar)


def aum_level_path(spec: SyntheticSpec, sector_idx: int) -> np.ndarray:
    """Per-sector AUM level in $B around which deal AUMs scatter."""
    k = np.arange(spec.n_quarters)
    base = 4.0 * (1.0 + 0.5 * np.sin(2 * np.pi * (k + 3 * sector_idx) / 10))
    if spec.noise_scale == 0:
        return base
    ar = _ar1(_stream(spec.seed, _P_AUM, sector_idx), spec.n_quarters)
    return base * np.exp(0.25 * spec.noise_scale * ar)


def rank_level_path(spec: SyntheticSpec, sector_idx: int) -> np.ndarray:
    k = np.arange(spec.n_quarters)
    return 2.5 + 1.0 * np.sin(2 * np.pi * (k + sector_idx) / 9)


def pe_path(spec: SyntheticSpec, stream_idx: int, phase: int) -> np.ndarray:
    k = np.arange(spec.n_quarters)
    base = 17.0 + 6.0 * np.sin(2 * np.pi * (k + 2 * phase) / 16)
    if spec.noise_scale == 0:
        return base
    ar = _ar1(_stream(spec.seed, _P_PE, stream_idx), spec.n_quarters)
    return base * np.exp(0.15 * spec.noise_scale * ar)


def quarter_deal_counts(spec: SyntheticSpec, sector_idx: int) -> list:
    """Deal counts per quarter for one sector.

    Poisson draws around the intensity path, or the rounded path itself
    when noise_scale is 0. Always non-negative integers.
    """
    intensity = deal_intensity_path(spec, sector_idx)
    if spec.noise_scale == 0:
        return [int(round(float(lam))) for lam in intensity]
    rng = _stream(spec.seed, _P_COUNTS, sector_idx)
    return [int(rng.poisson(float(lam))) for lam in intensity]


def generate_pe(spec: SyntheticSpec) -> dict:
    """One positive quarterly P/E series per scope name."""
    series = {
        BROAD_SCOPE.name: QuarterlySeries(
            spec.start, tuple(float(v) for v in pe_path(spec, _BROAD_STREAM, 7))
        )
    }
    for s, name in enumerate(SECTOR_NAMES[: spec.n_sectors]):
        series[name] = QuarterlySeries(
            spec.start, tuple(float(v) for v in pe_path(spec, s, s))
        )
    return series


def generate_deals(spec: SyntheticSpec) -> list:
    """First-deal records, one synthetic company per record.

    Every quarter's first deal per sector always carries a numeric AUM
    and a rank, so AUM and ranking features never go missing wholesale.
    """
    deals = []
    for s, sector in enumerate(SECTOR_NAMES[: spec.n_sectors]):
        counts = quarter_deal_counts(spec, s)
        aum_level = aum_level_path(spec, s)
        rank_level = rank_level_path(spec, s)
        rng = _stream(spec.seed, _P_DEALS, s)
        for k in range(spec.n_quarters):
            quarter = spec.start + k
            count = counts[k]
            quarter_start = quarter.end_date() - timedelta(days=89)
            for j in range(count):
                company = f"SYN-{s:02d}-{k:03d}-{j:03d}"
                name = f"Synthetic Co {s}-{k}-{j}"
                if j % 3 == 0:
                    name += ", Inc."
                when = quarter_start + timedelta(days=(j * 7) % 85)
                aum: object = float(aum_level[k])
                rank: float | None = float(np.clip(rank_level[k], 1.0, 4.0))
                if spec.noise_scale > 0:
                    u_bucket, u_missing, g_aum, u_rank, g_rank = (
                        rng.random(),
                        rng.random(),
                        rng.normal(),
                        rng.random(),
                        rng.normal(),
                    )
                    value = float(aum_level[k]) * math.exp(0.3 * spec.noise_scale * g_aum)
                    if j > 0 and u_missing < 0.05:
                        aum = None
                    elif u_bucket < 0.25:
                        if value < 2.0:
                            aum = AumBucket.LOW
                        elif value <= 10.0:
                            aum = AumBucket.MID
                        else:
                            aum = AumBucket.HIGH
                    else:
                        aum = value
                    if j > 0 and u_rank < 0.2:
                        rank = None
                    else:
                        rank = float(np.clip(rank_level[k] + 0.4 * g_rank, 1.0, 4.0))
                deals.append(
                    DealRecord(
                        company_id=company,
                        company_name=name,
                        sector=sector,
                        investment_date=when,
                        investor_aum=aum,
                        investor_rank=rank,
                        investor=f"Fund {(j + s) % 9:02d}",
                    )
                )
    return deals


def generate_features(spec: SyntheticSpec, deals=None, pe=None) -> tuple:
    """Feature tables and z-score tables per scope name."""
    if deals is None:
        deals = generate_deals(spec)
    if pe is None:
        pe = generate_pe(spec)
    features = {}
    ztables = {}
    for scope in spec.scopes():
        rows = build_feature_table(
            deals,
            scope,
            spec.start,
            spec.last,
            market_pe=pe[BROAD_SCOPE.name],
            sector_pe=None if scope.is_broad else pe[scope.name],
        )
        features[scope.name] = rows
        ztables[scope.name] = build_zscore_table(rows, spec.std_window)
    return features, ztables


def _label_stream_index(scope: Scope) -> int:
    return _BROAD_STREAM if scope.is_broad else SECTOR_NAMES.index(scope.sector)


def generate_labels(
    ztable: ZScoreTable,
    params: LogitParams,
    spec: SyntheticSpec,
    scope: Scope,
    market_prices: QuarterlySeries | None = None,
) -> tuple:
    """Draw labels from the planted law and back out a price series.

    Quarters with a z row draw UP with probability P(UP | z) under the
    planted parameters; quarters before the first z (or with a dropped
    row) flip a fair coin. The emitted series spans one quarter past the
    horizon so every drawn label is reproduced by the response module.
    Sector paths anchor to the market path so the drawn label decides
    the spread sign.
    """
    if not scope.is_broad and market_prices is None:
        raise ValueError("sector label generation needs the market price series")
    rng = _stream(spec.seed, _P_LABELS, _label_stream_index(scope))
    values = [100.0]
    drawn = []
    for k in range(spec.n_quarters):
        quarter = spec.start + k
        u_label = rng.random()
        u_mag = rng.random()
        row = ztable.row_at(quarter)
        p_up = prob_up(row.z, params) if row is not None else 0.5
        sign = 1.0 if u_label < p_up else -1.0
        drawn.append(Label.UP if sign > 0 else Label.DOWN)
        if scope.is_broad:
            ann = sign * (8.0 + 30.0 * u_mag)
        else:
            market_ratio = market_prices.at(quarter + 1) / market_prices.at(quarter)
            market_ann = 100.0 * (market_ratio**4 - 1.0)
            ann = market_ann + sign * (6.0 + 22.0 * u_mag)
        values.append(values[-1] * (1.0 + ann / 100.0) ** 0.25)
    prices = QuarterlySeries(spec.start, tuple(values))
    labels = build_labels(scope, market_prices or prices, None if scope.is_broad else prices)
    if [lab.y for lab in labels] != drawn:
        raise AssertionError("synthesized prices failed to reproduce the drawn labels")
    return labels, prices


@dataclass
class SyntheticDataset:
    spec: SyntheticSpec
    deals: list
    prices: dict
    pe: dict
    features: dict
    ztables: dict
    labels: dict
    planted: dict = field(default_factory=dict)


def generate_dataset(spec: SyntheticSpec) -> SyntheticDataset:
    deals = generate_deals(spec)
    pe = generate_pe(spec)
    features, ztables = generate_features(spec, deals, pe)
    prices = {}
    labels = {}
    planted = {}
    broad_params = planted_params(spec, BROAD_SCOPE)
    planted[BROAD_SCOPE.name] = broad_params
    market_labels, market_prices = generate_labels(
        ztables[BROAD_SCOPE.name], broad_params, spec, BROAD_SCOPE
    )
    prices[BROAD_SCOPE.name] = market_prices
    labels[BROAD_SCOPE.name] = market_labels
    for scope in spec.scopes()[1:]:
        params = planted_params(spec, scope)
        planted[scope.name] = params
        sector_labels, sector_prices = generate_labels(
            ztables[scope.name], params, spec, scope, market_prices=market_prices
        )
        prices[scope.name] = sector_prices
        labels[scope.name] = sector_labels
    return SyntheticDataset(spec, deals, prices, pe, features, ztables, labels, planted)


def planted_samples(params: LogitParams, n: int, seed: int) -> list:
    """n standard-normal feature draws labeled by the planted law."""
    rng = _stream(seed, _P_SAMPLES)
    z = rng.normal(size=(n, params.dim))
    u = rng.random(n)
    samples = []
    for row, coin in zip(z, u):
        y = Label.UP if coin < prob_up(tuple(row), params) else Label.DOWN
        samples.append(TrainingSample(tuple(row), y))
    return samples


def write_dataset(dataset: SyntheticDataset, out_dir) -> dict:
    """Emit deals.csv, prices.csv, and pe.csv in the ingestion formats."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "deals": out / "deals.csv",
        "prices": out / "prices.csv",
        "pe": out / "pe.csv",
    }
    with open(paths["deals"], "w", newline="", encoding="utf-8") as handle:
        write_deals(dataset.deals, handle)
    with open(paths["prices"], "w", newline="", encoding="utf-8") as handle:
        write_prices(dataset.prices, handle)
    with open(paths["pe"], "w", newline="", encoding="utf-8") as handle:
        write_prices(dataset.pe, handle)
    return paths
