"""Minimum-eflow thresholds from discharge series.

The built-in method picks the discharge value whose rank-based exceedance
probability is closest to the requested p: with the sample sorted
descending, the 1-based rank is nint(p * (n + 1) / 100), rounded half away
from zero and clamped to [1, n]. Clamping matters for small samples where
the raw rank exceeds n; the clamp returns the sample minimum, the most
conservative threshold. Rank arithmetic is exact (integers / fractions),
never float, so .5 cases cannot drift.

A registry keyed by method id leaves room for other threshold methods
(e.g. regional or per-month variants) without touching callers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from datetime import date, datetime
from enum import Enum
from fractions import Fraction
from typing import Callable

from .records import DailySeries, Statistic, Variable

DEFAULT_MONTH_WINDOW = frozenset(range(5, 11))  # May..October, the ice-free season


class AggregationMode(str, Enum):
    RAW_DAILY = "raw_daily"
    MONTHLY_MINIMUM = "monthly_minimum"


class InsufficientSample(ValueError):
    def __init__(self, n: int, min_sample: int):
        super().__init__(f"sample has {n} values, need at least {min_sample}")
        self.n = n
        self.min_sample = min_sample


class InsufficientCoverage(ValueError):
    def __init__(self, coverage: float, min_coverage: float):
        super().__init__(f"coverage {coverage:.3f} below required {min_coverage:.3f}")
        self.coverage = coverage
        self.min_coverage = min_coverage


class UnknownMethod(ValueError):
    pass


@dataclass(frozen=True)
class DischargeSample:
    """Observed discharge values sorted descending, with their count."""

    values_desc: tuple[float, ...]
    n: int
    source_description: str = ""

    def __post_init__(self):
        if self.n != len(self.values_desc) or self.n < 1:
            raise ValueError("n must equal len(values_desc) and be >= 1")
        if any(v < 0 for v in self.values_desc):
            raise ValueError("discharge values must be >= 0")
        if any(a < b for a, b in zip(self.values_desc, self.values_desc[1:])):
            raise ValueError("values_desc must be non-increasing")

    @classmethod
    def from_values(cls, values, source_description: str = "") -> "DischargeSample":
        """Sort descending (stable, so ties keep input order) and wrap."""
        ordered = tuple(sorted((float(v) for v in values), reverse=True))
        return cls(values_desc=ordered, n=len(ordered), source_description=source_description)


@dataclass(frozen=True)
class EflowMethodConfig:
    method_id: str = "exceedance_quantile"
    p: float = 95.0
    aggregation: AggregationMode = AggregationMode.MONTHLY_MINIMUM
    month_window: frozenset[int] = DEFAULT_MONTH_WINDOW
    daily_statistic: Statistic = Statistic.AVG
    reference_period: tuple[date, date] | None = None
    min_sample: int = 10
    min_coverage: float = 0.7

    def __post_init__(self):
        if not 0.0 < self.p < 100.0:
            raise ValueError("p must be in (0, 100)")
        if self.min_sample < 1:
            raise ValueError("min_sample must be >= 1")
        if not 0.0 < self.min_coverage <= 1.0:
            raise ValueError("min_coverage must be in (0, 1]")
        if not self.month_window:
            raise ValueError("month_window must be non-empty")
        if any(m not in range(1, 13) for m in self.month_window):
            raise ValueError("month_window entries must be months 1..12")
        if self.reference_period is not None and self.reference_period[0] > self.reference_period[1]:
            raise ValueError("reference_period start after end")

    def to_doc(self) -> dict:
        return {
            "method_id": self.method_id,
            "p": self.p,
            "aggregation": self.aggregation.value,
            "month_window": sorted(self.month_window),
            "daily_statistic": self.daily_statistic.value,
            "reference_period": None
            if self.reference_period is None
            else [self.reference_period[0].isoformat(), self.reference_period[1].isoformat()],
            "min_sample": self.min_sample,
            "min_coverage": self.min_coverage,
        }

    @classmethod
    def from_doc(cls, doc: dict, base: "EflowMethodConfig | None" = None) -> "EflowMethodConfig":
        """Build a config from a flat document, overlaying non-null fields on `base`."""
        base = base or cls()
        kwargs: dict = {}
        if doc.get("method_id") is not None:
            kwargs["method_id"] = str(doc["method_id"])
        if doc.get("p") is not None:
            kwargs["p"] = float(doc["p"])
        if doc.get("aggregation") is not None:
            kwargs["aggregation"] = AggregationMode(doc["aggregation"])
        if doc.get("month_window") is not None:
            kwargs["month_window"] = frozenset(int(m) for m in doc["month_window"])
        if doc.get("daily_statistic") is not None:
            kwargs["daily_statistic"] = Statistic(doc["daily_statistic"])
        if doc.get("reference_period") is not None:
            lo, hi = doc["reference_period"]
            kwargs["reference_period"] = (date.fromisoformat(lo), date.fromisoformat(hi))
        if doc.get("min_sample") is not None:
            kwargs["min_sample"] = int(doc["min_sample"])
        if doc.get("min_coverage") is not None:
            kwargs["min_coverage"] = float(doc["min_coverage"])
        return replace(base, **kwargs)


@dataclass(frozen=True)
class EflowThreshold:
    station_id: str
    q_env: float
    config: EflowMethodConfig
    n: int
    coverage: float
    computed_at: datetime | None = None

    def to_doc(self, include_config: bool = True) -> dict:
        doc = {
            "station_id": self.station_id,
            "q_env": self.q_env,
            "n": self.n,
            "coverage": self.coverage,
            "computed_at": None if self.computed_at is None else self.computed_at.isoformat(),
        }
        if include_config:
            doc["config"] = self.config.to_doc()
        return doc


def exceedance_index(p: float, n: int) -> int:
    """1-based rank into a descending sample: clamp(nint(p*(n+1)/100), 1, n).

    nint rounds half away from zero. Exact arithmetic throughout.
    """
    if not 0 < p < 100:
        raise ValueError("p must be in (0, 100)")
    if n < 1:
        raise ValueError("n must be >= 1")
    if float(p).is_integer():
        whole, remainder = divmod(int(p) * (n + 1), 100)
        rank = whole + (1 if remainder >= 50 else 0)
    else:
        exact = Fraction(str(float(p))) * (n + 1) / 100
        rank = math.floor(exact + Fraction(1, 2))
    return min(max(rank, 1), n)


def exceedance_quantile(sample: DischargeSample, p: float) -> float:
    """The sample value exceeded with probability ~p%; always a sample member."""
    return sample.values_desc[exceedance_index(p, sample.n) - 1]


def _windowed_sample(
    series: DailySeries, config: EflowMethodConfig
) -> tuple[DischargeSample, float]:
    """Select window values, apply gates, return (sample, day coverage)."""
    if series.variable != Variable.Q:
        raise ValueError("aggregate_sample requires a discharge (Q) series")
    lo, hi = config.reference_period or (series.start_date, series.end_date)
    months = config.month_window

    window_days = 0
    observed_days = 0
    raw_values: list[float] = []
    monthly_min: dict[tuple[int, int], float] = {}
    for day, value in series.points:
        if day < lo or day > hi or day.month not in months:
            continue
        window_days += 1
        if value is None:
            continue
        observed_days += 1
        raw_values.append(value)
        key = (day.year, day.month)
        if key not in monthly_min or value < monthly_min[key]:
            monthly_min[key] = value

    if config.aggregation == AggregationMode.MONTHLY_MINIMUM:
        values = [monthly_min[k] for k in sorted(monthly_min)]
    else:
        values = raw_values
    if len(values) < config.min_sample:
        raise InsufficientSample(len(values), config.min_sample)
    coverage = observed_days / window_days if window_days else 0.0
    if coverage < config.min_coverage:
        raise InsufficientCoverage(coverage, config.min_coverage)

    description = (
        f"{series.station_id} {series.statistic.value} Q {lo.isoformat()}..{hi.isoformat()} "
        f"months={sorted(months)} {config.aggregation.value}"
    )
    return DischargeSample.from_values(values, source_description=description), coverage


def aggregate_sample(series: DailySeries, config: EflowMethodConfig) -> DischargeSample:
    """Reduce a daily discharge series to the sample the ranking runs on.

    raw_daily keeps every observed value inside the month window and
    reference period; monthly_minimum keeps one value per (year, month)
    with at least one observation. Gates: min_sample on the resulting
    count, min_coverage on day coverage of the selected window.
    """
    return _windowed_sample(series, config)[0]


def _run_exceedance_quantile(series: DailySeries, config: EflowMethodConfig) -> tuple[float, int, float]:
    sample, coverage = _windowed_sample(series, config)
    return exceedance_quantile(sample, config.p), sample.n, coverage


MethodFn = Callable[[DailySeries, EflowMethodConfig], tuple[float, int, float]]

_METHODS: dict[str, MethodFn] = {"exceedance_quantile": _run_exceedance_quantile}


def register_method(method_id: str, fn: MethodFn) -> None:
    _METHODS[method_id] = fn


def get_method(method_id: str) -> MethodFn:
    try:
        return _METHODS[method_id]
    except KeyError:
        raise UnknownMethod(f"unknown eflow method: {method_id}") from None


def compute_eflow(
    station_id: str,
    config: EflowMethodConfig,
    store,
    clock: Callable[[], datetime] | None = None,
) -> EflowThreshold:
    """Query, aggregate and rank; deterministic for a fixed store state.

    With reference_period unset, the station's full stored extent is used;
    the resolved period is recorded in the returned threshold's config.
    """
    snapshot = store.snapshot() if hasattr(store, "snapshot") else store
    if config.reference_period is None:
        extent = snapshot.extent(station_id)
        if extent is None:
            if not snapshot.has_station(station_id):
                from .store import NotFound

                raise NotFound(station_id)
            raise InsufficientSample(0, config.min_sample)
        config = replace(config, reference_period=extent)
    lo, hi = config.reference_period
    series = snapshot.query_series(station_id, Variable.Q, config.daily_statistic, lo, hi)
    q_env, n, coverage = get_method(config.method_id)(series, config)
    return EflowThreshold(
        station_id=station_id,
        q_env=q_env,
        config=config,
        n=n,
        coverage=coverage,
        computed_at=clock() if clock is not None else None,
    )
