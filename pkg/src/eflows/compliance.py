"""Bioperiod partitioning, noncompliance counting and cross-year summaries.

A noncompliance day has an observed discharge strictly below the threshold;
days equal to the threshold comply. Days without an observation are a third
category, counted as missing, never as violations. Summary cells render as
"mean ± sd (min; max)" with sample (n-1) standard deviation.
"""

from __future__ import annotations

import calendar as _calendar
import csv
import hashlib
import io
import json
import statistics
from dataclasses import dataclass, field, replace
from datetime import date, datetime
from typing import Callable

from .methods import (
    EflowMethodConfig,
    EflowThreshold,
    InsufficientCoverage,
    InsufficientSample,
    UnknownMethod,
    compute_eflow,
)
from .records import DailySeries, Variable

MONTH_MAX_DAYS = [31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31]


@dataclass(frozen=True, order=True)
class MonthDay:
    month: int
    day: int

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            raise ValueError(f"month {self.month} outside 1..12")
        if not 1 <= self.day <= MONTH_MAX_DAYS[self.month - 1]:
            raise ValueError(f"day {self.day} invalid for month {self.month}")

    @classmethod
    def parse(cls, text: str) -> "MonthDay":
        month_s, _, day_s = text.partition("-")
        return cls(int(month_s), int(day_s))

    def resolve(self, year: int) -> date:
        """Concrete date in `year`; Feb 29 clamps to Feb 28 in non-leap years."""
        return date(year, self.month, min(self.day, _calendar.monthrange(year, self.month)[1]))

    def __str__(self) -> str:
        return f"{self.month:02d}-{self.day:02d}"


@dataclass(frozen=True)
class Bioperiod:
    name: str
    start: MonthDay
    end: MonthDay


@dataclass(frozen=True)
class BioperiodCalendar:
    """Named month-day windows partitioning the year; no window wraps Dec->Jan."""

    periods: tuple[Bioperiod, ...]

    def __post_init__(self):
        if not self.periods:
            raise ValueError("calendar needs at least one period")
        names = [p.name for p in self.periods]
        if len(set(names)) != len(names) or any(not n for n in names):
            raise ValueError("period names must be unique and non-empty")
        for p in self.periods:
            if p.start > p.end:
                raise ValueError(f"period {p.name!r} wraps the year boundary (start after end)")
        # clamping Feb 29 could create overlaps that month-day tuples hide,
        # so check materialized windows in both a leap and a non-leap year
        for year in (2015, 2016):
            spans = sorted(
                (p.start.resolve(year), p.end.resolve(year), p.name) for p in self.periods
            )
            for (_, prev_end, prev_name), (next_start, _, next_name) in zip(spans, spans[1:]):
                if next_start <= prev_end:
                    raise ValueError(f"periods {prev_name!r} and {next_name!r} overlap")

    def order_index(self, name: str) -> int:
        for i, p in enumerate(self.periods):
            if p.name == name:
                return i
        raise KeyError(name)

    def to_doc(self) -> dict:
        return {
            "periods": [
                {"name": p.name, "start": str(p.start), "end": str(p.end)} for p in self.periods
            ]
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "BioperiodCalendar":
        return cls(
            periods=tuple(
                Bioperiod(
                    name=str(entry["name"]),
                    start=MonthDay.parse(entry["start"]),
                    end=MonthDay.parse(entry["end"]),
                )
                for entry in doc["periods"]
            )
        )


DEFAULT_CALENDAR = BioperiodCalendar(
    periods=(
        Bioperiod("overwintering", MonthDay(1, 1), MonthDay(2, 29)),
        Bioperiod("spring spawning", MonthDay(3, 1), MonthDay(6, 30)),
        Bioperiod("rearing & growth", MonthDay(7, 1), MonthDay(9, 30)),
        Bioperiod("fall spawning", MonthDay(10, 1), MonthDay(12, 31)),
    )
)


@dataclass(frozen=True)
class BioperiodSegment:
    bioperiod: str
    year: int
    segment_start: date
    segment_end: date

    @property
    def total_days(self) -> int:
        return (self.segment_end - self.segment_start).days + 1


def partition_bioperiods(
    start_date: date, end_date: date, calendar: BioperiodCalendar
) -> list[BioperiodSegment]:
    """Disjoint per-(period, year) segments clipped to the query range."""
    if start_date > end_date:
        raise ValueError("start_date after end_date")
    segments: list[BioperiodSegment] = []
    for year in range(start_date.year, end_date.year + 1):
        for period in calendar.periods:
            lo = max(period.start.resolve(year), start_date)
            hi = min(period.end.resolve(year), end_date)
            if lo <= hi:
                segments.append(BioperiodSegment(period.name, year, lo, hi))
    return segments


@dataclass(frozen=True)
class BioperiodCompliance:
    station_id: str
    bioperiod: str
    year: int
    noncompliance_days: int
    observed_days: int
    missing_days: int
    total_days: int
    threshold: EflowThreshold

    def to_doc(self) -> dict:
        return {
            "station_id": self.station_id,
            "bioperiod": self.bioperiod,
            "year": self.year,
            "noncompliance_days": self.noncompliance_days,
            "observed_days": self.observed_days,
            "missing_days": self.missing_days,
            "total_days": self.total_days,
        }


def count_noncompliance(
    series: DailySeries, threshold: EflowThreshold, segment: BioperiodSegment
) -> BioperiodCompliance:
    """Count days in the segment strictly below the threshold."""
    if segment.segment_start < series.start_date or segment.segment_end > series.end_date:
        raise ValueError("series does not cover the segment window")
    if series.variable != Variable.Q:
        raise ValueError("compliance counting requires a discharge (Q) series")
    offset = (segment.segment_start - series.start_date).days
    q_env = threshold.q_env
    observed = 0
    noncompliant = 0
    for _, value in series.points[offset : offset + segment.total_days]:
        if value is None:
            continue
        observed += 1
        if value < q_env:
            noncompliant += 1
    return BioperiodCompliance(
        station_id=series.station_id,
        bioperiod=segment.bioperiod,
        year=segment.year,
        noncompliance_days=noncompliant,
        observed_days=observed,
        missing_days=segment.total_days - observed,
        total_days=segment.total_days,
        threshold=threshold,
    )


class EmptyGroup(ValueError):
    pass


@dataclass(frozen=True)
class ComplianceSummary:
    station_id: str
    bioperiod: str
    years_covered: int
    mean: float
    sd: float
    min: int
    max: int

    def rendered(self) -> str:
        return f"{self.mean:.2f} ± {self.sd:.2f} ({self.min}; {self.max})"

    def to_doc(self) -> dict:
        return {
            "station_id": self.station_id,
            "bioperiod": self.bioperiod,
            "years_covered": self.years_covered,
            "mean": self.mean,
            "sd": self.sd,
            "min": self.min,
            "max": self.max,
            "rendered": self.rendered(),
        }


def summarize(results: list[BioperiodCompliance]) -> ComplianceSummary:
    """Across-year mean, sample SD and range for one (station, bioperiod) group."""
    if not results:
        raise EmptyGroup("cannot summarize an empty group")
    keys = {(r.station_id, r.bioperiod) for r in results}
    if len(keys) != 1:
        raise ValueError(f"mixed groups in summarize: {sorted(keys)}")
    years = [r.year for r in results]
    if len(set(years)) != len(years):
        raise ValueError("duplicate years in summarize input")
    counts = [r.noncompliance_days for r in results]
    station_id, bioperiod = next(iter(keys))
    return ComplianceSummary(
        station_id=station_id,
        bioperiod=bioperiod,
        years_covered=len(counts),
        mean=statistics.fmean(counts),
        sd=statistics.stdev(counts) if len(counts) > 1 else 0.0,
        min=min(counts),
        max=max(counts),
    )


@dataclass(frozen=True)
class ComplianceQuery:
    station_ids: tuple[str, ...]
    start_date: date
    end_date: date
    calendar: BioperiodCalendar = DEFAULT_CALENDAR
    method_config: EflowMethodConfig = EflowMethodConfig()

    def __post_init__(self):
        if not self.station_ids:
            raise ValueError("station_ids must be non-empty")
        if self.start_date > self.end_date:
            raise ValueError("start_date after end_date")


@dataclass(frozen=True)
class StationError:
    station_id: str
    code: str
    message: str

    def to_doc(self) -> dict:
        return {"station_id": self.station_id, "code": self.code, "message": self.message}


@dataclass
class ComplianceReport:
    query: ComplianceQuery
    thresholds: list[EflowThreshold] = field(default_factory=list)
    rows: list[BioperiodCompliance] = field(default_factory=list)
    summaries: list[ComplianceSummary] = field(default_factory=list)
    errors: list[StationError] = field(default_factory=list)


def compliance_report(
    query: ComplianceQuery,
    store,
    clock: Callable[[], datetime] | None = None,
) -> ComplianceReport:
    """Thresholds, per-segment counts and summaries for every station.

    Per-station failures become error entries without aborting other
    stations. Output ordering is stable: station_id ascending, bioperiods
    in calendar order, years ascending. reference_period defaults to the
    query window.
    """
    snapshot = store.snapshot() if hasattr(store, "snapshot") else store
    config = query.method_config
    if config.reference_period is None:
        config = replace(config, reference_period=(query.start_date, query.end_date))
    effective = ComplianceQuery(
        station_ids=tuple(sorted(set(query.station_ids))),
        start_date=query.start_date,
        end_date=query.end_date,
        calendar=query.calendar,
        method_config=config,
    )
    report = ComplianceReport(query=effective)
    segments = partition_bioperiods(query.start_date, query.end_date, query.calendar)
    order = {p.name: i for i, p in enumerate(query.calendar.periods)}

    for station_id in effective.station_ids:
        if not snapshot.has_station(station_id):
            report.errors.append(StationError(station_id, "not_found", f"unknown station: {station_id}"))
            continue
        try:
            threshold = compute_eflow(station_id, config, snapshot, clock=clock)
        except (InsufficientSample, InsufficientCoverage) as exc:
            report.errors.append(StationError(station_id, "insufficient_data", str(exc)))
            continue
        except UnknownMethod as exc:
            report.errors.append(StationError(station_id, "bad_request", str(exc)))
            continue
        series = snapshot.query_series(
            station_id, Variable.Q, config.daily_statistic, query.start_date, query.end_date
        )
        rows = [count_noncompliance(series, threshold, seg) for seg in segments]
        rows.sort(key=lambda r: (order[r.bioperiod], r.year))
        report.thresholds.append(threshold)
        report.rows.extend(rows)
        for period in query.calendar.periods:
            group = [r for r in rows if r.bioperiod == period.name]
            if group:
                report.summaries.append(summarize(group))
    return report


# -- rendering ------------------------------------------------------------


def report_to_doc(report: ComplianceReport) -> dict:
    doc = {
        "report_id": None,
        "query": {
            "station_ids": list(report.query.station_ids),
            "start_date": report.query.start_date.isoformat(),
            "end_date": report.query.end_date.isoformat(),
            "calendar": report.query.calendar.to_doc(),
            "method_config": report.query.method_config.to_doc(),
        },
        "thresholds": [t.to_doc(include_config=False) for t in report.thresholds],
        "compliance": [r.to_doc() for r in report.rows],
        "summaries": [s.to_doc() for s in report.summaries],
        "errors": [e.to_doc() for e in report.errors],
    }
    doc["report_id"] = compute_report_id(doc)
    return doc


def compute_report_id(doc: dict) -> str:
    """Content hash, so identical runs produce identical ids and bodies."""
    body = {k: v for k, v in doc.items() if k != "report_id"}
    canonical = json.dumps(body, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def render_report_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


COMPLIANCE_CSV_COLUMNS = [
    "station_id",
    "bioperiod",
    "year",
    "noncompliance_days",
    "observed_days",
    "missing_days",
    "total_days",
]
SUMMARY_CSV_COLUMNS = ["station_id", "bioperiod", "years_covered", "mean", "sd", "min", "max"]


def render_compliance_csv(report: ComplianceReport) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(COMPLIANCE_CSV_COLUMNS)
    for r in report.rows:
        writer.writerow(
            [
                r.station_id,
                r.bioperiod,
                r.year,
                r.noncompliance_days,
                r.observed_days,
                r.missing_days,
                r.total_days,
            ]
        )
    return out.getvalue()


def render_summary_csv(report: ComplianceReport) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SUMMARY_CSV_COLUMNS)
    for s in report.summaries:
        writer.writerow(
            [s.station_id, s.bioperiod, s.years_covered, f"{s.mean:.2f}", f"{s.sd:.2f}", s.min, s.max]
        )
    return out.getvalue()
