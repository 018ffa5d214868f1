"""Domain types for daily river-station records and query results.

Daily values are min/avg/max triples of water level (WL, cm), water
temperature (TW, degC) and discharge (Q, m3/s). Dates are plain calendar
days: the source data carries no time-of-day and no timezone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, timedelta
from enum import Enum


class Variable(str, Enum):
    Q = "Q"
    WL = "WL"
    TW = "TW"


class Statistic(str, Enum):
    MIN = "min"
    AVG = "avg"
    MAX = "max"


class QualityFlag(str, Enum):
    OBSERVED = "observed"
    ESTIMATED = "estimated"
    SUSPECT = "suspect"


@dataclass(frozen=True)
class Triple:
    """One day's min/avg/max of a single variable. Fields may be missing."""

    min: float | None = None
    avg: float | None = None
    max: float | None = None

    def get(self, statistic: Statistic) -> float | None:
        return getattr(self, Statistic(statistic).value)

    def is_empty(self) -> bool:
        return self.min is None and self.avg is None and self.max is None

    def violations(self, name: str, nonnegative: bool = False) -> list[str]:
        """Invariant failures as messages; empty list means the triple is valid."""
        problems: list[str] = []
        for stat, value in (("min", self.min), ("avg", self.avg), ("max", self.max)):
            if value is None:
                continue
            if not math.isfinite(value):
                problems.append(f"{name}_{stat} is not finite")
            elif nonnegative and value < 0:
                problems.append(f"{name}_{stat} < 0")
        if problems:
            return problems
        for lo_stat, hi_stat, lo, hi in (
            ("min", "avg", self.min, self.avg),
            ("avg", "max", self.avg, self.max),
            ("min", "max", self.min, self.max),
        ):
            if lo is not None and hi is not None and lo > hi:
                problems.append(f"{name}: min ≤ avg ≤ max violated ({lo_stat} > {hi_stat})")
        return problems


@dataclass(frozen=True)
class DailyRecord:
    """One station-day of measurements. At most one per (station_id, day) in a store."""

    station_id: str
    day: date
    wl: Triple | None = None
    tw: Triple | None = None
    q: Triple | None = None
    quality_flag: QualityFlag = QualityFlag.OBSERVED

    def value(self, variable: Variable, statistic: Statistic) -> float | None:
        triple = {Variable.Q: self.q, Variable.WL: self.wl, Variable.TW: self.tw}[Variable(variable)]
        return None if triple is None else triple.get(statistic)

    def violations(self) -> list[str]:
        problems: list[str] = []
        if not self.station_id:
            problems.append("station_id is empty")
        if self.wl is not None:
            problems.extend(self.wl.violations("wl"))
        if self.tw is not None:
            problems.extend(self.tw.violations("tw"))
        if self.q is not None:
            problems.extend(self.q.violations("q", nonnegative=True))
        return problems

    def to_doc(self) -> dict:
        def triple_doc(t: Triple | None) -> dict | None:
            if t is None or t.is_empty():
                return None
            return {"min": t.min, "avg": t.avg, "max": t.max}

        return {
            "station_id": self.station_id,
            "date": self.day.isoformat(),
            "wl": triple_doc(self.wl),
            "tw": triple_doc(self.tw),
            "q": triple_doc(self.q),
            "quality_flag": self.quality_flag.value,
        }


@dataclass
class Station:
    """Gauging-station metadata plus derived size statistics.

    mean_annual_discharge is the mean of all stored daily average discharge
    values; size_percentile is 100 * ascending rank / count among stations
    that have any discharge data (the largest river gets 100).
    """

    station_id: str
    station_name: str = ""
    river_name: str = ""
    latitude: float | None = None
    longitude: float | None = None
    mean_annual_discharge: float | None = None
    size_percentile: float | None = None

    def violations(self) -> list[str]:
        problems: list[str] = []
        if not self.station_id:
            problems.append("station_id is empty")
        if self.latitude is not None and not -90.0 <= self.latitude <= 90.0:
            problems.append("latitude outside [-90, 90]")
        if self.longitude is not None and not -180.0 <= self.longitude <= 180.0:
            problems.append("longitude outside [-180, 180]")
        if self.size_percentile is not None and not 0.0 <= self.size_percentile <= 100.0:
            problems.append("size_percentile outside [0, 100]")
        return problems

    def to_doc(self) -> dict:
        return {
            "station_id": self.station_id,
            "station_name": self.station_name,
            "river_name": self.river_name,
            "latitude": self.latitude,
            "longitude": self.longitude,
            "mean_annual_discharge": self.mean_annual_discharge,
            "size_percentile": self.size_percentile,
        }


@dataclass(frozen=True)
class DailySeries:
    """One value per calendar day over a closed date window; gaps are explicit Nones."""

    station_id: str
    variable: Variable
    statistic: Statistic
    start_date: date
    end_date: date
    points: tuple[tuple[date, float | None], ...]

    @property
    def total_days(self) -> int:
        return (self.end_date - self.start_date).days + 1

    @property
    def present_count(self) -> int:
        return sum(1 for _, v in self.points if v is not None)

    @property
    def coverage(self) -> float:
        return self.present_count / self.total_days

    def value_on(self, day: date) -> float | None:
        """Value for a day inside the window (index arithmetic, no scan)."""
        offset = (day - self.start_date).days
        if offset < 0 or offset >= len(self.points):
            raise ValueError(f"{day} outside series window {self.start_date}..{self.end_date}")
        return self.points[offset][1]

    def to_doc(self) -> dict:
        return {
            "station_id": self.station_id,
            "variable": self.variable.value,
            "statistic": self.statistic.value,
            "start_date": self.start_date.isoformat(),
            "end_date": self.end_date.isoformat(),
            "coverage": self.coverage,
            "points": [{"date": d.isoformat(), "value": v} for d, v in self.points],
        }


def date_range(start: date, end: date):
    """Yield every calendar day from start to end inclusive."""
    day = start
    one = timedelta(days=1)
    while day <= end:
        yield day
        day += one
