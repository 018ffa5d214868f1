"""The repository's CSV dialect for daily records and station metadata.

Daily file: UTF-8, comma-separated, header
``station_id,date,wl_min,wl_avg,wl_max,tw_min,tw_avg,tw_max,q_min,q_avg,q_max[,quality_flag]``
with ISO-8601 dates, ``.`` decimals and empty fields for missing values.
Station metadata file: ``station_id,station_name,river_name,latitude,longitude``.

Malformed rows never abort a parse; they come back as RowError entries in
input order. Only a bad header is fatal.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from datetime import date

from .records import DailyRecord, QualityFlag, Station, Triple

DAILY_COLUMNS = [
    "station_id",
    "date",
    "wl_min",
    "wl_avg",
    "wl_max",
    "tw_min",
    "tw_avg",
    "tw_max",
    "q_min",
    "q_avg",
    "q_max",
]
QUALITY_COLUMN = "quality_flag"
STATION_COLUMNS = ["station_id", "station_name", "river_name", "latitude", "longitude"]


class FormatError(ValueError):
    """Fatal dialect violation (wrong header); parsing cannot proceed."""


@dataclass(frozen=True)
class RowError:
    line: int
    reason: str

    def __str__(self) -> str:  # pragma: no cover - convenience for logs
        return f"line {self.line}: {self.reason}"


def _decode(raw: bytes | str) -> str:
    if isinstance(raw, bytes):
        return raw.decode("utf-8-sig")
    return raw.lstrip("﻿")


def _check_header(header: list[str], expected: list[str], optional: str | None) -> bool:
    """Return True when the optional trailing column is present; raise on mismatch."""
    has_optional = False
    if optional is not None and len(header) == len(expected) + 1:
        has_optional = True
        expected = expected + [optional]
    if len(header) != len(expected):
        for i, want in enumerate(expected):
            got = header[i] if i < len(header) else "<missing>"
            if got.strip() != want:
                raise FormatError(f"header mismatch at column {i + 1}: expected {want!r}, found {got!r}")
        raise FormatError(f"header mismatch: expected {len(expected)} columns, found {len(header)}")
    for i, (got, want) in enumerate(zip(header, expected)):
        if got.strip() != want:
            raise FormatError(f"header mismatch at column {i + 1}: expected {want!r}, found {got!r}")
    return has_optional


def _parse_float(field: str, name: str) -> float | None:
    text = field.strip()
    if not text:
        return None
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"{name}: not a number: {text!r}")
    if not math.isfinite(value):
        raise ValueError(f"{name}: not finite: {text!r}")
    return value


def _triple(fields: list[str], names: list[str]) -> Triple | None:
    values = [_parse_float(f, n) for f, n in zip(fields, names)]
    if all(v is None for v in values):
        return None
    return Triple(min=values[0], avg=values[1], max=values[2])


def parse_daily_csv(raw: bytes | str) -> tuple[list[DailyRecord], list[RowError]]:
    """Parse a daily-records file; empty input yields two empty lists."""
    text = _decode(raw)
    if not text.strip():
        return [], []
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        return [], []
    has_flag = _check_header(header, DAILY_COLUMNS, QUALITY_COLUMN)
    expected_len = len(DAILY_COLUMNS) + (1 if has_flag else 0)

    records: list[DailyRecord] = []
    errors: list[RowError] = []
    for row in reader:
        line = reader.line_num
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != expected_len:
            errors.append(RowError(line, f"expected {expected_len} fields, found {len(row)}"))
            continue
        try:
            record = _parse_daily_row(row, has_flag)
        except ValueError as exc:
            errors.append(RowError(line, str(exc)))
            continue
        problems = record.violations()
        if problems:
            errors.append(RowError(line, "; ".join(problems)))
            continue
        records.append(record)
    return records, errors


def _parse_daily_row(row: list[str], has_flag: bool) -> DailyRecord:
    station_id = row[0].strip()
    if not station_id:
        raise ValueError("station_id is empty")
    try:
        day = date.fromisoformat(row[1].strip())
    except ValueError:
        raise ValueError(f"date: not ISO-8601 YYYY-MM-DD: {row[1]!r}")
    wl = _triple(row[2:5], ["wl_min", "wl_avg", "wl_max"])
    tw = _triple(row[5:8], ["tw_min", "tw_avg", "tw_max"])
    q = _triple(row[8:11], ["q_min", "q_avg", "q_max"])
    flag = QualityFlag.OBSERVED
    if has_flag:
        text = row[11].strip()
        if text:
            try:
                flag = QualityFlag(text)
            except ValueError:
                raise ValueError(f"quality_flag: unknown value {text!r}")
    return DailyRecord(station_id=station_id, day=day, wl=wl, tw=tw, q=q, quality_flag=flag)


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(value)


def serialize_daily_csv(records: list[DailyRecord]) -> str:
    """Render records in the documented dialect; parse(serialize(r)) == r exactly."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(DAILY_COLUMNS + [QUALITY_COLUMN])
    for rec in records:
        wl = rec.wl or Triple()
        tw = rec.tw or Triple()
        q = rec.q or Triple()
        writer.writerow(
            [
                rec.station_id,
                rec.day.isoformat(),
                _fmt(wl.min),
                _fmt(wl.avg),
                _fmt(wl.max),
                _fmt(tw.min),
                _fmt(tw.avg),
                _fmt(tw.max),
                _fmt(q.min),
                _fmt(q.avg),
                _fmt(q.max),
                rec.quality_flag.value,
            ]
        )
    return out.getvalue()


def parse_station_csv(raw: bytes | str) -> tuple[list[Station], list[RowError]]:
    text = _decode(raw)
    if not text.strip():
        return [], []
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        return [], []
    _check_header(header, STATION_COLUMNS, None)

    stations: list[Station] = []
    errors: list[RowError] = []
    for row in reader:
        line = reader.line_num
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(STATION_COLUMNS):
            errors.append(RowError(line, f"expected {len(STATION_COLUMNS)} fields, found {len(row)}"))
            continue
        try:
            station = Station(
                station_id=row[0].strip(),
                station_name=row[1].strip(),
                river_name=row[2].strip(),
                latitude=_parse_float(row[3], "latitude"),
                longitude=_parse_float(row[4], "longitude"),
            )
        except ValueError as exc:
            errors.append(RowError(line, str(exc)))
            continue
        problems = station.violations()
        if problems:
            errors.append(RowError(line, "; ".join(problems)))
            continue
        stations.append(station)
    return stations, errors


def serialize_station_csv(stations: list[Station]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(STATION_COLUMNS)
    for st in stations:
        writer.writerow(
            [
                st.station_id,
                st.station_name,
                st.river_name,
                _fmt(st.latitude),
                _fmt(st.longitude),
            ]
        )
    return out.getvalue()
