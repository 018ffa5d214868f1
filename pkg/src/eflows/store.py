"""File-backed store of daily station records.

Layout is a single directory: one CSV per station (the documented dialect)
plus ``index.json``. All reads run against immutable snapshots; a write
builds fresh dicts and publishes them with one reference swap, so a query
never observes a half-applied batch. Collisions on (station, day) are
last-write-wins.

Disk writes are debounced (mutated stations are rewritten at most about
once per second); call flush() or close() to force persistence.
"""

from __future__ import annotations

import functools
import json
import os
import threading
import time
import urllib.parse
from dataclasses import dataclass, replace
from datetime import date
from pathlib import Path

from .csvio import parse_daily_csv, parse_station_csv, serialize_daily_csv
from .records import DailyRecord, DailySeries, Station, Statistic, Variable

INDEX_NAME = "index.json"
FLUSH_INTERVAL_S = 1.0


@functools.lru_cache(maxsize=8)
def _window_dates(start_ordinal: int, end_ordinal: int) -> tuple[date, ...]:
    """Shared date tuple for a query window; multi-station reports reuse it."""
    return tuple(date.fromordinal(o) for o in range(start_ordinal, end_ordinal + 1))


class NotFound(KeyError):
    def __init__(self, station_id: str):
        super().__init__(station_id)
        self.station_id = station_id

    def __str__(self) -> str:
        return f"unknown station: {self.station_id}"


@dataclass(frozen=True)
class RejectedRecord:
    station_id: str
    day: str
    reason: str

    def to_doc(self) -> dict:
        return {"station_id": self.station_id, "date": self.day, "reason": self.reason}


@dataclass(frozen=True)
class IngestReport:
    inserted: int
    replaced: int
    rejected: int
    rejections: tuple[RejectedRecord, ...] = ()

    def to_doc(self) -> dict:
        return {
            "inserted": self.inserted,
            "replaced": self.replaced,
            "rejected": self.rejected,
            "rejections": [r.to_doc() for r in self.rejections],
        }


@dataclass(frozen=True)
class StoreSnapshot:
    """Immutable view of the store; safe to use across threads without locks."""

    records: dict[str, dict[int, DailyRecord]]
    meta: dict[str, Station]
    q_avg_sums: dict[str, tuple[float, int]]
    generation: int

    def station_ids(self) -> list[str]:
        return sorted(set(self.records) | set(self.meta))

    def has_station(self, station_id: str) -> bool:
        return station_id in self.records or station_id in self.meta

    def record_count(self, station_id: str) -> int:
        return len(self.records.get(station_id, ()))

    def extent(self, station_id: str) -> tuple[date, date] | None:
        days = self.records.get(station_id)
        if not days:
            return None
        return date.fromordinal(min(days)), date.fromordinal(max(days))

    def query_series(
        self,
        station_id: str,
        variable: Variable,
        statistic: Statistic,
        start_date: date,
        end_date: date,
    ) -> DailySeries:
        """Stored values echoed exactly, one point per day, gaps as None."""
        if start_date > end_date:
            raise ValueError(f"start_date {start_date} after end_date {end_date}")
        if not self.has_station(station_id):
            raise NotFound(station_id)
        variable = Variable(variable)
        statistic = Statistic(statistic)
        days = self.records.get(station_id, {})
        start_ordinal = start_date.toordinal()
        window = _window_dates(start_ordinal, end_date.toordinal())
        points: list[tuple[date, float | None]] = []
        for offset, day in enumerate(window):
            rec = days.get(start_ordinal + offset)
            value = None if rec is None else rec.value(variable, statistic)
            points.append((day, value))
        return DailySeries(
            station_id=station_id,
            variable=variable,
            statistic=statistic,
            start_date=start_date,
            end_date=end_date,
            points=tuple(points),
        )

    def stations(self) -> list[Station]:
        """All stations with derived mean discharge and size percentile, by id."""
        means: dict[str, float] = {}
        for sid, (total, count) in self.q_avg_sums.items():
            if count:
                means[sid] = total / count
        ranked = sorted(means, key=lambda sid: (means[sid], sid))
        percentile = {sid: 100.0 * (i + 1) / len(ranked) for i, sid in enumerate(ranked)}
        out: list[Station] = []
        for sid in self.station_ids():
            base = self.meta.get(sid, Station(station_id=sid))
            out.append(
                replace(
                    base,
                    mean_annual_discharge=means.get(sid),
                    size_percentile=percentile.get(sid),
                )
            )
        return out


def _empty_snapshot() -> StoreSnapshot:
    return StoreSnapshot(records={}, meta={}, q_avg_sums={}, generation=0)


def _station_filename(station_id: str) -> str:
    return urllib.parse.quote(station_id, safe="") + ".csv"


class RecordStore:
    """Mutable handle over snapshots; many readers, single writer."""

    def __init__(self, data_dir: Path | str | None = None):
        self._lock = threading.RLock()
        self._snapshot = _empty_snapshot()
        self._dir = Path(data_dir) if data_dir is not None else None
        self._dirty: set[str] = set()
        self._meta_dirty = False
        self._last_flush = time.monotonic()
        if self._dir is not None:
            self._dir.mkdir(parents=True, exist_ok=True)
            self._load()

    # -- reads ----------------------------------------------------------

    def snapshot(self) -> StoreSnapshot:
        return self._snapshot

    def query_series(self, station_id, variable, statistic, start_date, end_date) -> DailySeries:
        return self._snapshot.query_series(station_id, variable, statistic, start_date, end_date)

    def stations(self) -> list[Station]:
        return self._snapshot.stations()

    def station_ids(self) -> list[str]:
        return self._snapshot.station_ids()

    @property
    def generation(self) -> int:
        return self._snapshot.generation

    # -- writes ---------------------------------------------------------

    def store_records(self, records: list[DailyRecord]) -> IngestReport:
        """Apply a batch atomically; later records for the same key win."""
        inserted = replaced = 0
        rejections: list[RejectedRecord] = []
        valid: list[DailyRecord] = []
        for rec in records:
            problems = rec.violations()
            if problems:
                rejections.append(
                    RejectedRecord(rec.station_id, rec.day.isoformat(), "; ".join(problems))
                )
            else:
                valid.append(rec)

        with self._lock:
            snap = self._snapshot
            new_records = dict(snap.records)
            new_sums = dict(snap.q_avg_sums)
            touched: dict[str, dict[int, DailyRecord]] = {}
            for rec in valid:
                sid = rec.station_id
                if sid not in touched:
                    touched[sid] = dict(new_records.get(sid, {}))
                    new_records[sid] = touched[sid]
                days = touched[sid]
                ordinal = rec.day.toordinal()
                old = days.get(ordinal)
                if old is None:
                    inserted += 1
                else:
                    replaced += 1
                days[ordinal] = rec
                total, count = new_sums.get(sid, (0.0, 0))
                old_avg = None if old is None or old.q is None else old.q.avg
                if old_avg is not None:
                    total -= old_avg
                    count -= 1
                new_avg = None if rec.q is None else rec.q.avg
                if new_avg is not None:
                    total += new_avg
                    count += 1
                new_sums[sid] = (total, count)
            self._snapshot = StoreSnapshot(
                records=new_records,
                meta=snap.meta,
                q_avg_sums=new_sums,
                generation=snap.generation + 1,
            )
            self._dirty.update(touched)
            self._maybe_flush()
        return IngestReport(
            inserted=inserted,
            replaced=replaced,
            rejected=len(rejections),
            rejections=tuple(rejections),
        )

    def set_station_metadata(self, stations: list[Station]) -> int:
        """Upsert station metadata; returns how many entries were applied."""
        applied = 0
        with self._lock:
            snap = self._snapshot
            new_meta = dict(snap.meta)
            for st in stations:
                if st.violations():
                    continue
                new_meta[st.station_id] = Station(
                    station_id=st.station_id,
                    station_name=st.station_name,
                    river_name=st.river_name,
                    latitude=st.latitude,
                    longitude=st.longitude,
                )
                applied += 1
            self._snapshot = StoreSnapshot(
                records=snap.records,
                meta=new_meta,
                q_avg_sums=snap.q_avg_sums,
                generation=snap.generation + 1,
            )
            self._meta_dirty = True
            self._maybe_flush()
        return applied

    # -- persistence ----------------------------------------------------

    def _maybe_flush(self) -> None:
        if self._dir is None:
            return
        if time.monotonic() - self._last_flush >= FLUSH_INTERVAL_S:
            self.flush()

    def flush(self) -> None:
        """Rewrite mutated station files and the index; atomic per file."""
        if self._dir is None:
            return
        with self._lock:
            snap = self._snapshot
            dirty = set(self._dirty)
            meta_dirty = self._meta_dirty or bool(dirty)
            self._dirty.clear()
            self._meta_dirty = False
            self._last_flush = time.monotonic()
        for sid in sorted(dirty):
            days = snap.records.get(sid, {})
            recs = [days[o] for o in sorted(days)]
            self._write_atomic(self._dir / _station_filename(sid), serialize_daily_csv(recs))
        if meta_dirty:
            index = {
                "version": 1,
                "stations": {
                    sid: {
                        "file": _station_filename(sid) if sid in snap.records else None,
                        "records": snap.record_count(sid),
                        "station_name": snap.meta[sid].station_name if sid in snap.meta else "",
                        "river_name": snap.meta[sid].river_name if sid in snap.meta else "",
                        "latitude": snap.meta[sid].latitude if sid in snap.meta else None,
                        "longitude": snap.meta[sid].longitude if sid in snap.meta else None,
                    }
                    for sid in snap.station_ids()
                },
            }
            self._write_atomic(self._dir / INDEX_NAME, json.dumps(index, indent=2) + "\n")

    @staticmethod
    def _write_atomic(path: Path, text: str) -> None:
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(text, encoding="utf-8")
        os.replace(tmp, path)

    def close(self) -> None:
        with self._lock:
            self._dirty.update(self._snapshot.records)
            self._meta_dirty = True
            self.flush()

    def _load(self) -> None:
        index_path = self._dir / INDEX_NAME
        if not index_path.exists():
            return
        index = json.loads(index_path.read_text(encoding="utf-8"))
        stations: list[Station] = []
        all_records: list[DailyRecord] = []
        for sid, entry in index.get("stations", {}).items():
            if entry.get("station_name") or entry.get("latitude") is not None:
                stations.append(
                    Station(
                        station_id=sid,
                        station_name=entry.get("station_name") or "",
                        river_name=entry.get("river_name") or "",
                        latitude=entry.get("latitude"),
                        longitude=entry.get("longitude"),
                    )
                )
            filename = entry.get("file")
            if filename:
                path = self._dir / filename
                if path.exists():
                    records, _ = parse_daily_csv(path.read_bytes())
                    all_records.extend(records)
        if all_records:
            self.store_records(all_records)
        if stations:
            self.set_station_metadata(stations)
        # loading must not mark everything for rewrite
        with self._lock:
            self._dirty.clear()
            self._meta_dirty = False


def ingest_files(
    store: RecordStore, paths: list[Path]
) -> tuple[IngestReport, list[tuple[Path, list]]]:
    """Parse and store several daily CSV files; returns the merged report
    plus per-file row errors."""
    all_errors: list[tuple[Path, list]] = []
    inserted = replaced = rejected = 0
    rejections: list[RejectedRecord] = []
    for path in paths:
        records, row_errors = parse_daily_csv(path.read_bytes())
        if row_errors:
            all_errors.append((path, row_errors))
        report = store.store_records(records)
        inserted += report.inserted
        replaced += report.replaced
        rejected += report.rejected
        rejections.extend(report.rejections)
    store.flush()
    return (
        IngestReport(inserted, replaced, rejected, tuple(rejections)),
        all_errors,
    )
