"""HTTP facade: stations, series, thresholds, compliance, ingest, export.

All endpoints live under /v1. Responses are deterministic for a fixed
store state: thresholds carry computed_at = null, and report ids are
content hashes, so identical requests return identical bytes. Reports are
cached in memory (1 h TTL by default) for the export-after-compute flow.
"""

from __future__ import annotations

import datetime as dt
import re
import threading
import time
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Literal

from fastapi import FastAPI, Query, Request
from fastapi.encoders import jsonable_encoder
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field

from .compliance import (
    BioperiodCalendar,
    ComplianceQuery,
    ComplianceReport,
    compliance_report,
    render_compliance_csv,
    render_report_json,
    render_summary_csv,
    report_to_doc,
)
from .config import ServiceConfig
from .methods import (
    EflowMethodConfig,
    InsufficientCoverage,
    InsufficientSample,
    UnknownMethod,
    compute_eflow,
)
from .records import DailyRecord, QualityFlag, Statistic, Triple, Variable
from .store import NotFound, RecordStore

ERROR_STATUS = {
    "not_found": 404,
    "bad_request": 400,
    "insufficient_data": 422,
    "internal": 500,
}


class ServiceError(Exception):
    def __init__(self, code: str, message: str, detail=None):
        assert code in ERROR_STATUS
        super().__init__(message)
        self.code = code
        self.message = message
        self.detail = detail

    def to_doc(self) -> dict:
        return {"code": self.code, "message": self.message, "detail": self.detail}


# -- request schemas -------------------------------------------------------


class TripleDoc(BaseModel):
    min: float | None = None
    avg: float | None = None
    max: float | None = None

    def to_triple(self) -> Triple | None:
        if self.min is None and self.avg is None and self.max is None:
            return None
        return Triple(min=self.min, avg=self.avg, max=self.max)


class DailyRecordDoc(BaseModel):
    station_id: str
    date: dt.date
    wl: TripleDoc | None = None
    tw: TripleDoc | None = None
    q: TripleDoc | None = None
    quality_flag: Literal["observed", "estimated", "suspect"] = "observed"

    def to_record(self) -> DailyRecord:
        return DailyRecord(
            station_id=self.station_id,
            day=self.date,
            wl=self.wl.to_triple() if self.wl else None,
            tw=self.tw.to_triple() if self.tw else None,
            q=self.q.to_triple() if self.q else None,
            quality_flag=QualityFlag(self.quality_flag),
        )


class EflowsBody(BaseModel):
    station_ids: list[str] = Field(min_length=1)
    method_config: dict | None = None


class ComplianceBody(BaseModel):
    station_ids: list[str] = Field(min_length=1)
    year_range: tuple[int, int] | None = None
    start_date: dt.date | None = None
    end_date: dt.date | None = None
    calendar: dict | None = None
    method_config: dict | None = None

    def window(self) -> tuple[dt.date, dt.date]:
        if self.year_range is not None:
            if self.start_date is not None or self.end_date is not None:
                raise ServiceError("bad_request", "give either year_range or start/end dates, not both")
            y1, y2 = self.year_range
            if y1 > y2:
                raise ServiceError("bad_request", f"year_range out of order: [{y1}, {y2}]")
            return dt.date(y1, 1, 1), dt.date(y2, 12, 31)
        if self.start_date is None or self.end_date is None:
            raise ServiceError("bad_request", "either year_range or both start_date and end_date required")
        if self.start_date > self.end_date:
            raise ServiceError("bad_request", "start_date after end_date")
        return self.start_date, self.end_date


# -- report cache -----------------------------------------------------------


class ReportCache:
    """TTL cache of computed reports keyed by content id; thread-safe."""

    def __init__(self, ttl_s: float):
        self._ttl = ttl_s
        self._lock = threading.Lock()
        self._items: dict[str, tuple[float, ComplianceReport, dict]] = {}

    def put(self, report_id: str, report: ComplianceReport, doc: dict) -> None:
        now = time.monotonic()
        with self._lock:
            self._purge(now)
            self._items[report_id] = (now + self._ttl, report, doc)

    def get(self, report_id: str) -> tuple[ComplianceReport, dict] | None:
        now = time.monotonic()
        with self._lock:
            self._purge(now)
            entry = self._items.get(report_id)
            if entry is None:
                return None
            return entry[1], entry[2]

    def _purge(self, now: float) -> None:
        expired = [k for k, (deadline, _, _) in self._items.items() if deadline < now]
        for k in expired:
            del self._items[k]


# -- helpers ----------------------------------------------------------------


def _parse_method(doc: dict | None, base: EflowMethodConfig) -> EflowMethodConfig:
    if doc is None:
        return base
    try:
        return EflowMethodConfig.from_doc(doc, base=base)
    except (ValueError, KeyError, TypeError) as exc:
        raise ServiceError("bad_request", f"bad method_config: {exc}") from exc


def _parse_calendar(doc: dict | None, base: BioperiodCalendar) -> BioperiodCalendar:
    if doc is None:
        return base
    try:
        return BioperiodCalendar.from_doc(doc)
    except (ValueError, KeyError, TypeError) as exc:
        raise ServiceError("bad_request", f"bad calendar: {exc}") from exc


def export_filename(report: ComplianceReport, extension: str) -> str:
    ids = [re.sub(r"[^A-Za-z0-9_-]", "_", sid) for sid in report.query.station_ids]
    joined = "-".join(ids)
    if len(joined) > 40:
        joined = f"{len(ids)}stations"
    window = f"{report.query.start_date.isoformat()}_{report.query.end_date.isoformat()}"
    return f"eflows_{joined}_{window}.{extension}"


# -- application ------------------------------------------------------------


def create_app(
    config: ServiceConfig | None = None,
    store: RecordStore | None = None,
    ui_dir: Path | str | None = None,
) -> FastAPI:
    config = config or ServiceConfig()
    if store is None:
        store = RecordStore(config.data_directory)

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        store.flush()

    app = FastAPI(title="eflows compliance service", version="0.1.0", lifespan=lifespan)
    app.state.store = store
    app.state.config = config
    reports = ReportCache(config.report_cache_ttl_s)
    app.state.reports = reports

    @app.exception_handler(ServiceError)
    async def _service_error(_req: Request, exc: ServiceError):
        return JSONResponse(status_code=ERROR_STATUS[exc.code], content=exc.to_doc())

    @app.exception_handler(NotFound)
    async def _not_found(_req: Request, exc: NotFound):
        return JSONResponse(
            status_code=404, content={"code": "not_found", "message": str(exc), "detail": None}
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_req: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={
                "code": "bad_request",
                "message": "request schema violation",
                "detail": jsonable_encoder(exc.errors(), exclude={"input", "ctx"}),
            },
        )

    @app.exception_handler(Exception)
    async def _internal_error(_req: Request, exc: Exception):
        return JSONResponse(
            status_code=500,
            content={"code": "internal", "message": f"{type(exc).__name__}: {exc}", "detail": None},
        )

    @app.get("/v1/health")
    def health():
        snap = store.snapshot()
        return {"status": "ok", "stations": len(snap.station_ids()), "generation": snap.generation}

    @app.get("/v1/stations")
    def stations():
        return JSONResponse([st.to_doc() for st in store.stations()])

    @app.get("/v1/stations/{station_id}/series")
    def series(
        station_id: str,
        var: str = Query(...),
        stat: str = Query(...),
        from_date: dt.date = Query(..., alias="from"),
        to_date: dt.date = Query(..., alias="to"),
    ):
        try:
            variable = Variable(var)
            statistic = Statistic(stat)
        except ValueError as exc:
            raise ServiceError("bad_request", str(exc)) from exc
        if from_date > to_date:
            raise ServiceError("bad_request", "'from' after 'to'")
        result = store.query_series(station_id, variable, statistic, from_date, to_date)
        return JSONResponse(result.to_doc())

    @app.post("/v1/eflows")
    def eflows(body: EflowsBody):
        if len(body.station_ids) > config.max_request_stations:
            raise ServiceError(
                "bad_request",
                f"{len(body.station_ids)} stations exceeds limit {config.max_request_stations}",
            )
        method = _parse_method(body.method_config, config.default_method)
        snapshot = store.snapshot()
        out = []
        for station_id in body.station_ids:
            if not snapshot.has_station(station_id):
                out.append(
                    {"station_id": station_id, "code": "not_found", "message": f"unknown station: {station_id}"}
                )
                continue
            try:
                threshold = compute_eflow(station_id, method, snapshot)
            except (InsufficientSample, InsufficientCoverage) as exc:
                out.append({"station_id": station_id, "code": "insufficient_data", "message": str(exc)})
                continue
            except UnknownMethod as exc:
                raise ServiceError("bad_request", str(exc)) from exc
            out.append(threshold.to_doc(include_config=True))
        return JSONResponse(out)

    @app.post("/v1/compliance")
    def compliance(body: ComplianceBody):
        if len(body.station_ids) > config.max_request_stations:
            raise ServiceError(
                "bad_request",
                f"{len(body.station_ids)} stations exceeds limit {config.max_request_stations}",
            )
        start, end = body.window()
        calendar = _parse_calendar(body.calendar, config.default_calendar)
        method = _parse_method(body.method_config, config.default_method)
        query = ComplianceQuery(
            station_ids=tuple(body.station_ids),
            start_date=start,
            end_date=end,
            calendar=calendar,
            method_config=method,
        )
        report = compliance_report(query, store)
        doc = report_to_doc(report)
        reports.put(doc["report_id"], report, doc)
        return Response(content=render_report_json(doc), media_type="application/json")

    @app.get("/v1/export")
    def export(report_id: str = Query(...), format: str = Query("csv")):
        entry = reports.get(report_id)
        if entry is None:
            raise ServiceError("not_found", f"unknown or expired report_id: {report_id}")
        report, doc = entry
        if format == "csv":
            content, media, ext = render_compliance_csv(report), "text/csv", "csv"
        elif format == "summary":
            content, media, ext = render_summary_csv(report), "text/csv", "summary.csv"
        elif format == "json":
            content, media, ext = render_report_json(doc), "application/json", "json"
        else:
            raise ServiceError("bad_request", f"unsupported export format: {format}")
        filename = export_filename(report, ext)
        return Response(
            content=content,
            media_type=media,
            headers={"Content-Disposition": f'attachment; filename="{filename}"'},
        )

    @app.post("/v1/ingest")
    def ingest(records: list[DailyRecordDoc]):
        report = store.store_records([doc.to_record() for doc in records])
        return JSONResponse(report.to_doc())

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
