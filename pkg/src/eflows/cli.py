"""Batch front end: ingest files, run reports, generate fixtures, replay
records into a live service, or serve the HTTP API.

Exit codes: 0 success (data problems are reported inside the output),
2 usage or input error, 3 connectivity error. Standard output carries
data; diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import date, datetime, timezone
from pathlib import Path

from .compliance import (
    ComplianceQuery,
    compliance_report,
    render_compliance_csv,
    render_report_json,
    render_summary_csv,
    report_to_doc,
)
from .config import load_config
from .csvio import FormatError, parse_station_csv, serialize_daily_csv, serialize_station_csv
from .replay import ReplayConnectionError, ReplaySpec, replay
from .store import RecordStore, ingest_files
from .synthetic import InvalidSpec, generate_synthetic, load_spec_file

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONNECTIVITY = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eflows", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="parse daily CSV files into a data directory")
    p_ingest.add_argument("files", nargs="+", type=Path)
    p_ingest.add_argument("--data-dir", required=True, type=Path)
    p_ingest.add_argument("--stations", type=Path, help="station metadata CSV")

    p_report = sub.add_parser("report", help="run a compliance report over stored data")
    p_report.add_argument("--data-dir", required=True, type=Path)
    p_report.add_argument("--stations", help="comma-separated station ids (default: all)")
    p_report.add_argument("--from", dest="from_date", required=True, type=date.fromisoformat)
    p_report.add_argument("--to", dest="to_date", required=True, type=date.fromisoformat)
    p_report.add_argument("--config", type=Path, help="JSON config with method/calendar overrides")
    p_report.add_argument("--out", type=Path, help="directory for output files (default: stdout)")
    p_report.add_argument("--format", choices=["csv", "json", "both"], default="csv")
    p_report.add_argument(
        "--reproducible",
        action="store_true",
        help="zero computed_at timestamps so outputs are byte-stable",
    )

    p_synth = sub.add_parser("synth", help="write a deterministic synthetic fixture CSV")
    p_synth.add_argument("--spec", required=True, type=Path)
    p_synth.add_argument("--seed", required=True, type=int)
    p_synth.add_argument("--out", required=True, type=Path)
    p_synth.add_argument("--stations-out", type=Path, help="also write a station metadata CSV")

    p_replay = sub.add_parser("replay", help="stream a records file into a running service")
    p_replay.add_argument("file", type=Path)
    p_replay.add_argument("--target", required=True, help="service base URL")
    p_replay.add_argument("--batch-size", type=int, default=1)
    p_replay.add_argument("--pace", type=float, default=0.0, help="seconds between batches")
    p_replay.add_argument("--jitter", type=float, default=0.0, help="pace jitter fraction [0,1)")

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--config", type=Path)
    p_serve.add_argument("--bind", help="host:port (overrides config and EFLOWS_BIND)")
    p_serve.add_argument("--data-dir", type=Path, help="overrides config and EFLOWS_DATA_DIR")
    p_serve.add_argument("--ui-dir", type=Path, help="serve a built web client from this directory")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {
        "ingest": cmd_ingest,
        "report": cmd_report,
        "synth": cmd_synth,
        "replay": cmd_replay,
        "serve": cmd_serve,
    }[args.command]
    return handler(args)


def cmd_ingest(args) -> int:
    for path in args.files:
        if not path.is_file():
            print(f"error: no such file: {path}", file=sys.stderr)
            return EXIT_USAGE
    store = RecordStore(args.data_dir)
    if args.stations:
        if not args.stations.is_file():
            print(f"error: no such file: {args.stations}", file=sys.stderr)
            return EXIT_USAGE
        stations, station_errors = parse_station_csv(args.stations.read_bytes())
        for err in station_errors:
            print(f"{args.stations}: {err}", file=sys.stderr)
        store.set_station_metadata(stations)
    try:
        report, file_errors = ingest_files(store, args.files)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        store.close()
    for path, errors in file_errors:
        for err in errors:
            print(f"{path}: {err}", file=sys.stderr)
    for rejection in report.rejections:
        print(
            f"rejected: {rejection.station_id} {rejection.day}: {rejection.reason}",
            file=sys.stderr,
        )
    print(json.dumps(report.to_doc(), indent=2))
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        config = load_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"error: bad config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    store = RecordStore(args.data_dir)
    if args.stations:
        station_ids = tuple(s.strip() for s in args.stations.split(",") if s.strip())
    else:
        station_ids = tuple(store.station_ids())
    if not station_ids:
        print("error: no stations selected (store empty and no --stations given)", file=sys.stderr)
        return EXIT_USAGE

    query = ComplianceQuery(
        station_ids=station_ids,
        start_date=args.from_date,
        end_date=args.to_date,
        calendar=config.default_calendar,
        method_config=config.default_method,
    )
    clock = None if args.reproducible else (lambda: datetime.now(timezone.utc))
    report = compliance_report(query, store, clock=clock)
    for error in report.errors:
        print(f"station {error.station_id}: {error.code}: {error.message}", file=sys.stderr)

    doc = report_to_doc(report)
    outputs: dict[str, str] = {}
    if args.format in ("csv", "both"):
        outputs["compliance.csv"] = render_compliance_csv(report)
        outputs["summary.csv"] = render_summary_csv(report)
    if args.format in ("json", "both"):
        outputs["report.json"] = render_report_json(doc)

    if args.out is None:
        for content in outputs.values():
            sys.stdout.write(content)
    else:
        args.out.mkdir(parents=True, exist_ok=True)
        for name, content in outputs.items():
            (args.out / name).write_text(content, encoding="utf-8")
        print(
            f"report {doc['report_id']}: {len(report.thresholds)} stations, "
            f"{len(report.errors)} errors -> {args.out}",
            file=sys.stderr,
        )
    return EXIT_OK


def cmd_synth(args) -> int:
    if not args.spec.is_file():
        print(f"error: no such file: {args.spec}", file=sys.stderr)
        return EXIT_USAGE
    try:
        specs = load_spec_file(args.spec)
    except (InvalidSpec, ValueError) as exc:
        print(f"error: invalid spec: {exc}", file=sys.stderr)
        return EXIT_USAGE
    records = []
    for spec in specs:
        records.extend(generate_synthetic(spec, args.seed))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(serialize_daily_csv(records), encoding="utf-8")
    if args.stations_out:
        args.stations_out.parent.mkdir(parents=True, exist_ok=True)
        args.stations_out.write_text(
            serialize_station_csv([spec.station() for spec in specs]), encoding="utf-8"
        )
    print(f"wrote {len(records)} records for {len(specs)} stations to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_replay(args) -> int:
    if not args.file.is_file():
        print(f"error: no such file: {args.file}", file=sys.stderr)
        return EXIT_USAGE
    try:
        spec = ReplaySpec(
            source_file=args.file,
            target_url=args.target,
            batch_size=args.batch_size,
            pace_s=args.pace,
            jitter_fraction=args.jitter,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        stats = replay(spec)
    except ReplayConnectionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONNECTIVITY
    print(
        f"replay complete: {stats.batches_sent} batches, {stats.records_sent} records, "
        f"{stats.batches_skipped} skipped",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    try:
        config = load_config(args.config, bind_address=args.bind, data_directory=args.data_dir)
    except (OSError, ValueError) as exc:
        print(f"error: bad config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    app = create_app(config, ui_dir=args.ui_dir)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
