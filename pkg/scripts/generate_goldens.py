#!/usr/bin/env python3
"""Regenerate the committed golden report files from the fixture CSV.

Deliberately independent of the eflows package: everything here is a flat
re-derivation (csv parsing, descending sort + integer rank arithmetic,
day-by-day counting, literal calendar windows) so the goldens pin the
documented file formats rather than echoing the engine's code paths.
Scalar statistics come from the standard library.

Usage:
    python scripts/generate_goldens.py [--fixture tests/golden/fixture_3x10.csv]
                                       [--out tests/golden]
"""

import argparse
import csv
import hashlib
import io
import json
import statistics
from datetime import date, timedelta
from pathlib import Path

START = date(2009, 1, 1)
END = date(2018, 12, 31)
P_PERCENT = 95
MONTH_WINDOW = [5, 6, 7, 8, 9, 10]
MIN_SAMPLE = 10
MIN_COVERAGE = 0.7

CALENDAR = [
    ("overwintering", (1, 1), (2, 29)),
    ("spring spawning", (3, 1), (6, 30)),
    ("rearing & growth", (7, 1), (9, 30)),
    ("fall spawning", (10, 1), (12, 31)),
]


def read_fixture(path: Path) -> dict[str, dict[date, float]]:
    """station -> day -> q_avg (only present values)."""
    data: dict[str, dict[date, float]] = {}
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            text = row["q_avg"]
            if not text:
                continue
            day = date.fromisoformat(row["date"])
            data.setdefault(row["station_id"], {})[day] = float(text)
    return data


def rank_index(p: int, n: int) -> int:
    """nint(p * (n + 1) / 100) rounded half away from zero, clamped to [1, n]."""
    whole, remainder = divmod(p * (n + 1), 100)
    rank = whole + (1 if remainder * 2 >= 100 else 0)
    return min(max(rank, 1), n)


def days_between(lo: date, hi: date):
    day = lo
    while day <= hi:
        yield day
        day += timedelta(days=1)


def clamp_day(year: int, month: int, day: int) -> date:
    while True:
        try:
            return date(year, month, day)
        except ValueError:
            day -= 1


def threshold_for(days: dict[date, float]) -> tuple[float, int, float]:
    """(q_env, sample size, window day coverage) for one station."""
    monthly_min: dict[tuple[int, int], float] = {}
    window_days = 0
    observed = 0
    for day in days_between(START, END):
        if day.month not in MONTH_WINDOW:
            continue
        window_days += 1
        value = days.get(day)
        if value is None:
            continue
        observed += 1
        key = (day.year, day.month)
        if key not in monthly_min or value < monthly_min[key]:
            monthly_min[key] = value
    sample = sorted(monthly_min.values(), reverse=True)
    if len(sample) < MIN_SAMPLE:
        raise SystemExit(f"fixture station has only {len(sample)} sample months")
    coverage = observed / window_days
    if coverage < MIN_COVERAGE:
        raise SystemExit(f"fixture station coverage {coverage} below {MIN_COVERAGE}")
    q_env = sample[rank_index(P_PERCENT, len(sample)) - 1]
    return q_env, len(sample), coverage


def segments_for_year(year: int) -> list[tuple[str, date, date]]:
    out = []
    for name, (sm, sd), (em, ed) in CALENDAR:
        out.append((name, clamp_day(year, sm, sd), clamp_day(year, em, ed)))
    return out


def main() -> None:
    parser = argparse.ArgumentParser()
    root = Path(__file__).resolve().parent.parent
    parser.add_argument("--fixture", type=Path, default=root / "tests/golden/fixture_3x10.csv")
    parser.add_argument("--out", type=Path, default=root / "tests/golden")
    args = parser.parse_args()

    data = read_fixture(args.fixture)
    stations = sorted(data)

    thresholds = []
    rows = []
    summaries = []
    for sid in stations:
        q_env, n, coverage = threshold_for(data[sid])
        thresholds.append(
            {"station_id": sid, "q_env": q_env, "n": n, "coverage": coverage, "computed_at": None}
        )
        per_period_counts: dict[str, list[tuple[int, int]]] = {name: [] for name, _, _ in CALENDAR}
        for year in range(START.year, END.year + 1):
            for name, lo, hi in segments_for_year(year):
                noncompliant = observed = total = 0
                for day in days_between(lo, hi):
                    total += 1
                    value = data[sid].get(day)
                    if value is None:
                        continue
                    observed += 1
                    if value < q_env:
                        noncompliant += 1
                per_period_counts[name].append((year, noncompliant))
                rows.append(
                    {
                        "station_id": sid,
                        "bioperiod": name,
                        "year": year,
                        "noncompliance_days": noncompliant,
                        "observed_days": observed,
                        "missing_days": total - observed,
                        "total_days": total,
                    }
                )
        for name, _, _ in CALENDAR:
            counts = [c for _, c in sorted(per_period_counts[name])]
            mean = sum(counts) / len(counts)
            sd = statistics.stdev(counts) if len(counts) > 1 else 0.0
            summaries.append(
                {
                    "station_id": sid,
                    "bioperiod": name,
                    "years_covered": len(counts),
                    "mean": mean,
                    "sd": sd,
                    "min": min(counts),
                    "max": max(counts),
                    "rendered": f"{mean:.2f} ± {sd:.2f} ({min(counts)}; {max(counts)})",
                }
            )

    # rows arrive grouped by station and year; reorder to bioperiod-major per station
    period_order = {name: i for i, (name, _, _) in enumerate(CALENDAR)}
    rows.sort(key=lambda r: (r["station_id"], period_order[r["bioperiod"]], r["year"]))

    doc = {
        "report_id": None,
        "query": {
            "station_ids": stations,
            "start_date": START.isoformat(),
            "end_date": END.isoformat(),
            "calendar": {
                "periods": [
                    {"name": name, "start": f"{sm:02d}-{sd:02d}", "end": f"{em:02d}-{ed:02d}"}
                    for name, (sm, sd), (em, ed) in CALENDAR
                ]
            },
            "method_config": {
                "method_id": "exceedance_quantile",
                "p": 95.0,
                "aggregation": "monthly_minimum",
                "month_window": MONTH_WINDOW,
                "daily_statistic": "avg",
                "reference_period": [START.isoformat(), END.isoformat()],
                "min_sample": MIN_SAMPLE,
                "min_coverage": MIN_COVERAGE,
            },
        },
        "thresholds": thresholds,
        "compliance": rows,
        "summaries": summaries,
        "errors": [],
    }
    body = {k: v for k, v in doc.items() if k != "report_id"}
    canonical = json.dumps(body, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    doc["report_id"] = hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    out = args.out
    out.mkdir(parents=True, exist_ok=True)

    detail = io.StringIO()
    writer = csv.writer(detail, lineterminator="\n")
    writer.writerow(
        ["station_id", "bioperiod", "year", "noncompliance_days", "observed_days", "missing_days", "total_days"]
    )
    for r in rows:
        writer.writerow(
            [r["station_id"], r["bioperiod"], r["year"], r["noncompliance_days"],
             r["observed_days"], r["missing_days"], r["total_days"]]
        )
    (out / "compliance.csv").write_text(detail.getvalue(), encoding="utf-8")

    summary = io.StringIO()
    writer = csv.writer(summary, lineterminator="\n")
    writer.writerow(["station_id", "bioperiod", "years_covered", "mean", "sd", "min", "max"])
    for s in summaries:
        writer.writerow(
            [s["station_id"], s["bioperiod"], s["years_covered"],
             f"{s['mean']:.2f}", f"{s['sd']:.2f}", s["min"], s["max"]]
        )
    (out / "summary.csv").write_text(summary.getvalue(), encoding="utf-8")

    (out / "report.json").write_text(
        json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    print(f"wrote goldens for {len(stations)} stations to {out}")


if __name__ == "__main__":
    main()
