"""CSV dialect, record store and synthetic fixture behaviour."""

import random
from datetime import date

import pytest

from eflows.csvio import (
    FormatError,
    parse_daily_csv,
    parse_station_csv,
    serialize_daily_csv,
    serialize_station_csv,
)
from eflows.records import DailyRecord, Station, Statistic, Triple, Variable, date_range
from eflows.store import NotFound, RecordStore
from eflows.synthetic import (
    InvalidSpec,
    SyntheticStationSpec,
    generate_synthetic,
    load_spec_file,
)

HEADER = "station_id,date,wl_min,wl_avg,wl_max,tw_min,tw_avg,tw_max,q_min,q_avg,q_max"


class TestParseDailyCsv:
    def test_q_only_row(self):
        text = HEADER + "\nNARVA,2018-07-01,,,,,,,130.0,150.0,170.0\n"
        records, errors = parse_daily_csv(text)
        assert errors == []
        assert len(records) == 1
        rec = records[0]
        assert rec.station_id == "NARVA"
        assert rec.day == date(2018, 7, 1)
        assert rec.q == Triple(130.0, 150.0, 170.0)
        assert rec.wl is None and rec.tw is None

    def test_ordering_violation_becomes_row_error(self):
        text = HEADER + "\nNARVA,2018-07-01,,,,,,,130.0,150.0,140.0\n"
        records, errors = parse_daily_csv(text)
        assert records == []
        assert len(errors) == 1
        assert "min ≤ avg ≤ max violated" in errors[0].reason
        assert errors[0].line == 2

    def test_negative_discharge_rejected(self):
        text = HEADER + "\nNARVA,2018-07-01,,,,,,,-1.0,2.0,3.0\n"
        _, errors = parse_daily_csv(text)
        assert len(errors) == 1 and "q_min < 0" in errors[0].reason

    def test_negative_water_level_allowed(self):
        text = HEADER + "\nNARVA,2018-07-01,-12.0,-10.0,-8.0,,,,,,\n"
        records, errors = parse_daily_csv(text)
        assert errors == [] and records[0].wl == Triple(-12.0, -10.0, -8.0)

    def test_empty_input(self):
        assert parse_daily_csv(b"") == ([], [])
        assert parse_daily_csv("   \n") == ([], [])

    def test_header_only(self):
        records, errors = parse_daily_csv(HEADER + "\n")
        assert records == [] and errors == []

    def test_header_mismatch_names_column(self):
        bad = HEADER.replace("q_avg", "q_mean")
        with pytest.raises(FormatError) as info:
            parse_daily_csv(bad + "\nX,2018-01-01,,,,,,,,1,1,1\n")
        assert "q_avg" in str(info.value)

    def test_quality_flag_column(self):
        text = HEADER + ",quality_flag\nX,2018-01-01,,,,,,,1.0,2.0,3.0,estimated\n"
        records, errors = parse_daily_csv(text)
        assert errors == []
        assert records[0].quality_flag.value == "estimated"

    def test_quality_flag_defaults_to_observed(self):
        text = HEADER + "\nX,2018-01-01,,,,,,,1.0,2.0,3.0\n"
        records, _ = parse_daily_csv(text)
        assert records[0].quality_flag.value == "observed"

    def test_unknown_quality_flag(self):
        text = HEADER + ",quality_flag\nX,2018-01-01,,,,,,,1.0,2.0,3.0,guessed\n"
        records, errors = parse_daily_csv(text)
        assert records == [] and "quality_flag" in errors[0].reason

    def test_bad_date_and_bad_number(self):
        text = (
            HEADER + "\n"
            "X,2018-13-01,,,,,,,1.0,2.0,3.0\n"
            "X,2018-01-01,,,,,,,oops,2.0,3.0\n"
            "X,2018-01-02,,,,,,,nan,2.0,3.0\n"
        )
        records, errors = parse_daily_csv(text)
        assert records == []
        assert [e.line for e in errors] == [2, 3, 4]

    def test_field_count_mismatch(self):
        text = HEADER + "\nX,2018-01-01,,,,,,,1.0,2.0\n"
        records, errors = parse_daily_csv(text)
        assert records == [] and "fields" in errors[0].reason

    def test_order_preserved_and_errors_do_not_abort(self):
        text = (
            HEADER + "\n"
            "B,2018-01-02,,,,,,,1.0,2.0,3.0\n"
            "A,bad-date,,,,,,,1.0,2.0,3.0\n"
            "A,2018-01-01,,,,,,,4.0,5.0,6.0\n"
        )
        records, errors = parse_daily_csv(text)
        assert [r.station_id for r in records] == ["B", "A"]
        assert len(errors) == 1

    def test_fixture_counts_match_calendar_oracle(self):
        # derived oracle: enumerate days of 2009-01-01..2018-12-31
        expected_days = sum(1 for _ in date_range(date(2009, 1, 1), date(2018, 12, 31)))
        assert expected_days == 3652
        specs = [
            SyntheticStationSpec(
                station_id=f"S{i}",
                start_date=date(2009, 1, 1),
                end_date=date(2018, 12, 31),
                base_q=40.0 + i,
                seasonal_amplitude=8.0,
                noise_scale=4.0,
                gap_fraction=0.0,
            )
            for i in range(3)
        ]
        records = [rec for spec in specs for rec in generate_synthetic(spec, 42)]
        text = serialize_daily_csv(records)
        parsed, errors = parse_daily_csv(text)
        assert errors == []
        per_station = {sid: 0 for sid in ("S0", "S1", "S2")}
        for rec in parsed:
            per_station[rec.station_id] += 1
        assert all(count == expected_days for count in per_station.values())
        assert len(text.splitlines()) == 3 * expected_days + 1  # header line

    def test_round_trip_stability(self):
        spec = SyntheticStationSpec(
            station_id="RT",
            start_date=date(2015, 1, 1),
            end_date=date(2015, 12, 31),
            base_q=12.0,
            seasonal_amplitude=2.0,
            noise_scale=1.5,
            gap_fraction=0.2,
        )
        records = generate_synthetic(spec, 9)
        once, _ = parse_daily_csv(serialize_daily_csv(records))
        twice, _ = parse_daily_csv(serialize_daily_csv(once))
        assert once == records
        assert twice == once


class TestStationCsv:
    def test_round_trip(self):
        text = (
            "station_id,station_name,river_name,latitude,longitude\n"
            "ALDER,Alder Bridge,Alder River,59.12,27.63\n"
        )
        stations, errors = parse_station_csv(text)
        assert errors == []
        assert stations[0].latitude == 59.12
        again, _ = parse_station_csv(serialize_station_csv(stations))
        assert again == stations

    def test_out_of_range_latitude(self):
        text = "station_id,station_name,river_name,latitude,longitude\nX,N,R,95.0,20.0\n"
        stations, errors = parse_station_csv(text)
        assert stations == [] and "latitude" in errors[0].reason


def _record(sid: str, day: date, q_avg: float) -> DailyRecord:
    return DailyRecord(station_id=sid, day=day, q=Triple(q_avg - 1, q_avg, q_avg + 1))


class TestRecordStore:
    def test_insert_replace_reject_counts(self):
        store = RecordStore(None)
        batch = [_record("A", date(2018, 1, 1 + i), 10.0) for i in range(10)]
        report = store.store_records(batch)
        assert (report.inserted, report.replaced, report.rejected) == (10, 0, 0)
        report = store.store_records(batch)
        assert (report.inserted, report.replaced, report.rejected) == (0, 10, 0)
        bad = DailyRecord(station_id="A", day=date(2018, 2, 1), q=Triple(5.0, 4.0, 3.0))
        report = store.store_records([bad])
        assert (report.inserted, report.replaced, report.rejected) == (0, 0, 1)
        assert report.rejections[0].station_id == "A"

    def test_idempotent_batches(self):
        store = RecordStore(None)
        batch = [_record("A", date(2018, 1, 1 + i), float(i)) for i in range(20)]
        store.store_records(batch)
        snap_once = store.snapshot().records
        store.store_records(batch)
        assert store.snapshot().records == snap_once

    def test_last_write_wins(self):
        store = RecordStore(None)
        day = date(2018, 6, 1)
        store.store_records([_record("A", day, 10.0), _record("A", day, 20.0)])
        series = store.query_series("A", Variable.Q, Statistic.AVG, day, day)
        assert series.points[0][1] == 20.0

    def test_query_series_echoes_exact_values(self):
        store = RecordStore(None)
        values = [random.Random(3).uniform(1, 99) for _ in range(10)]
        batch = [_record("A", date(2018, 3, 1 + i), v) for i, v in enumerate(values)]
        store.store_records(batch)
        series = store.query_series("A", Variable.Q, Statistic.AVG, date(2018, 3, 1), date(2018, 3, 10))
        assert [v for _, v in series.points] == values
        assert series.coverage == 1.0

    def test_query_with_gaps(self):
        store = RecordStore(None)
        stored_days = [1, 4, 9]
        store.store_records([_record("A", date(2018, 5, d), 1.0) for d in stored_days])
        series = store.query_series("A", Variable.Q, Statistic.AVG, date(2018, 5, 1), date(2018, 5, 10))
        assert series.total_days == 10
        assert series.present_count == 3
        assert series.coverage == pytest.approx(0.3)
        gaps = [d.day for d, v in series.points if v is None]
        assert gaps == [2, 3, 5, 6, 7, 8, 10]

    def test_single_day_window(self):
        store = RecordStore(None)
        store.store_records([_record("A", date(2018, 7, 1), 2.0)])
        series = store.query_series("A", Variable.Q, Statistic.AVG, date(2018, 7, 1), date(2018, 7, 1))
        assert len(series.points) == 1

    def test_unknown_station(self):
        store = RecordStore(None)
        with pytest.raises(NotFound):
            store.query_series("NOPE", Variable.Q, Statistic.AVG, date(2018, 1, 1), date(2018, 1, 2))

    def test_inverted_window_rejected(self):
        store = RecordStore(None)
        store.store_records([_record("A", date(2018, 7, 1), 2.0)])
        with pytest.raises(ValueError):
            store.query_series("A", Variable.Q, Statistic.AVG, date(2018, 7, 2), date(2018, 7, 1))

    def test_missing_statistic_is_gap(self):
        store = RecordStore(None)
        rec = DailyRecord(station_id="A", day=date(2018, 1, 1), q=Triple(min=1.0, avg=None, max=None))
        store.store_records([rec])
        series = store.query_series("A", Variable.Q, Statistic.AVG, date(2018, 1, 1), date(2018, 1, 1))
        assert series.points[0][1] is None
        series_min = store.query_series("A", Variable.Q, Statistic.MIN, date(2018, 1, 1), date(2018, 1, 1))
        assert series_min.points[0][1] == 1.0

    def test_persistence_round_trip(self, tmp_path):
        store = RecordStore(tmp_path / "data")
        batch = [_record("A/B", date(2018, 1, 1 + i), float(i + 1)) for i in range(5)]
        store.store_records(batch)
        store.set_station_metadata([Station("A/B", "Slash", "River", 58.0, 25.0)])
        store.close()
        reopened = RecordStore(tmp_path / "data")
        assert reopened.station_ids() == ["A/B"]
        series = reopened.query_series("A/B", Variable.Q, Statistic.AVG, date(2018, 1, 1), date(2018, 1, 5))
        assert [v for _, v in series.points] == [1.0, 2.0, 3.0, 4.0, 5.0]
        stations = reopened.stations()
        assert stations[0].station_name == "Slash"

    def test_batch_is_atomic_for_readers(self):
        store = RecordStore(None)
        store.store_records([_record("A", date(2018, 1, 1), 1.0)])
        snap = store.snapshot()
        store.store_records([_record("A", date(2018, 1, 2), 2.0), _record("A", date(2018, 1, 3), 3.0)])
        # old snapshot still sees exactly one record
        assert snap.record_count("A") == 1
        assert store.snapshot().record_count("A") == 3

    def test_station_percentiles(self):
        store = RecordStore(None)
        for sid, q in (("BIG", 100.0), ("MID", 10.0), ("SMALL", 1.0)):
            store.store_records([_record(sid, date(2018, 1, 1 + i), q) for i in range(5)])
        by_id = {st.station_id: st for st in store.stations()}
        assert by_id["BIG"].size_percentile == 100.0
        assert by_id["MID"].size_percentile == pytest.approx(200.0 / 3)
        assert by_id["SMALL"].size_percentile == pytest.approx(100.0 / 3)
        assert by_id["BIG"].mean_annual_discharge == pytest.approx(100.0)


class TestSynthetic:
    BASE = dict(
        start_date=date(2015, 1, 1),
        end_date=date(2017, 9, 26),  # 1000 days
        base_q=30.0,
        seasonal_amplitude=5.0,
        noise_scale=3.0,
    )

    def test_deterministic_for_seed(self):
        spec = SyntheticStationSpec(station_id="D", gap_fraction=0.3, **self.BASE)
        assert generate_synthetic(spec, 42) == generate_synthetic(spec, 42)
        assert generate_synthetic(spec, 42) != generate_synthetic(spec, 43)

    def test_zero_gap_covers_every_day(self):
        spec = SyntheticStationSpec(station_id="D", gap_fraction=0.0, **self.BASE)
        records = generate_synthetic(spec, 42)
        expected = sum(1 for _ in date_range(self.BASE["start_date"], self.BASE["end_date"]))
        assert len(records) == expected

    def test_gap_fraction_portion_omitted(self):
        spec = SyntheticStationSpec(station_id="D", gap_fraction=0.3, **self.BASE)
        records = generate_synthetic(spec, 42)
        total = sum(1 for _ in date_range(self.BASE["start_date"], self.BASE["end_date"]))
        assert total == 1000
        omitted = total - len(records)  # direct count oracle
        assert 280 <= omitted <= 320
        assert 680 <= len(records) <= 720

    def test_records_satisfy_invariants(self):
        spec = SyntheticStationSpec(station_id="D", gap_fraction=0.1, **self.BASE)
        for rec in generate_synthetic(spec, 5):
            assert rec.violations() == []

    def test_follows_documented_shape(self):
        import math

        spec = SyntheticStationSpec(station_id="D", gap_fraction=0.0, **self.BASE)
        records = generate_synthetic(spec, 11)
        # seasonal mean recovered within noise tolerance on annual window
        year = [r.q.avg for r in records if r.day.year == 2016]
        assert abs(sum(year) / len(year) - spec.base_q) < 3 * spec.noise_scale
        for rec in records[:50]:
            assert rec.q.min <= rec.q.avg <= rec.q.max
            assert rec.q.min >= 0.0
            assert math.isfinite(rec.q.avg)

    def test_invalid_specs(self):
        with pytest.raises(InvalidSpec):
            SyntheticStationSpec(station_id="D", gap_fraction=1.0, **self.BASE).validate()
        bad = dict(self.BASE)
        bad["base_q"] = 10.0  # <= amplitude + 4 * noise
        with pytest.raises(InvalidSpec):
            SyntheticStationSpec(station_id="D", **bad).validate()

    def test_spec_file_loader(self, golden_dir):
        specs = load_spec_file(golden_dir / "fixture_spec.json")
        assert [s.station_id for s in specs] == ["ALDER", "BIRCH", "CEDAR"]
