"""Deterministic synthetic station fixtures.

Daily average discharge follows base + amplitude * sin(2*pi*doy/365) plus
gaussian noise; min/max bracket the average multiplicatively so q stays
nonnegative and ordered. The noise is AR(1) with stationary standard
deviation noise_scale, so low-flow spells persist for days to weeks the
way real recessions do. Water level and temperature get plausible
seasonal shapes. A fixed (spec, seed) pair always produces byte-identical
record lists; the per-day random draws are independent of gap_fraction,
so adding gaps removes days without changing the surviving values.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from datetime import date
from pathlib import Path

from .records import DailyRecord, Station, Triple, date_range


class InvalidSpec(ValueError):
    pass


@dataclass(frozen=True)
class SyntheticStationSpec:
    station_id: str
    start_date: date
    end_date: date
    base_q: float
    seasonal_amplitude: float
    noise_scale: float
    gap_fraction: float = 0.0
    station_name: str = ""
    river_name: str = ""
    latitude: float | None = None
    longitude: float | None = None

    def validate(self) -> None:
        if not self.station_id:
            raise InvalidSpec("station_id is empty")
        if self.start_date > self.end_date:
            raise InvalidSpec("start_date after end_date")
        if not 0.0 <= self.gap_fraction < 1.0:
            raise InvalidSpec("gap_fraction outside [0, 1)")
        if self.seasonal_amplitude < 0 or self.noise_scale < 0:
            raise InvalidSpec("seasonal_amplitude and noise_scale must be >= 0")
        # 4 sigma of noise keeps q_avg > 0 in practice; clamped anyway
        if self.base_q <= self.seasonal_amplitude + 4.0 * self.noise_scale:
            raise InvalidSpec("base_q must exceed seasonal_amplitude + 4 * noise_scale")

    @classmethod
    def from_doc(cls, doc: dict) -> "SyntheticStationSpec":
        try:
            spec = cls(
                station_id=str(doc["station_id"]),
                start_date=date.fromisoformat(doc["start_date"]),
                end_date=date.fromisoformat(doc["end_date"]),
                base_q=float(doc["base_q"]),
                seasonal_amplitude=float(doc["seasonal_amplitude"]),
                noise_scale=float(doc["noise_scale"]),
                gap_fraction=float(doc.get("gap_fraction", 0.0)),
                station_name=str(doc.get("station_name", "")),
                river_name=str(doc.get("river_name", "")),
                latitude=None if doc.get("latitude") is None else float(doc["latitude"]),
                longitude=None if doc.get("longitude") is None else float(doc["longitude"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidSpec(f"bad synthetic spec: {exc}") from exc
        spec.validate()
        return spec

    def station(self) -> Station:
        return Station(
            station_id=self.station_id,
            station_name=self.station_name,
            river_name=self.river_name,
            latitude=self.latitude,
            longitude=self.longitude,
        )


AR1_RHO = 0.985  # day-to-day persistence of the discharge noise


def generate_synthetic(spec: SyntheticStationSpec, seed: int) -> list[DailyRecord]:
    spec.validate()
    rng = random.Random(f"{seed}:{spec.station_id}")
    two_pi = 2.0 * math.pi
    innovation_scale = spec.noise_scale * math.sqrt(1.0 - AR1_RHO**2)
    q_noise = rng.gauss(0.0, spec.noise_scale)
    records: list[DailyRecord] = []
    for day in date_range(spec.start_date, spec.end_date):
        doy = day.timetuple().tm_yday
        gap_draw = rng.random()
        q_noise = AR1_RHO * q_noise + rng.gauss(0.0, innovation_scale)
        q_lo = rng.uniform(0.05, 0.20)
        q_hi = rng.uniform(0.05, 0.20)
        wl_noise = rng.gauss(0.0, 4.0)
        wl_span = rng.uniform(2.0, 9.0)
        tw_noise = rng.gauss(0.0, 1.2)
        tw_span = rng.uniform(0.3, 1.5)
        if gap_draw < spec.gap_fraction:
            continue
        q_avg = max(
            0.0,
            spec.base_q + spec.seasonal_amplitude * math.sin(two_pi * doy / 365.0) + q_noise,
        )
        wl_avg = 120.0 + 60.0 * math.sin(two_pi * (doy + 30) / 365.0) + wl_noise
        tw_avg = 8.0 + 9.0 * math.sin(two_pi * (doy - 105) / 365.0) + tw_noise
        records.append(
            DailyRecord(
                station_id=spec.station_id,
                day=day,
                q=Triple(min=q_avg * (1.0 - q_lo), avg=q_avg, max=q_avg * (1.0 + q_hi)),
                wl=Triple(min=wl_avg - wl_span, avg=wl_avg, max=wl_avg + wl_span),
                tw=Triple(min=tw_avg - tw_span, avg=tw_avg, max=tw_avg + tw_span),
            )
        )
    return records


def load_spec_file(path: Path | str) -> list[SyntheticStationSpec]:
    """Read a fixture spec document: {"stations": [ {station fields...}, ... ]}."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    entries = doc.get("stations") if isinstance(doc, dict) else doc
    if not isinstance(entries, list) or not entries:
        raise InvalidSpec("spec file must contain a non-empty 'stations' list")
    return [SyntheticStationSpec.from_doc(entry) for entry in entries]
