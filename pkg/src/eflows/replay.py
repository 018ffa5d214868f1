"""Stream a daily-records file into a running service's ingest endpoint.

Emulates a constrained gateway: one batch in flight, no buffering beyond
it, optional fixed pace with jitter between batches. Every parsed record
is delivered exactly once in file order; a rejected batch is retried once,
then reported and skipped.
"""

from __future__ import annotations

import json
import random
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import httpx

from .csvio import parse_daily_csv

INGEST_PATH = "/v1/ingest"


class ReplayConnectionError(ConnectionError):
    pass


@dataclass(frozen=True)
class ReplaySpec:
    source_file: Path
    target_url: str
    batch_size: int = 1
    pace_s: float = 0.0
    jitter_fraction: float = 0.0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 <= self.jitter_fraction < 1.0:
            raise ValueError("jitter_fraction outside [0, 1)")
        if self.pace_s < 0.0:
            raise ValueError("pace_s must be >= 0")

    @property
    def ingest_url(self) -> str:
        base = self.target_url.rstrip("/")
        if base.endswith(INGEST_PATH):
            return base
        return base + INGEST_PATH


@dataclass
class ReplayStats:
    batches_sent: int = 0
    records_sent: int = 0
    batches_skipped: int = 0


def replay(
    spec: ReplaySpec,
    out=sys.stdout,
    err=sys.stderr,
    rng: random.Random | None = None,
) -> ReplayStats:
    rng = rng or random.Random()
    records, row_errors = parse_daily_csv(spec.source_file.read_bytes())
    for row_error in row_errors:
        print(f"{spec.source_file}: {row_error}", file=err)

    stats = ReplayStats()
    docs = [rec.to_doc() for rec in records]
    with httpx.Client(timeout=30.0) as client:
        for start in range(0, len(docs), spec.batch_size):
            batch = docs[start : start + spec.batch_size]
            index = start // spec.batch_size
            response = _post_with_retry(client, spec.ingest_url, batch, index, err)
            if response is None:
                stats.batches_skipped += 1
            else:
                stats.batches_sent += 1
                stats.records_sent += len(batch)
                ack = response.json()
                print(
                    f"batch {index}: records={len(batch)} inserted={ack.get('inserted')} "
                    f"replaced={ack.get('replaced')} rejected={ack.get('rejected')}",
                    file=out,
                )
            if spec.pace_s > 0:
                jitter = 1.0 + rng.uniform(-spec.jitter_fraction, spec.jitter_fraction)
                time.sleep(spec.pace_s * jitter)
    return stats


def _post_with_retry(client, url: str, batch: list[dict], index: int, err) -> httpx.Response | None:
    """One retry for any failure; connection failures that persist abort the replay."""
    last_exc: Exception | None = None
    for attempt in (1, 2):
        try:
            response = client.post(url, content=json.dumps(batch), headers={"content-type": "application/json"})
        except httpx.TransportError as exc:
            last_exc = exc
            continue
        if response.status_code == 200:
            return response
        if attempt == 2:
            print(f"batch {index}: rejected after retry ({response.status_code}): {response.text[:200]}", file=err)
            return None
        print(f"batch {index}: status {response.status_code}, retrying once", file=err)
    raise ReplayConnectionError(f"cannot reach {url}: {last_exc}")
