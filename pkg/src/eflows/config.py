"""Service and CLI configuration.

One JSON document shape serves both surfaces:

    {
      "bind_address": "127.0.0.1:8080",
      "data_directory": "./data",
      "max_request_stations": 60,
      "method": { ...EflowMethodConfig fields... },
      "calendar": { "periods": [ {"name","start","end"}, ... ] }
    }

All keys are optional. Environment variables EFLOWS_BIND and
EFLOWS_DATA_DIR override the file; explicit CLI flags override both.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .compliance import DEFAULT_CALENDAR, BioperiodCalendar
from .methods import EflowMethodConfig

ENV_BIND = "EFLOWS_BIND"
ENV_DATA_DIR = "EFLOWS_DATA_DIR"


@dataclass
class ServiceConfig:
    bind_address: str = "127.0.0.1:8080"
    data_directory: Path = Path("./eflows-data")
    default_calendar: BioperiodCalendar = DEFAULT_CALENDAR
    default_method: EflowMethodConfig = field(default_factory=EflowMethodConfig)
    max_request_stations: int = 60
    report_cache_ttl_s: float = 3600.0

    def __post_init__(self):
        if self.max_request_stations < 1:
            raise ValueError("max_request_stations must be >= 1")

    @property
    def host(self) -> str:
        host, _, _ = self.bind_address.rpartition(":")
        return host or "127.0.0.1"

    @property
    def port(self) -> int:
        _, _, port = self.bind_address.rpartition(":")
        return int(port)


def load_config(
    path: Path | str | None = None,
    *,
    bind_address: str | None = None,
    data_directory: Path | str | None = None,
    env: dict | None = None,
) -> ServiceConfig:
    """Defaults <- config file <- environment <- explicit arguments."""
    env = os.environ if env is None else env
    doc: dict = {}
    if path is not None:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(doc, dict):
            raise ValueError("config file must hold a JSON object")

    config = ServiceConfig()
    if "bind_address" in doc:
        config.bind_address = str(doc["bind_address"])
    if "data_directory" in doc:
        config.data_directory = Path(doc["data_directory"])
    if "max_request_stations" in doc:
        config.max_request_stations = int(doc["max_request_stations"])
    if "report_cache_ttl_s" in doc:
        config.report_cache_ttl_s = float(doc["report_cache_ttl_s"])
    if doc.get("method") is not None:
        config.default_method = EflowMethodConfig.from_doc(doc["method"])
    if doc.get("calendar") is not None:
        config.default_calendar = BioperiodCalendar.from_doc(doc["calendar"])

    if env.get(ENV_BIND):
        config.bind_address = env[ENV_BIND]
    if env.get(ENV_DATA_DIR):
        config.data_directory = Path(env[ENV_DATA_DIR])
    if bind_address is not None:
        config.bind_address = bind_address
    if data_directory is not None:
        config.data_directory = Path(data_directory)
    config.__post_init__()
    return config
