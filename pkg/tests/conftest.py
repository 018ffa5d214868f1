import socket
import threading
import time
from pathlib import Path

import pytest
import uvicorn

from eflows.store import RecordStore
from eflows.synthetic import generate_synthetic, load_spec_file

GOLDEN_DIR = Path(__file__).parent / "golden"
FIXTURE_SEED = 42


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN_DIR


@pytest.fixture(scope="session")
def fixture_specs():
    return load_spec_file(GOLDEN_DIR / "fixture_spec.json")


@pytest.fixture(scope="session")
def fixture_store(fixture_specs) -> RecordStore:
    """In-memory store loaded with the seed-42 golden fixture."""
    store = RecordStore(None)
    for spec in fixture_specs:
        store.store_records(generate_synthetic(spec, FIXTURE_SEED))
    store.set_station_metadata([spec.station() for spec in fixture_specs])
    return store


class LiveServer:
    """uvicorn in a background thread on an ephemeral port."""

    def __init__(self, app):
        self._config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
        self.server = uvicorn.Server(self._config)
        self._thread = threading.Thread(target=self.server.run, daemon=True)
        self.url = ""

    def __enter__(self) -> "LiveServer":
        self._thread.start()
        deadline = time.time() + 15
        while not self.server.started:
            if time.time() > deadline:
                raise RuntimeError("server did not start in time")
            time.sleep(0.01)
        port = self.server.servers[0].sockets[0].getsockname()[1]
        self.url = f"http://127.0.0.1:{port}"
        return self

    def __exit__(self, *exc):
        self.server.should_exit = True
        self._thread.join(timeout=10)
        return False


@pytest.fixture()
def live_server_factory():
    return LiveServer


def free_port() -> int:
    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    return port
