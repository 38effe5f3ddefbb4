"""Shared sidecar test fixtures: toy backends and a live server harness."""

from __future__ import annotations

import threading
import time

import pytest
import uvicorn

from clip_sidecar.app import create_app
from clip_sidecar.config import SidecarConfig

SMALL = SidecarConfig(backend="toy", dim=768, layers=2, heads=4, max_len=16, seed=7)
FULL = SidecarConfig(backend="toy", dim=768, layers=12, heads=12, max_len=77, seed=7)


@pytest.fixture(scope="session")
def small_app():
    return create_app(SMALL)


@pytest.fixture(scope="session")
def full_app():
    return create_app(FULL)


class LiveServer:
    """Runs an ASGI app on an ephemeral port in a background thread."""

    def __init__(self, app):
        config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
        self.server = uvicorn.Server(config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)

    def __enter__(self) -> str:
        self.thread.start()
        deadline = time.time() + 10
        while not self.server.started:
            if time.time() > deadline:
                raise RuntimeError("server did not start")
            time.sleep(0.02)
        port = self.server.servers[0].sockets[0].getsockname()[1]
        return f"http://127.0.0.1:{port}"

    def __exit__(self, *exc):
        self.server.should_exit = True
        self.thread.join(timeout=10)


@pytest.fixture(scope="session")
def live_small_server(small_app):
    with LiveServer(small_app) as url:
        yield url
