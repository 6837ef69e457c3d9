import time
from pathlib import Path

import pytest

from searchexplain.mockserver import MockScript, MockServer

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def mock_server():
    """Factory: ``mock_server(mode=..., ...)`` starts a server torn down after the test."""
    servers = []

    def start(**kwargs):
        server = MockServer(MockScript(**kwargs)).start()
        servers.append(server)
        return server

    yield start
    for server in servers:
        server.stop()


ACCEPTANCE_LINES: list[str] = []


class _Criterion:
    def __init__(self, name: str, limit: float):
        self.name = name
        self.limit = limit

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        ok = exc_type is None and elapsed < self.limit
        detail = f"{elapsed:.2f}s / limit {self.limit:g}s"
        if exc_type is not None:
            detail += f"; {exc_type.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        line = f"{'PASS' if ok else 'FAIL'}  {self.name}  ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line, flush=True)
        if exc_type is None and not ok:
            raise AssertionError(f"{self.name}: runtime {elapsed:.2f}s exceeds {self.limit:g}s")
        return False


@pytest.fixture
def criterion():
    """``with criterion(name, limit_seconds):`` records one acceptance line."""
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
