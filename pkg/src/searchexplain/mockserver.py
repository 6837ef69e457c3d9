"""Scriptable OpenAI-compatible mock endpoint for offline runs and tests.

Modes:
    echo          reply with the last user message
    fixed-text    reply with a constant text, or with a per-prompt lookup
                  (``responses`` maps input text to output text)
    fail-n-times  answer the first ``fail_times`` requests with ``fail_status``,
                  then behave like echo / fixed-text
    delay         sleep ``delay`` seconds, then echo

``fail_matching`` makes any prompt containing that substring fail every time,
whatever the mode.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Mapping

log = logging.getLogger(__name__)

MODES = ("echo", "fixed-text", "fail-n-times", "delay")


@dataclass
class MockScript:
    mode: str = "echo"
    text: str | None = None
    responses: Mapping[str, str] | None = None
    fail_times: int = 0
    fail_status: int = 429
    fail_matching: str | None = None
    delay: float = 0.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mock mode {self.mode!r} (choose from {', '.join(MODES)})")


@dataclass
class MockStats:
    requests: int = 0
    in_flight: int = 0
    max_in_flight: int = 0
    statuses: list[int] = field(default_factory=list)
    prompts: list[str] = field(default_factory=list)


class _Handler(BaseHTTPRequestHandler):
    server: "_Server"
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        log.debug("mock: " + fmt, *args)

    def _send(self, status: int, body: dict) -> None:
        data = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self):
        if self.path.rstrip("/") in ("/health", "/v1/models"):
            self._send(200, {"status": "ok", "data": [{"id": "mock"}]})
        else:
            self._send(404, {"error": {"message": "not found"}})

    def do_POST(self):
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length)
        if self.path.rstrip("/") != "/v1/chat/completions":
            self._send(404, {"error": {"message": "not found"}})
            return
        mock = self.server.mock
        with mock.lock:
            mock.stats.requests += 1
            mock.stats.in_flight += 1
            mock.stats.max_in_flight = max(mock.stats.max_in_flight, mock.stats.in_flight)
            seq = mock.stats.requests
        try:
            status, body = mock.respond(raw, seq)
            with mock.lock:
                mock.stats.statuses.append(status)
            self._send(status, body)
        finally:
            with mock.lock:
                mock.stats.in_flight -= 1


class _Server(ThreadingHTTPServer):
    daemon_threads = True
    mock: "MockServer"


class MockServer:
    """Run the mock on a background thread; usable as a context manager."""

    def __init__(self, script: MockScript | None = None, host: str = "127.0.0.1", port: int = 0):
        self.script = script or MockScript()
        self.stats = MockStats()
        self.lock = threading.Lock()
        self._httpd = _Server((host, port), _Handler)
        self._httpd.mock = self
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def respond(self, raw: bytes, seq: int) -> tuple[int, dict]:
        script = self.script
        try:
            req = json.loads(raw)
            prompt = req["messages"][-1]["content"]
            model = req.get("model", "mock")
        except (ValueError, KeyError, IndexError, TypeError):
            return 400, {"error": {"message": "bad request body"}}
        with self.lock:
            self.stats.prompts.append(prompt)
        if script.fail_matching is not None and script.fail_matching in prompt:
            return 500, {"error": {"message": "scripted failure"}}
        if script.mode == "fail-n-times" and seq <= script.fail_times:
            return script.fail_status, {"error": {"message": f"scripted failure {seq}"}}
        if script.mode == "delay" and script.delay > 0:
            time.sleep(script.delay)

        if script.responses is not None and prompt in script.responses:
            text = script.responses[prompt]
        elif script.text is not None:
            text = script.text
        else:
            text = prompt
        return 200, {
            "id": f"mock-{seq}",
            "object": "chat.completion",
            "created": 0,
            "model": model,
            "choices": [
                {"index": 0, "message": {"role": "assistant", "content": text}, "finish_reason": "stop"}
            ],
            "usage": {
                "prompt_tokens": len(prompt.split()),
                "completion_tokens": len(text.split()),
                "total_tokens": len(prompt.split()) + len(text.split()),
            },
        }

    def start(self) -> "MockServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join()

    def serve_forever(self) -> None:
        try:
            self._httpd.serve_forever()
        finally:
            self._httpd.server_close()

    def __enter__(self) -> "MockServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
