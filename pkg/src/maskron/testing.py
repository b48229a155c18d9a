"""In-process HTTP test double for the external detector protocol.

Usage::

    with FakeDetectorServer(responses=[{"entities": [...]}]) as srv:
        ep = ExternalEndpoint("fake", srv.url, boundary_acknowledged=True)
        detect_remote("hi Alice", ep)
        assert srv.detect_calls == 1

Canned responses are replayed in order; the last one repeats.  A response is
either a JSON-able dict (sent with 200), a ``CannedResponse``, or a callable
receiving the request text and returning either of those.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


@dataclass
class CannedResponse:
    body: object = None
    status: int = 200
    delay_s: float = 0.0

    def encoded(self) -> bytes:
        if isinstance(self.body, bytes):
            return self.body
        return json.dumps({"entities": []} if self.body is None else self.body).encode()


class FakeDetectorServer:
    def __init__(self, responses=None, *, health_status: int = 200, health_delay_s: float = 0.0,
                 path: str = "/detect"):
        self.responses = list(responses or [{"entities": []}])
        self.health_status = health_status
        self.health_delay_s = health_delay_s
        self.path = path
        self.requests: list[dict] = []
        self.health_calls = 0
        self._lock = threading.Lock()
        self._server = ThreadingHTTPServer(("127.0.0.1", 0), self._handler_class())
        self._server.daemon_threads = True
        self._thread = threading.Thread(target=self._server.serve_forever, args=(0.02,), daemon=True)

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}{self.path}"

    @property
    def detect_calls(self) -> int:
        return len(self.requests)

    def _next_response(self, text: str) -> CannedResponse:
        with self._lock:
            i = min(len(self.requests) - 1, len(self.responses) - 1)
            resp = self.responses[i]
        if callable(resp):
            resp = resp(text)
        return resp if isinstance(resp, CannedResponse) else CannedResponse(resp)

    def _handler_class(self):
        server = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def _send(self, status: int, body: bytes):
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                try:
                    self.wfile.write(body)
                except (BrokenPipeError, ConnectionResetError):
                    pass

            def do_GET(self):
                if self.path != server.path.rstrip("/") + "/health":
                    self._send(404, b"{}")
                    return
                with server._lock:
                    server.health_calls += 1
                time.sleep(server.health_delay_s)
                self._send(server.health_status, b'{"status": "ok"}')

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                raw = self.rfile.read(length)
                try:
                    text = json.loads(raw)["text"]
                except (ValueError, KeyError, TypeError):
                    text = None
                with server._lock:
                    server.requests.append(
                        {"path": self.path, "headers": dict(self.headers), "text": text}
                    )
                resp = server._next_response(text)
                time.sleep(resp.delay_s)
                self._send(resp.status, resp.encoded())

        return Handler

    def start(self) -> FakeDetectorServer:
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()
