"""Adapter for remote model-backed detectors (fine-tuned NER models, LLM wrappers).

Wire protocol, UTF-8 JSON over HTTP(S)::

    POST <url>
    Authorization: Bearer <credential read from $api_key_env>
    {"text": "<document>"}

    200 {"entities": [{"start": int, "end": int, "type": str, "confidence": number}]}

Offsets are UTF-8 byte offsets.  Every returned span is re-checked against the
text locally; bad entities are dropped and counted, never trusted.
``GET <url>/health`` answers liveness probes.

Nothing is sent unless the endpoint was configured with
``boundary_acknowledged=True`` (the ``external_data_leaves_boundary`` config
flag): a hosted service may retain what it is sent.
"""

from __future__ import annotations

import json
import logging
import os
import random
import threading
import time
from collections import Counter
from dataclasses import dataclass, field
from urllib.parse import urlparse

import httpx

from maskron.errors import (
    AuthFailed,
    BadResponse,
    BoundaryNotAcknowledged,
    InvalidPiiType,
    Timeout,
    Unreachable,
    ValidationError,
)
from maskron.model import Detection, PiiType, Span, TextIndex

log = logging.getLogger(__name__)

MAX_RETRIES = 5
BACKOFF_BASE_S = 0.1


@dataclass(frozen=True)
class ExternalEndpoint:
    name: str
    url: str
    timeout_ms: int = 5000
    max_retries: int = 2
    confidence_floor: float = 0.5
    api_key_env: str | None = None
    boundary_acknowledged: bool = False

    def __post_init__(self):
        if not self.name or ":" in self.name:
            raise ValidationError(f"endpoint name must be non-empty and colon-free: {self.name!r}")
        if urlparse(self.url).scheme not in ("http", "https"):
            raise ValidationError(f"endpoint {self.name!r}: url must be http(s), got {self.url!r}")
        if not isinstance(self.timeout_ms, int) or self.timeout_ms < 1:
            raise ValidationError(f"endpoint {self.name!r}: timeout_ms must be >= 1")
        if not isinstance(self.max_retries, int) or not 0 <= self.max_retries <= MAX_RETRIES:
            raise ValidationError(f"endpoint {self.name!r}: max_retries must be in 0..{MAX_RETRIES}")
        if not 0.0 <= self.confidence_floor <= 1.0:
            raise ValidationError(f"endpoint {self.name!r}: confidence_floor must be in [0, 1]")

    @property
    def detector_id(self) -> str:
        return "external:" + self.name

    @property
    def health_url(self) -> str:
        return self.url.rstrip("/") + "/health"


@dataclass
class RemoteScan:
    detections: list[Detection]
    warnings: Counter = field(default_factory=Counter)
    attempts: int = 0


@dataclass(frozen=True)
class HealthStatus:
    state: str  # OK | DEGRADED | DOWN
    latency_ms: float | None = None
    reason: str | None = None

    @property
    def ok(self) -> bool:
        return self.state == "OK"


def _entity_to_detection(raw, index: TextIndex, endpoint: ExternalEndpoint,
                         warnings: Counter) -> Detection | None:
    if not isinstance(raw, dict):
        warnings["BadEntity"] += 1
        return None
    start, end, typ, conf = (raw.get(k) for k in ("start", "end", "type", "confidence"))
    ints_ok = all(isinstance(v, int) and not isinstance(v, bool) for v in (start, end))
    conf_ok = isinstance(conf, (int, float)) and not isinstance(conf, bool) and 0 <= conf <= 1
    if not (ints_ok and conf_ok and isinstance(typ, str)):
        warnings["BadEntity"] += 1
        return None
    if conf < endpoint.confidence_floor:
        return None
    if start < 0 or end <= start or end > len(index.data):
        warnings["SpanOutOfRange"] += 1
        return None
    span = Span(start, end)
    if index.check(span) is not None:
        warnings["SpanNotOnBoundary"] += 1
        return None
    try:
        pii_type = PiiType(typ)
    except InvalidPiiType:
        warnings["BadEntityType"] += 1
        return None
    return Detection(span, pii_type, float(conf), endpoint.detector_id, index.slice(span))


def parse_response(body: bytes, text: str, endpoint: ExternalEndpoint) -> RemoteScan:
    try:
        payload = json.loads(body)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise BadResponse(f"response is not JSON: {exc}") from None
    if not isinstance(payload, dict) or not isinstance(payload.get("entities"), list):
        raise BadResponse("response lacks an 'entities' list")
    index = TextIndex(text)
    scan = RemoteScan([])
    for raw in payload["entities"]:
        d = _entity_to_detection(raw, index, endpoint, scan.warnings)
        if d is not None:
            scan.detections.append(d)
    if scan.warnings:
        log.warning("%s: rejected entities %s", endpoint.detector_id, dict(scan.warnings))
    return scan


class RemoteDetector:
    """Calls one endpoint; at most ``max_in_flight`` requests run concurrently."""

    def __init__(self, endpoint: ExternalEndpoint, max_in_flight: int = 8,
                 sleep=time.sleep, jitter=random.random):
        if max_in_flight < 1:
            raise ValidationError("max_in_flight must be >= 1")
        self.endpoint = endpoint
        self.max_in_flight = max_in_flight
        self._sleep = sleep
        self._jitter = jitter
        self._client: httpx.Client | None = None
        self._slots = threading.BoundedSemaphore(max_in_flight)

    # clients and semaphores do not survive pickling into worker processes
    def __getstate__(self):
        return {"endpoint": self.endpoint, "max_in_flight": self.max_in_flight}

    def __setstate__(self, state):
        self.__init__(state["endpoint"], state["max_in_flight"])

    @property
    def client(self) -> httpx.Client:
        if self._client is None:
            self._client = httpx.Client(follow_redirects=False)
        return self._client

    def close(self) -> None:
        if self._client is not None:
            self._client.close()
            self._client = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json; charset=utf-8"}
        env = self.endpoint.api_key_env
        if env:
            credential = os.environ.get(env)
            if not credential:
                raise AuthFailed(f"credential variable ${env} is not set")
            headers["Authorization"] = f"Bearer {credential}"
        return headers

    def detect(self, text: str) -> RemoteScan:
        ep = self.endpoint
        if not ep.boundary_acknowledged:
            raise BoundaryNotAcknowledged(
                f"{ep.detector_id}: set external_data_leaves_boundary = true to enable"
            )
        headers = self._headers()
        body = json.dumps({"text": text}, ensure_ascii=False).encode("utf-8")
        timeout = ep.timeout_ms / 1000
        last_error: Exception | None = None
        for attempt in range(ep.max_retries + 1):
            if attempt:
                self._sleep(self._jitter() * BACKOFF_BASE_S * 2 ** (attempt - 1))
            try:
                with self._slots:
                    resp = self.client.post(ep.url, content=body, headers=headers, timeout=timeout)
            except httpx.TimeoutException as exc:
                last_error = Timeout(f"{ep.detector_id}: {exc!r}")
                continue
            except httpx.TransportError as exc:
                last_error = Unreachable(f"{ep.detector_id}: {exc!r}")
                continue
            if resp.status_code in (401, 403):
                raise AuthFailed(f"{ep.detector_id}: HTTP {resp.status_code}")
            if resp.status_code == 429 or resp.status_code >= 500:
                last_error = BadResponse(f"{ep.detector_id}: HTTP {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise BadResponse(f"{ep.detector_id}: HTTP {resp.status_code}")
            scan = parse_response(resp.content, text, ep)
            scan.attempts = attempt + 1
            return scan
        assert last_error is not None
        raise last_error

    def health(self) -> HealthStatus:
        ep = self.endpoint
        started = time.perf_counter()
        try:
            resp = self.client.get(ep.health_url, headers=self._headers(),
                                   timeout=ep.timeout_ms / 1000)
        except AuthFailed:
            return HealthStatus("DOWN", reason="AuthFailed")
        except httpx.TimeoutException:
            return HealthStatus("DOWN", reason="Timeout")
        except httpx.TransportError as exc:
            return HealthStatus("DOWN", reason=f"Unreachable: {exc!r}")
        latency = (time.perf_counter() - started) * 1000
        if resp.status_code == 200:
            return HealthStatus("OK", latency)
        if resp.status_code in (401, 403):
            return HealthStatus("DOWN", latency, "AuthFailed")
        return HealthStatus("DEGRADED", latency, f"HTTP {resp.status_code}")


def detect_remote(text: str, endpoint: ExternalEndpoint) -> RemoteScan:
    with RemoteDetector(endpoint) as det:
        return det.detect(text)


def health_check(endpoint: ExternalEndpoint) -> HealthStatus:
    with RemoteDetector(endpoint) as det:
        return det.health()
