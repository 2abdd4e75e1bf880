"""Scriptable fake microservice fleet.

Each sim service is a real HTTP server on an ephemeral loopback port
speaking the engine's wire protocol, driven by an ordered behavior
script whose final entry repeats forever:

    Respond(body, latency_ms)   200 with a fixed JSON body
    Echo(latency_ms)            200 echoing the request body
    Fail(status, latency_ms)    the given error status
    Hang(duration_ms)           hold the request open (timeout fodder)

Every arrival is recorded (timestamp, tracing headers, body) so tests
can assert exactly what the engine sent and in what order. Fleets are
also loadable from a JSON config file for demo scenarios.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable

from .errors import HarnessError
from .invoker import INSTANCE_HEADER, TASK_HEADER
from .variables import canonical_bytes

RESPOND = "respond"
ECHO = "echo"
FAIL = "fail"
HANG = "hang"


@dataclass(frozen=True)
class ScriptEntry:
    kind: str
    body: dict | None = None
    status: int = 200
    latency_ms: int = 0

    @classmethod
    def respond(cls, body: dict, latency_ms: int = 0) -> "ScriptEntry":
        return cls(RESPOND, body=body, latency_ms=latency_ms)

    @classmethod
    def echo(cls, latency_ms: int = 0) -> "ScriptEntry":
        return cls(ECHO, latency_ms=latency_ms)

    @classmethod
    def fail(cls, status: int = 500, latency_ms: int = 0) -> "ScriptEntry":
        return cls(FAIL, status=status, latency_ms=latency_ms)

    @classmethod
    def hang(cls, duration_ms: int) -> "ScriptEntry":
        return cls(HANG, latency_ms=duration_ms)


@dataclass(frozen=True)
class Arrival:
    ts_ms: int
    instance_id: str | None
    task_id: str | None
    body: dict


@dataclass
class SimServiceSpec:
    service_id: str
    version: str = "1.0.0"
    script: list[ScriptEntry] = field(default_factory=lambda: [ScriptEntry.echo()])
    path: str = "/invoke"


class _QuietServer(ThreadingHTTPServer):
    # Clients time out and hang up mid-response by design; stay silent.
    def handle_error(self, request, client_address) -> None:
        pass


class SimService:
    """One scripted service on its own threaded HTTP server."""

    def __init__(self, spec: SimServiceSpec):
        if not spec.script:
            raise HarnessError(HarnessError.PORT_EXHAUSTED,
                               "behavior script must not be empty")
        self.spec = spec
        self._cursor = 0
        self._lock = threading.Lock()
        self.arrivals: list[Arrival] = []
        handler = self._make_handler()
        try:
            self._server = _QuietServer(("127.0.0.1", 0), handler)
        except OSError as exc:
            raise HarnessError(HarnessError.PORT_EXHAUSTED, str(exc)) from exc
        self._server.daemon_threads = True
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        name=f"sim-{spec.service_id}",
                                        daemon=True)

    @property
    def base_url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> None:
        self._thread.start()

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def _next_entry(self) -> ScriptEntry:
        with self._lock:
            entry = self.spec.script[min(self._cursor, len(self.spec.script) - 1)]
            self._cursor += 1
            return entry

    def _record(self, arrival: Arrival) -> None:
        with self._lock:
            self.arrivals.append(arrival)

    def _make_handler(self) -> type:
        service = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, *args) -> None:
                pass

            def do_POST(self) -> None:
                length = int(self.headers.get("Content-Length", 0))
                raw = self.rfile.read(length) if length else b"{}"
                try:
                    body = json.loads(raw.decode("utf-8"))
                except (UnicodeDecodeError, json.JSONDecodeError):
                    body = {"_raw": raw.decode("utf-8", "replace")}
                if not isinstance(body, dict):
                    body = {"value": body}
                service._record(Arrival(
                    int(time.time() * 1000),
                    self.headers.get(INSTANCE_HEADER),
                    self.headers.get(TASK_HEADER), body))
                entry = service._next_entry()
                if entry.latency_ms:
                    time.sleep(entry.latency_ms / 1000.0)
                if entry.kind == HANG:
                    self.send_response(204)
                    self.send_header("Content-Length", "0")
                    self.end_headers()
                    return
                if entry.kind == FAIL:
                    payload = canonical_bytes({"error": f"scripted {entry.status}"})
                    self.send_response(entry.status)
                else:
                    response = body if entry.kind == ECHO else entry.body
                    payload = canonical_bytes(response)
                    self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

        return Handler


class Fleet:
    """A set of started sim services, keyed by (serviceId, version)."""

    def __init__(self, services: list[SimService]):
        self.services = {(s.spec.service_id, s.spec.version): s
                         for s in services}

    def service(self, service_id: str, version: str | None = None) -> SimService:
        if version is not None:
            return self.services[(service_id, version)]
        matches = [s for (sid, _), s in self.services.items()
                   if sid == service_id]
        if not matches:
            raise KeyError(service_id)
        return matches[0]

    def arrivals(self, service_id: str,
                 version: str | None = None) -> list[Arrival]:
        return list(self.service(service_id, version).arrivals)

    def registrations(self) -> list[dict]:
        """Payloads suitable for service registration, in spec order."""
        return [{"serviceId": s.spec.service_id, "version": s.spec.version,
                 "baseUrl": s.base_url, "path": s.spec.path}
                for s in self.services.values()]

    def register_all(self, registry) -> None:
        from .registry import RemoteTarget
        for s in self.services.values():
            registry.register_service(
                s.spec.service_id, s.spec.version,
                RemoteTarget(s.base_url, s.spec.path))

    def stop(self) -> None:
        for s in self.services.values():
            s.stop()

    def __enter__(self) -> "Fleet":
        return self

    def __exit__(self, *exc) -> None:
        self.stop()


def spawn_fleet(specs: list[SimServiceSpec]) -> Fleet:
    """Start one server per spec; endpoints are live when this returns."""
    services = []
    try:
        for spec in specs:
            service = SimService(spec)
            service.start()
            services.append(service)
    except HarnessError:
        for s in services:
            s.stop()
        raise
    return Fleet(services)


def check_arrivals(fleet: Fleet, service_id: str,
                   predicate: Callable[[list[Arrival]], bool],
                   description: str = "") -> str | None:
    """None when the predicate holds over the arrival log, else detail."""
    arrivals = fleet.arrivals(service_id)
    if predicate(arrivals):
        return None
    what = description or getattr(predicate, "__name__", "predicate")
    return (f"arrival assertion failed for {service_id!r}: {what}; "
            f"saw {len(arrivals)} arrivals: "
            f"{[(a.task_id, a.instance_id) for a in arrivals]}")


def assert_arrivals(fleet: Fleet, service_id: str,
                    predicate: Callable[[list[Arrival]], bool],
                    description: str = "") -> None:
    detail = check_arrivals(fleet, service_id, predicate, description)
    if detail is not None:
        raise AssertionError(detail)


def load_fleet_config(path: str) -> list[SimServiceSpec]:
    """Read fleet specs from a JSON file.

    Format: a list of {"serviceId", "version", "path"?, "behavior": [...]}
    where each behavior entry is one of {"respond": body, "latencyMs"?},
    {"echo": true, "latencyMs"?}, {"fail": status, "latencyMs"?}, or
    {"hang": durationMs}.
    """
    with open(path, encoding="utf-8") as fh:
        config = json.load(fh)
    specs = []
    for item in config:
        script = []
        for entry in item.get("behavior", [{"echo": True}]):
            latency = int(entry.get("latencyMs", 0))
            if "respond" in entry:
                script.append(ScriptEntry.respond(entry["respond"], latency))
            elif "echo" in entry:
                script.append(ScriptEntry.echo(latency))
            elif "fail" in entry:
                script.append(ScriptEntry.fail(int(entry["fail"]), latency))
            elif "hang" in entry:
                script.append(ScriptEntry.hang(int(entry["hang"])))
            else:
                raise ValueError(f"unknown behavior entry {entry!r}")
        specs.append(SimServiceSpec(item["serviceId"],
                                    item.get("version", "1.0.0"),
                                    script, item.get("path", "/invoke")))
    return specs
