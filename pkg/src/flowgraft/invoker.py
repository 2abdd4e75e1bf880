"""Single service-task invocation under a retry/backoff/breaker policy.

Remote targets get a POST with a canonical-JSON body; local function
targets are evaluated in-process. Client errors (4xx) fail immediately;
5xx, timeouts, transport errors and function failures retry with
exponential backoff up to the policy's attempt budget. One circuit per
(serviceId, version) guards every target: too many consecutive failures
open it, calls while open are rejected without touching the target, and
after the open window a limited number of half-open probes decide
whether it closes again.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from typing import Callable

import requests

from . import journal as jn
from .clock import Clock
from .errors import FunctionEvaluationError
from .functions import evaluate as evaluate_function
from .registry import LocalTarget, RemoteTarget, ServiceRegistration, ServiceRegistry
from .variables import canonical_dumps

# Failure kinds.
TIMEOUT = "Timeout"
TRANSPORT_ERROR = "TransportError"
REMOTE_ERROR = "RemoteError"
CIRCUIT_OPEN = "CircuitOpen"
FUNCTION_ERROR = "FunctionError"

INSTANCE_HEADER = "X-Flowgraft-Instance"
TASK_HEADER = "X-Flowgraft-Task"


@dataclass(frozen=True)
class BackoffPolicy:
    initial_ms: int = 100
    multiplier: float = 2.0
    max_ms: int = 2000

    def delay_ms(self, failed_attempts: int) -> int:
        """Delay before the next attempt after `failed_attempts` failures."""
        raw = self.initial_ms * (self.multiplier ** (failed_attempts - 1))
        return int(min(raw, self.max_ms))


@dataclass(frozen=True)
class BreakerPolicy:
    failure_threshold: int = 5
    open_duration_ms: int = 10_000
    half_open_probes: int = 1


@dataclass(frozen=True)
class InvocationPolicy:
    name: str = "default"
    timeout_ms: int = 2000
    max_attempts: int = 3
    backoff: BackoffPolicy = field(default_factory=BackoffPolicy)
    breaker: BreakerPolicy = field(default_factory=BreakerPolicy)


DEFAULT_POLICY = InvocationPolicy()


@dataclass(frozen=True)
class InvocationResult:
    ok: bool
    attempts: int
    total_latency_ms: int
    response: dict | None = None
    failure_kind: str | None = None
    status_code: int | None = None
    error: str = ""

    @classmethod
    def success(cls, response: dict, attempts: int,
                latency_ms: int) -> "InvocationResult":
        return cls(True, attempts, latency_ms, response=response)

    @classmethod
    def failure(cls, kind: str, attempts: int, latency_ms: int,
                status_code: int | None = None,
                error: str = "") -> "InvocationResult":
        return cls(False, attempts, latency_ms, failure_kind=kind,
                   status_code=status_code, error=error)


@dataclass(frozen=True)
class _Outcome:
    """One attempt's raw result, before retry classification."""
    ok: bool
    response: dict | None = None
    kind: str | None = None
    status_code: int | None = None
    error: str = ""
    retryable: bool = False


class CircuitBreaker:
    """Closed / Open / HalfOpen state machine for one target.

    allow() must be called before each attempt; on_success/on_failure
    after it. All transitions are atomic under the breaker's lock.
    """

    CLOSED = "Closed"
    OPEN = "Open"
    HALF_OPEN = "HalfOpen"

    def __init__(self, policy: BreakerPolicy, clock: Clock,
                 on_transition: Callable[[str, dict], None] | None = None):
        self.policy = policy
        self._clock = clock
        self._on_transition = on_transition
        self._lock = threading.Lock()
        self._state = self.CLOSED
        self._failures = 0
        self._reopen_at_ms = 0
        self._probes_remaining = 0
        self._total_calls = 0

    def allow(self) -> bool:
        with self._lock:
            if self._state == self.OPEN:
                if self._clock.now_ms() >= self._reopen_at_ms:
                    self._state = self.HALF_OPEN
                    self._probes_remaining = self.policy.half_open_probes
                else:
                    return False
            if self._state == self.HALF_OPEN:
                if self._probes_remaining <= 0:
                    return False
                self._probes_remaining -= 1
            self._total_calls += 1
            return True

    def on_success(self) -> None:
        with self._lock:
            if self._state == self.HALF_OPEN:
                self._state = self.CLOSED
                self._failures = 0
                self._notify(jn.CIRCUIT_CLOSED, {})
            elif self._state == self.CLOSED:
                self._failures = 0

    def on_failure(self) -> None:
        with self._lock:
            now = self._clock.now_ms()
            if self._state == self.HALF_OPEN:
                self._trip(now)
            elif self._state == self.CLOSED:
                self._failures += 1
                if self._failures >= self.policy.failure_threshold:
                    self._trip(now)

    def _trip(self, now_ms: int) -> None:
        self._state = self.OPEN
        self._failures = 0
        self._reopen_at_ms = now_ms + self.policy.open_duration_ms
        self._notify(jn.CIRCUIT_OPENED, {"reopenAtMs": self._reopen_at_ms})

    def _notify(self, kind: str, payload: dict) -> None:
        if self._on_transition is not None:
            self._on_transition(kind, payload)

    @property
    def state(self) -> str:
        with self._lock:
            return self._state

    def snapshot(self) -> dict:
        with self._lock:
            snap: dict = {"state": self._state, "totalCalls": self._total_calls}
            if self._state == self.CLOSED:
                snap["consecutiveFailures"] = self._failures
            elif self._state == self.OPEN:
                snap["reopenAtMs"] = self._reopen_at_ms
            else:
                snap["probesRemaining"] = self._probes_remaining
            return snap


class Invoker:
    """Executes service-task calls against resolved registry targets."""

    def __init__(self, registry: ServiceRegistry, clock: Clock | None = None,
                 emit: Callable[[str, dict], None] | None = None,
                 session: requests.Session | None = None):
        self._registry = registry
        self._clock = clock or Clock()
        self._emit = emit  # sink for breaker transition events
        self._session = session or requests.Session()
        self._breakers: dict[tuple[str, str], CircuitBreaker] = {}
        self._breakers_lock = threading.Lock()

    # -- breaker registry ---------------------------------------------------

    def _breaker(self, target: ServiceRegistration,
                 policy: InvocationPolicy) -> CircuitBreaker:
        key = (target.service_id, str(target.version))
        with self._breakers_lock:
            breaker = self._breakers.get(key)
            if breaker is None:
                def on_transition(kind: str, payload: dict,
                                  _key=key) -> None:
                    if self._emit is not None:
                        self._emit(kind, {"serviceId": _key[0],
                                          "version": _key[1], **payload})
                breaker = CircuitBreaker(policy.breaker, self._clock,
                                         on_transition)
                self._breakers[key] = breaker
            return breaker

    def breaker_snapshot(self) -> dict[str, dict]:
        """Point-in-time circuit summary keyed "serviceId@version"."""
        with self._breakers_lock:
            items = list(self._breakers.items())
        return {f"{sid}@{ver}": breaker.snapshot()
                for (sid, ver), breaker in items}

    def breaker_state(self, service_id: str, version: str) -> str | None:
        with self._breakers_lock:
            breaker = self._breakers.get((service_id, version))
        return breaker.state if breaker else None

    # -- invocation -----------------------------------------------------------

    def invoke(self, target: ServiceRegistration, request: dict,
               policy: InvocationPolicy = DEFAULT_POLICY, *,
               instance_id: str | None = None, node_id: str | None = None,
               emit: Callable[[str, dict], None] | None = None,
               is_live: Callable[[], bool] | None = None) -> InvocationResult:
        """Run one invocation to a final result; never raises for target faults.

        `emit` receives per-attempt TaskInvoked/RetryScheduled events;
        `is_live` lets the caller abandon the retry loop (a cancelled
        instance stops producing attempts). Wall time is bounded by
        max_attempts * timeout plus the backoff schedule.
        """
        breaker = self._breaker(target, policy)
        started_ms = self._clock.now_ms()
        last: _Outcome | None = None
        attempts = 0

        for attempt in range(1, policy.max_attempts + 1):
            if is_live is not None and not is_live():
                break
            if not breaker.allow():
                if attempt == 1:
                    return InvocationResult.failure(
                        CIRCUIT_OPEN, 0, self._clock.now_ms() - started_ms,
                        error=f"circuit open for {target.service_id}"
                              f"@{target.version}")
                break  # opened by our own failures; report the real failure
            attempts = attempt
            if emit is not None:
                emit(jn.TASK_INVOKED, {
                    "node": node_id, "serviceId": target.service_id,
                    "version": str(target.version), "attempt": attempt})
            outcome = self._attempt(target, request, policy,
                                    instance_id, node_id)
            if outcome.ok:
                breaker.on_success()
                return InvocationResult.success(
                    outcome.response, attempt,
                    self._clock.now_ms() - started_ms)
            breaker.on_failure()
            last = outcome
            if not outcome.retryable:
                break
            if attempt < policy.max_attempts:
                delay_ms = policy.backoff.delay_ms(attempt)
                if emit is not None:
                    emit(jn.RETRY_SCHEDULED, {
                        "node": node_id, "serviceId": target.service_id,
                        "version": str(target.version), "attempt": attempt,
                        "delayMs": delay_ms})
                self._clock.sleep(delay_ms / 1000.0)

        if last is None:
            # Abandoned before any attempt; result is discarded upstream.
            return InvocationResult.failure(
                TRANSPORT_ERROR, 0, self._clock.now_ms() - started_ms,
                error="abandoned before first attempt")
        return InvocationResult.failure(
            last.kind, attempts, self._clock.now_ms() - started_ms,
            status_code=last.status_code, error=last.error)

    def _attempt(self, target: ServiceRegistration, request: dict,
                 policy: InvocationPolicy, instance_id: str | None,
                 node_id: str | None) -> _Outcome:
        if isinstance(target.target, LocalTarget):
            try:
                spec = self._registry.get_function(target.target.function_ref)
                return _Outcome(True, response=evaluate_function(spec, request))
            except FunctionEvaluationError as exc:
                return _Outcome(False, kind=FUNCTION_ERROR, error=str(exc),
                                retryable=True)

        assert isinstance(target.target, RemoteTarget)
        url = target.target.base_url.rstrip("/") + target.target.path
        headers = {"Content-Type": "application/json"}
        if instance_id:
            headers[INSTANCE_HEADER] = instance_id
        if node_id:
            headers[TASK_HEADER] = node_id
        try:
            resp = self._session.post(
                url, data=canonical_dumps(request).encode("utf-8"),
                headers=headers, timeout=policy.timeout_ms / 1000.0,
                allow_redirects=False)
        except requests.Timeout:
            return _Outcome(False, kind=TIMEOUT,
                            error=f"no response within {policy.timeout_ms} ms",
                            retryable=True)
        except requests.RequestException as exc:
            return _Outcome(False, kind=TRANSPORT_ERROR, error=str(exc),
                            retryable=True)

        if 200 <= resp.status_code < 300:
            try:
                body = resp.json()
            except (json.JSONDecodeError, ValueError) as exc:
                return _Outcome(False, kind=TRANSPORT_ERROR,
                                error=f"response body is not JSON: {exc}",
                                retryable=True)
            if not isinstance(body, dict):
                body = {"value": body}
            return _Outcome(True, response=body)
        retryable = resp.status_code >= 500
        return _Outcome(False, kind=REMOTE_ERROR, status_code=resp.status_code,
                        error=f"HTTP {resp.status_code}", retryable=retryable)
