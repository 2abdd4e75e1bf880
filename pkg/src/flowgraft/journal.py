"""Append-only execution journal.

Newline-delimited JSON, one event per line, UTF-8 with LF endings and
canonical key ordering, preceded by a single header line carrying the
format version. Every state transition the engine makes lands here
before the transition is considered done, which makes the journal both
the tracking surface and the recovery source of truth: any instance's
state is a pure fold over its events.

Durability defaults to flush-and-fsync per event; a batching mode
(fsync every N appends) exists for bulk scenarios and is off in tests.
Appends funnel through one lock; readers replay independently from a
consistent prefix. A partially written trailing record (torn write at
crash) is truncated away when the journal is reopened for append.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from dataclasses import dataclass
from pathlib import Path

from .clock import Clock
from .errors import JournalError
from .variables import canonical_dumps

logger = logging.getLogger("flowgraft.journal")

FORMAT_NAME = "flowgraft-journal"
FORMAT_VERSION = 1

# Event kinds. Instance-scoped kinds carry an instanceId; registry and
# breaker kinds are global.
INSTANCE_STARTED = "InstanceStarted"
TOKEN_MOVED = "TokenMoved"
TASK_INVOKED = "TaskInvoked"
TASK_COMPLETED = "TaskCompleted"
TASK_FAILED = "TaskFailed"
RETRY_SCHEDULED = "RetryScheduled"
CIRCUIT_OPENED = "CircuitOpened"
CIRCUIT_CLOSED = "CircuitClosed"
INSTANCE_COMPLETED = "InstanceCompleted"
INSTANCE_FAULTED = "InstanceFaulted"
INSTANCE_CANCELLED = "InstanceCancelled"
SERVICE_REGISTERED = "ServiceRegistered"
FUNCTION_REGISTERED = "FunctionRegistered"
DEPLOYMENT_RECORDED = "DeploymentRecorded"
WORKFLOW_RETIRED = "WorkflowRetired"

KINDS = frozenset({
    INSTANCE_STARTED, TOKEN_MOVED, TASK_INVOKED, TASK_COMPLETED, TASK_FAILED,
    RETRY_SCHEDULED, CIRCUIT_OPENED, CIRCUIT_CLOSED, INSTANCE_COMPLETED,
    INSTANCE_FAULTED, INSTANCE_CANCELLED, SERVICE_REGISTERED,
    FUNCTION_REGISTERED, DEPLOYMENT_RECORDED, WORKFLOW_RETIRED,
})

REGISTRY_KINDS = frozenset({SERVICE_REGISTERED, FUNCTION_REGISTERED,
                            DEPLOYMENT_RECORDED, WORKFLOW_RETIRED})
TERMINAL_KINDS = frozenset({INSTANCE_COMPLETED, INSTANCE_FAULTED,
                            INSTANCE_CANCELLED})


@dataclass(frozen=True)
class ExecutionEvent:
    seq: int
    ts_ms: int
    kind: str
    instance_id: str | None
    payload: dict

    def to_line(self) -> str:
        record = {"kind": self.kind, "payload": self.payload,
                  "seq": self.seq, "ts": self.ts_ms}
        if self.instance_id is not None:
            record["instanceId"] = self.instance_id
        return canonical_dumps(record)

    @classmethod
    def from_record(cls, record: dict) -> "ExecutionEvent":
        return cls(seq=record["seq"], ts_ms=record["ts"], kind=record["kind"],
                   instance_id=record.get("instanceId"),
                   payload=record.get("payload", {}))


def _parse_line(line: str) -> dict | None:
    try:
        record = json.loads(line)
    except json.JSONDecodeError:
        return None
    if not isinstance(record, dict):
        return None
    return record


class Journal:
    """Single-writer append log over one file."""

    def __init__(self, path: str | os.PathLike, clock: Clock | None = None,
                 sync: str = "always", batch_every: int = 64):
        if sync not in ("always", "batch"):
            raise ValueError(f"sync must be 'always' or 'batch', got {sync!r}")
        self.path = Path(path)
        self._clock = clock or Clock()
        self._sync = sync
        self._batch_every = batch_every
        self._pending = 0
        self._lock = threading.Lock()
        self._last_seq = self._open()

    # -- lifecycle --------------------------------------------------------

    def _open(self) -> int:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        exists = self.path.exists() and self.path.stat().st_size > 0
        if not exists:
            self._fh = open(self.path, "ab")
            header = canonical_dumps({"format": FORMAT_NAME,
                                      "version": FORMAT_VERSION})
            self._fh.write(header.encode("utf-8") + b"\n")
            self._fh.flush()
            os.fsync(self._fh.fileno())
            return 0

        last_seq, good_end, tail = _scan_file(self.path)
        if tail:
            logger.warning("truncating %d bytes of torn tail record in %s",
                           tail, self.path)
            with open(self.path, "r+b") as fh:
                fh.truncate(good_end)
        self._fh = open(self.path, "ab")
        return last_seq

    def close(self) -> None:
        with self._lock:
            try:
                self._fh.flush()
                os.fsync(self._fh.fileno())
            except (OSError, ValueError):
                pass
            self._fh.close()

    @property
    def last_seq(self) -> int:
        with self._lock:
            return self._last_seq

    # -- writing ----------------------------------------------------------

    def append(self, kind: str, payload: dict | None = None,
               instance_id: str | None = None) -> ExecutionEvent:
        """Append one event; durable before return. Returns it with seq."""
        if kind not in KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        with self._lock:
            event = ExecutionEvent(self._last_seq + 1, self._clock.now_ms(),
                                   kind, instance_id, payload or {})
            data = event.to_line().encode("utf-8") + b"\n"
            try:
                self._fh.write(data)
                self._fh.flush()
                self._pending += 1
                if self._sync == "always" or self._pending >= self._batch_every:
                    os.fsync(self._fh.fileno())
                    self._pending = 0
            except (OSError, ValueError) as exc:
                raise JournalError(JournalError.IO_FAILURE, str(exc)) from exc
            self._last_seq = event.seq
            return event

    # -- reading ----------------------------------------------------------

    def replay(self, instance_id: str | None = None,
               strict: bool = True) -> list[ExecutionEvent]:
        """Events in seq order; see module-level replay()."""
        with self._lock:
            try:
                self._fh.flush()
            except (OSError, ValueError):
                pass
        return replay(self.path, instance_id=instance_id, strict=strict)


def _scan_file(path: Path) -> tuple[int, int, int]:
    """Scan for append: (last good seq, end offset of good prefix, torn bytes).

    Raises JournalError(CORRUPT) for a bad header or for corruption that
    is *followed* by further records (a torn tail is tolerated, interior
    damage is not).
    """
    last_seq = 0
    with open(path, "rb") as fh:
        data = fh.read()
    offset = 0
    first = True
    good_end = 0
    while offset < len(data):
        nl = data.find(b"\n", offset)
        line_end = nl + 1 if nl != -1 else len(data)
        complete = nl != -1
        line = data[offset:nl if nl != -1 else len(data)]
        record = _parse_line(line.decode("utf-8", errors="replace"))
        if first:
            if (not complete or record is None
                    or record.get("format") != FORMAT_NAME):
                raise JournalError(JournalError.CORRUPT,
                                   f"{path} has no valid journal header", seq=1)
            first = False
            good_end = line_end
            offset = line_end
            continue
        ok = (complete and record is not None
              and record.get("seq") == last_seq + 1
              and record.get("kind") in KINDS)
        if not ok:
            if line_end < len(data) or (complete and record is not None
                                        and record.get("seq") != last_seq + 1):
                raise JournalError(JournalError.CORRUPT,
                                   f"corrupt record after seq {last_seq}",
                                   seq=last_seq + 1)
            return last_seq, good_end, len(data) - good_end
        last_seq = record["seq"]
        good_end = line_end
        offset = line_end
    return last_seq, good_end, 0


def replay(path: str | os.PathLike, instance_id: str | None = None,
           strict: bool = True) -> list[ExecutionEvent]:
    """Read events in seq order from a journal file.

    With `instance_id`, returns that instance's events plus the registry
    and deployment events needed to resolve it. With strict=True a bad or
    torn record raises JournalError(CORRUPT, seq=first bad seq); with
    strict=False the good prefix is returned instead (recovery reads).
    """
    path = Path(path)
    events: list[ExecutionEvent] = []
    last_seq = 0
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise JournalError(JournalError.IO_FAILURE, str(exc)) from exc

    lines = data.split(b"\n")
    trailing_incomplete = not data.endswith(b"\n") and bool(data)
    nonempty = [i for i, raw in enumerate(lines) if raw]
    last_index = nonempty[-1] if nonempty else -1
    for i, raw in enumerate(lines):
        if not raw:
            continue
        incomplete = trailing_incomplete and i == len(lines) - 1
        record = _parse_line(raw.decode("utf-8", errors="replace"))
        if i == 0:
            if record is None or record.get("format") != FORMAT_NAME:
                raise JournalError(JournalError.CORRUPT,
                                   f"{path} has no valid journal header", seq=1)
            continue
        ok = (not incomplete and record is not None
              and record.get("seq") == last_seq + 1
              and record.get("kind") in KINDS)
        if not ok:
            # A damaged *final* record is a torn write and may be dropped
            # by recovering reads; damage with records after it never is.
            if strict or i != last_index:
                raise JournalError(JournalError.CORRUPT,
                                   f"corrupt record after seq {last_seq}",
                                   seq=last_seq + 1)
            break
        event = ExecutionEvent.from_record(record)
        last_seq = event.seq
        events.append(event)

    if instance_id is None:
        return events
    return [e for e in events
            if e.instance_id == instance_id or e.kind in REGISTRY_KINDS]


def lint_lifecycles(events: list[ExecutionEvent]) -> list[str]:
    """Check every instance's event stream against the lifecycle grammar.

    Grammar: InstanceStarted first, exactly one terminal event
    (InstanceCompleted | InstanceFaulted | InstanceCancelled) last,
    nothing for that instance after the terminal. Returns violation
    descriptions; empty means clean.
    """
    problems: list[str] = []
    seen_start: set[str] = set()
    terminal: dict[str, str] = {}
    last_seq = 0
    for e in events:
        if e.seq <= last_seq:
            problems.append(f"seq not strictly increasing at {e.seq}")
        last_seq = e.seq
        if e.instance_id is None:
            continue
        iid = e.instance_id
        if iid in terminal:
            problems.append(
                f"instance {iid}: {e.kind} (seq {e.seq}) after terminal "
                f"{terminal[iid]}")
            continue
        if e.kind == INSTANCE_STARTED:
            if iid in seen_start:
                problems.append(f"instance {iid}: duplicate InstanceStarted")
            seen_start.add(iid)
        else:
            if iid not in seen_start:
                problems.append(
                    f"instance {iid}: {e.kind} (seq {e.seq}) before "
                    f"InstanceStarted")
            if e.kind in TERMINAL_KINDS:
                terminal[iid] = e.kind
    # Instances without a terminal event are legal (still running).
    return problems
