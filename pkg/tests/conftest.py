"""Shared fixtures: runtimes on temp journals, local echo services, fleets."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from flowgraft import Runtime, SimClock
from flowgraft.registry import LocalTarget

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def journal_path(tmp_path):
    return tmp_path / "journal.ndjson"


@pytest.fixture
def rt(journal_path):
    """Runtime on a fresh journal with a real clock."""
    runtime = Runtime.open(journal_path)
    yield runtime
    runtime.close()


@pytest.fixture
def sim_rt(journal_path):
    """Runtime under a virtual clock (instant backoff, frozen windows)."""
    runtime = Runtime.open(journal_path, clock=SimClock())
    yield runtime
    runtime.close()


@pytest.fixture
def echo_rt(rt):
    """Runtime with local echo services alpha/beta/gamma registered."""
    rt.registry.register_function("echo", {"kind": "echo"})
    for service in ("alpha", "beta", "gamma"):
        rt.registry.register_service(service, "1.0.0", LocalTarget("echo"))
    return rt


@pytest.fixture
def ack_rt(rt):
    """Constant-response services: safe for large generated workflows.

    Echo plus whole-tree default chaining doubles the variable tree per
    task, so big random DAGs use a fixed acknowledgement instead.
    """
    rt.registry.register_function("ack", {"kind": "table", "rules": [],
                                          "default": {"ok": True}})
    for service in ("alpha", "beta", "gamma"):
        rt.registry.register_service(service, "1.0.0", LocalTarget("ack"))
    return rt


def read_kinds(runtime, instance_id=None):
    return [e.kind for e in runtime.journal.replay(instance_id=instance_id)
            if instance_id is None or e.instance_id == instance_id]


class JournalTail:
    """Incremental journal reader: only the events appended since the
    last call. Keeps long suites linear instead of re-reading the file."""

    def __init__(self, path):
        import json as _json
        self._json = _json
        self._fh = open(path, "rb")
        self._fh.readline()  # header
        self._buffer = b""

    def new_events(self):
        from flowgraft.journal import ExecutionEvent
        data = self._buffer + self._fh.read()
        lines = data.split(b"\n")
        self._buffer = lines.pop()  # incomplete tail, if any
        return [ExecutionEvent.from_record(self._json.loads(line))
                for line in lines if line.strip()]

    def close(self):
        self._fh.close()


def invoked_nodes(runtime, instance_id=None):
    return [e.payload["node"] for e in runtime.journal.replay()
            if e.kind == "TaskInvoked"
            and (instance_id is None or e.instance_id == instance_id)]
