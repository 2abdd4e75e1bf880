"""Rebuilding engine state from the journal.

Recovery is a pure fold: registry events re-register services,
functions, and deployments (silently, without re-journaling), and each
instance's events replay into a snapshot dict identical to what the
live instance's snapshot() produced at the same journal prefix. Two
recoveries from the same bytes always produce equal states.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import journal as jn
from .clock import Clock
from .engine import apply_assignments
from .journal import ExecutionEvent
from .registry import ServiceRegistry
from .variables import deep_copy


@dataclass
class RecoveredState:
    registry: ServiceRegistry
    instances: dict[str, dict] = field(default_factory=dict)

    def running_instances(self) -> list[dict]:
        return [s for s in self.instances.values() if s["status"] == "Running"]


def _apply_token_delta(snapshot: dict, payload: dict) -> None:
    tokens = snapshot["tokens"]
    for tok in payload.get("consumed", []):
        entry = {"node": tok["node"], "phase": tok["phase"],
                 "via": tok.get("via")}
        tokens.remove(entry)
    for tok in payload.get("produced", []):
        tokens.append({"node": tok["node"], "phase": tok["phase"],
                       "via": tok.get("via")})


def reduce_instances(events: list[ExecutionEvent]) -> dict[str, dict]:
    """Fold instance events into snapshot dicts keyed by instance id."""
    snapshots: dict[str, dict] = {}
    for event in events:
        iid = event.instance_id
        if iid is None:
            continue
        p = event.payload
        if event.kind == jn.INSTANCE_STARTED:
            snapshots[iid] = {
                "instanceId": iid,
                "definitionId": p["definitionId"],
                "definitionVersion": p["definitionVersion"],
                "status": "Running",
                "tokens": [{"node": t["node"], "phase": t["phase"],
                            "via": t.get("via")} for t in p["tokens"]],
                "variables": deep_copy(p["variables"]),
                "resolvedServices": dict(p["resolvedServices"]),
                "faultDetail": None,
                "startedAtMs": event.ts_ms,
                "finishedAtMs": None,
            }
            continue
        snap = snapshots.get(iid)
        if snap is None:
            continue  # filtered replay can omit the start; skip strays
        if event.kind == jn.TOKEN_MOVED:
            _apply_token_delta(snap, p)
        elif event.kind == jn.TASK_COMPLETED:
            _apply_token_delta(snap, p)
            apply_assignments(snap["variables"], p["assignments"])
        elif event.kind == jn.TASK_FAILED:
            _apply_token_delta(snap, p)
        elif event.kind == jn.INSTANCE_COMPLETED:
            snap["status"] = "Completed"
            snap["finishedAtMs"] = event.ts_ms
        elif event.kind == jn.INSTANCE_FAULTED:
            snap["status"] = "Faulted"
            snap["faultDetail"] = {"nodeId": p.get("node"),
                                   "error": p.get("error", "")}
            snap["tokens"] = []
            snap["finishedAtMs"] = event.ts_ms
        elif event.kind == jn.INSTANCE_CANCELLED:
            snap["status"] = "Cancelled"
            snap["tokens"] = []
            snap["finishedAtMs"] = event.ts_ms
    for snap in snapshots.values():
        snap["tokens"] = sorted(
            snap["tokens"],
            key=lambda t: (t["node"], t["phase"], t["via"] or ""))
    return snapshots


def rebuild_registry(events: list[ExecutionEvent],
                     journal: jn.Journal | None = None,
                     clock: Clock | None = None) -> ServiceRegistry:
    registry = ServiceRegistry(journal=journal, clock=clock)
    for event in events:
        if event.kind in jn.REGISTRY_KINDS:
            registry.apply_event(event)
    return registry


def recover(events: list[ExecutionEvent], journal: jn.Journal | None = None,
            clock: Clock | None = None) -> RecoveredState:
    """Registry plus all instance snapshots from a replayed event list."""
    return RecoveredState(registry=rebuild_registry(events, journal, clock),
                          instances=reduce_instances(events))
