"""Token execution over process definitions.

One step is one node-level transition of one token: fire a start event,
submit a service call, route a gateway, consume an end event, or apply
one completed service call. run_to_completion is the only loop. Every
transition journals its event (with explicit token deltas) before the
in-memory state changes, so the journal prefix at any step boundary
reconstructs the live instance exactly.

Service calls run asynchronously on a worker pool: submitting a call
moves the token to AwaitingService and the engine keeps stepping other
tokens (parallel branches really are concurrent); completions queue up
and are applied one at a time under the instance's lock. Instances are
independent: many run at once, but a given instance's transitions are
strictly serialized.

Data chaining: an empty input mapping sends the whole variable tree; an
empty output mapping stores the whole response under the task's node id.
A gateway condition that fails to evaluate counts as not-taken; if no
flow is ultimately chosen (and no default exists) the instance faults.
Exhausting a task's invocation policy faults the whole instance.
"""

from __future__ import annotations

import threading
import uuid
from collections import deque
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

from . import journal as jn
from .clock import Clock
from .errors import CancelError, EvalError, RegistryError, StartError
from .invoker import (CIRCUIT_OPEN, DEFAULT_POLICY, InvocationPolicy,
                      InvocationResult, Invoker)
from .journal import Journal
from .model import Node, NodeKind, ProcessDefinition, Severity
from .registry import DeploymentState, ServiceRegistry
from .validation import validate
from .variables import VariablePathError, deep_copy, get_path, is_tree, set_path


class InstanceStatus(str, Enum):
    RUNNING = "Running"
    COMPLETED = "Completed"
    FAULTED = "Faulted"
    CANCELLED = "Cancelled"


class TokenPhase(str, Enum):
    ARRIVED = "Arrived"
    AWAITING_SERVICE = "AwaitingService"
    DEPARTING = "Departing"  # reserved; current transitions never park here


TERMINAL_STATUSES = (InstanceStatus.COMPLETED, InstanceStatus.FAULTED,
                     InstanceStatus.CANCELLED)


@dataclass(frozen=True)
class Token:
    node_id: str
    phase: TokenPhase
    via: str | None = None  # flow the token arrived through

    def to_dict(self) -> dict:
        return {"node": self.node_id, "phase": self.phase.value, "via": self.via}

    @classmethod
    def from_dict(cls, data: dict) -> "Token":
        return cls(data["node"], TokenPhase(data["phase"]), data.get("via"))


@dataclass
class ProcessInstance:
    instance_id: str
    definition_id: str
    definition_version: str
    tokens: list[Token]
    variables: dict
    status: InstanceStatus
    resolved_services: dict[str, str]
    started_at_ms: int
    finished_at_ms: int | None = None
    fault_detail: dict | None = None

    # Runtime-only machinery, never part of snapshots.
    _definition: ProcessDefinition | None = field(default=None, repr=False)
    _lock: threading.RLock = field(default_factory=threading.RLock, repr=False)
    _completions: deque = field(default_factory=deque, repr=False)
    _inflight: int = field(default=0, repr=False)
    _epoch: int = field(default=0, repr=False)
    _wakeup: threading.Event = field(default_factory=threading.Event, repr=False)
    _engine_error: BaseException | None = field(default=None, repr=False)
    _runner: Future | None = field(default=None, repr=False)

    def snapshot(self) -> dict:
        """Canonical structural state; equal snapshots mean equal instances."""
        with self._lock:
            return {
                "instanceId": self.instance_id,
                "definitionId": self.definition_id,
                "definitionVersion": self.definition_version,
                "status": self.status.value,
                "tokens": sorted((t.to_dict() for t in self.tokens),
                                 key=lambda t: (t["node"], t["phase"],
                                                t["via"] or "")),
                "variables": deep_copy(self.variables),
                "resolvedServices": dict(self.resolved_services),
                "faultDetail": deep_copy(self.fault_detail),
                "startedAtMs": self.started_at_ms,
                "finishedAtMs": self.finished_at_ms,
            }


class StepKind(str, Enum):
    PROGRESSED = "Progressed"
    AWAITING_IO = "AwaitingIO"
    FINISHED = "Finished"


@dataclass(frozen=True)
class StepOutcome:
    kind: StepKind
    status: InstanceStatus | None = None

    @classmethod
    def progressed(cls) -> "StepOutcome":
        return cls(StepKind.PROGRESSED)

    @classmethod
    def awaiting_io(cls) -> "StepOutcome":
        return cls(StepKind.AWAITING_IO)

    @classmethod
    def finished(cls, status: InstanceStatus) -> "StepOutcome":
        return cls(StepKind.FINISHED, status)


def build_request(node: Node, variables: dict) -> dict:
    if not node.input_mapping:
        return deep_copy(variables)
    request: dict = {}
    for src, dst in node.input_mapping:
        set_path(request, dst, deep_copy(get_path(variables, src)))
    return request


def build_assignments(node: Node, response: dict) -> list[list]:
    if not node.output_mapping:
        return [[node.node_id, deep_copy(response)]]
    return [[dst, deep_copy(get_path(response, src))]
            for src, dst in node.output_mapping]


def apply_assignments(variables: dict, assignments: list[list]) -> None:
    for path, value in assignments:
        set_path(variables, path, deep_copy(value))


class Engine:
    """Drives process instances against a registry, invoker, and journal."""

    def __init__(self, registry: ServiceRegistry, invoker: Invoker,
                 journal: Journal, clock: Clock | None = None,
                 policies: dict[str, InvocationPolicy] | None = None,
                 io_workers: int = 32, runner_workers: int = 32):
        self._registry = registry
        self._invoker = invoker
        self._journal = journal
        self._clock = clock or Clock()
        self._policies = {"default": DEFAULT_POLICY}
        if policies:
            self._policies.update(policies)
        self._instances: dict[str, ProcessInstance] = {}
        self._instances_lock = threading.Lock()
        self._io_pool = ThreadPoolExecutor(max_workers=io_workers,
                                           thread_name_prefix="flowgraft-io")
        self._runner_pool = ThreadPoolExecutor(max_workers=runner_workers,
                                               thread_name_prefix="flowgraft-run")

    # -- lifecycle ---------------------------------------------------------

    def shutdown(self, wait: bool = True) -> None:
        self._io_pool.shutdown(wait=wait)
        self._runner_pool.shutdown(wait=wait)

    @property
    def policies(self) -> dict[str, InvocationPolicy]:
        return dict(self._policies)

    # -- starting ----------------------------------------------------------

    def start_instance(self, definition: ProcessDefinition,
                       variables: dict | None = None) -> ProcessInstance:
        """Create a Running instance with one token at the start event.

        Resolves every service reference once; the chosen versions are
        pinned for the life of the instance. The start is journaled
        before the instance is returned.
        """
        variables = deep_copy(variables) if variables else {}
        if not isinstance(variables, dict) or not is_tree(variables):
            raise ValueError("initial variables must be a JSON-shaped map")
        errors = [d for d in validate(definition)
                  if d.severity is Severity.ERROR]
        if errors:
            raise StartError(
                StartError.DEFINITION_HAS_ERRORS,
                "; ".join(f"{d.code.value}({d.subject_id})" for d in errors))

        resolved: dict[str, str] = {}
        for task in definition.service_tasks:
            ref = task.service
            if ref.policy and ref.policy not in self._policies:
                raise StartError(StartError.DEFINITION_HAS_ERRORS,
                                 f"unknown policy {ref.policy!r} on task "
                                 f"{task.node_id!r}")
            try:
                registration = self._registry.resolve(ref.service_id,
                                                      ref.version_req)
            except RegistryError:
                raise StartError(StartError.UNRESOLVABLE_SERVICE,
                                 f"{ref.service_id} {ref.version_req}") from None
            pin = str(registration.version)
            if resolved.setdefault(ref.service_id, pin) != pin:
                raise StartError(
                    StartError.UNRESOLVABLE_SERVICE,
                    f"conflicting version pins for {ref.service_id!r}: "
                    f"{resolved[ref.service_id]} vs {pin}")

        token = Token(definition.start_node.node_id, TokenPhase.ARRIVED)
        instance = ProcessInstance(
            instance_id=uuid.uuid4().hex,
            definition_id=definition.definition_id,
            definition_version=definition.version,
            tokens=[token],
            variables=variables,
            status=InstanceStatus.RUNNING,
            resolved_services=resolved,
            started_at_ms=0,
        )
        instance._definition = definition
        started = self._journal.append(jn.INSTANCE_STARTED, {
            "definitionId": definition.definition_id,
            "definitionVersion": definition.version,
            "variables": deep_copy(variables),
            "resolvedServices": dict(resolved),
            "tokens": [token.to_dict()],
        }, instance.instance_id)
        # The journal event is the authoritative clock reading, so live
        # state and journal reductions agree exactly.
        instance.started_at_ms = started.ts_ms
        with self._instances_lock:
            self._instances[instance.instance_id] = instance
        return instance

    def start_workflow(self, definition_id: str,
                       version: str | None = None,
                       variables: dict | None = None) -> ProcessInstance:
        """Start from the catalog; retired deployments reject new instances."""
        try:
            deployment = self._registry.get_deployment(definition_id, version)
        except RegistryError as exc:
            raise StartError(StartError.UNKNOWN_WORKFLOW, str(exc)) from exc
        if deployment.state is DeploymentState.RETIRED:
            raise StartError(StartError.WORKFLOW_RETIRED,
                             f"{definition_id} {deployment.version} is retired")
        return self.start_instance(deployment.definition, variables)

    # -- lookup --------------------------------------------------------------

    def get_instance(self, instance_id: str) -> ProcessInstance | None:
        with self._instances_lock:
            return self._instances.get(instance_id)

    def list_instances(self) -> list[ProcessInstance]:
        with self._instances_lock:
            instances = list(self._instances.values())
        return sorted(instances, key=lambda i: (i.started_at_ms, i.instance_id))

    # -- stepping ------------------------------------------------------------

    def step(self, instance: ProcessInstance) -> StepOutcome:
        with instance._lock:
            return self._step_locked(instance)

    def _step_locked(self, inst: ProcessInstance) -> StepOutcome:
        if inst._engine_error is not None:
            exc, inst._engine_error = inst._engine_error, None
            raise exc
        if inst.status is not InstanceStatus.RUNNING:
            return StepOutcome.finished(inst.status)
        definition = inst._definition

        while inst._completions:
            epoch, node_id, result = inst._completions.popleft()
            if epoch != inst._epoch:
                continue  # completion from a cancelled/faulted epoch
            return self._apply_completion(inst, definition, node_id, result)

        for token in list(inst.tokens):
            if token.phase is not TokenPhase.ARRIVED:
                continue
            node = definition.node_map[token.node_id]
            if (node.kind is NodeKind.PARALLEL_GATEWAY
                    and len(definition.incoming[node.node_id]) > 1
                    and not self._join_ready(inst, definition, node)):
                continue
            return self._fire(inst, definition, node, token)

        if inst._inflight > 0:
            return StepOutcome.awaiting_io()
        return self._fault(inst, None,
                           "no runnable token: a join can never complete")

    def run_to_completion(self, instance: ProcessInstance) -> ProcessInstance:
        """Step until terminal. Wall time is bounded by the per-task
        policies (timeout x attempts + backoff) over the task count."""
        while True:
            outcome = self.step(instance)
            if outcome.kind is StepKind.FINISHED:
                return instance
            if outcome.kind is StepKind.PROGRESSED:
                continue
            instance._wakeup.wait(0.05)
            instance._wakeup.clear()

    def run_async(self, instance: ProcessInstance) -> Future:
        future = self._runner_pool.submit(self.run_to_completion, instance)
        instance._runner = future
        return future

    def cancel_instance(self, instance: ProcessInstance) -> ProcessInstance:
        """Stop a Running instance; in-flight call results are discarded."""
        with instance._lock:
            if instance.status is not InstanceStatus.RUNNING:
                raise CancelError(CancelError.NOT_RUNNING,
                                  f"instance is {instance.status.value}")
            event = self._journal.append(jn.INSTANCE_CANCELLED, {},
                                         instance.instance_id)
            instance._epoch += 1
            instance.tokens.clear()
            instance.status = InstanceStatus.CANCELLED
            instance.finished_at_ms = event.ts_ms
            instance._wakeup.set()
        return instance

    # -- node semantics -------------------------------------------------------

    def _fire(self, inst: ProcessInstance, definition: ProcessDefinition,
              node: Node, token: Token) -> StepOutcome:
        out = definition.outgoing[node.node_id]

        if node.kind is NodeKind.START_EVENT:
            flow = out[0]
            self._move(inst, node, [token],
                       [Token(flow.target_id, TokenPhase.ARRIVED, flow.flow_id)])
            return StepOutcome.progressed()

        if node.kind is NodeKind.END_EVENT:
            self._move(inst, node, [token], [])
            if not inst.tokens:
                return self._complete(inst)
            return StepOutcome.progressed()

        if node.kind is NodeKind.SERVICE_TASK:
            return self._fire_service_task(inst, node, token)

        if node.kind is NodeKind.EXCLUSIVE_GATEWAY:
            if len(out) == 1:  # converging merge forwards each token
                flow = out[0]
                self._move(inst, node, [token],
                           [Token(flow.target_id, TokenPhase.ARRIVED,
                                  flow.flow_id)])
                return StepOutcome.progressed()
            chosen, first_error = None, None
            for flow in out:
                if flow.flow_id == node.default_flow_id:
                    continue
                if flow.condition is None:
                    chosen = flow
                    break
                try:
                    if flow.condition.evaluate(inst.variables):
                        chosen = flow
                        break
                except EvalError as exc:
                    if first_error is None:
                        first_error = exc
            if chosen is None and node.default_flow_id:
                chosen = next(f for f in out
                              if f.flow_id == node.default_flow_id)
            if chosen is None:
                detail = (str(first_error) if first_error
                          else "no outgoing condition was true and no "
                               "default flow exists")
                return self._fault(inst, node.node_id,
                                   f"BAD_CONDITION: {detail}")
            self._move(inst, node, [token],
                       [Token(chosen.target_id, TokenPhase.ARRIVED,
                              chosen.flow_id)])
            return StepOutcome.progressed()

        # Parallel gateway.
        if len(out) > 1:  # fork: one token per outgoing flow
            produced = [Token(f.target_id, TokenPhase.ARRIVED, f.flow_id)
                        for f in out]
            self._move(inst, node, [token], produced)
            return StepOutcome.progressed()
        # Join: readiness was checked by the step scan.
        consumed = [Token(node.node_id, TokenPhase.ARRIVED, f.flow_id)
                    for f in definition.incoming[node.node_id]]
        flow = out[0]
        self._move(inst, node, consumed,
                   [Token(flow.target_id, TokenPhase.ARRIVED, flow.flow_id)])
        return StepOutcome.progressed()

    def _fire_service_task(self, inst: ProcessInstance, node: Node,
                           token: Token) -> StepOutcome:
        try:
            request = build_request(node, inst.variables)
        except VariablePathError as exc:
            return self._fail_task(inst, node, token, "MappingError", 0,
                                   f"input mapping failed: {exc}")
        target = self._registry.get_service(
            node.service.service_id,
            inst.resolved_services[node.service.service_id])
        policy = self._policies.get(node.service.policy or "default",
                                    DEFAULT_POLICY)
        waiting = Token(node.node_id, TokenPhase.AWAITING_SERVICE, token.via)
        self._move(inst, node, [token], [waiting])
        inst._inflight += 1
        self._io_pool.submit(self._run_invocation, inst, inst._epoch, node,
                             request, target, policy)
        return StepOutcome.progressed()

    def _apply_completion(self, inst: ProcessInstance,
                          definition: ProcessDefinition, node_id: str,
                          result: InvocationResult) -> StepOutcome:
        node = definition.node_map[node_id]
        token = next(t for t in inst.tokens
                     if t.node_id == node_id
                     and t.phase is TokenPhase.AWAITING_SERVICE)
        if not result.ok:
            kind = result.failure_kind or "Failure"
            return self._fail_task(inst, node, token, kind, result.attempts,
                                   result.error or kind)
        try:
            assignments = build_assignments(node, result.response)
        except VariablePathError as exc:
            return self._fail_task(inst, node, token, "MappingError",
                                   result.attempts,
                                   f"output mapping failed: {exc}")
        flow = definition.outgoing[node_id][0]
        produced = Token(flow.target_id, TokenPhase.ARRIVED, flow.flow_id)
        self._journal.append(jn.TASK_COMPLETED, {
            "node": node_id,
            "response": result.response,
            "attempts": result.attempts,
            "totalLatencyMs": result.total_latency_ms,
            "assignments": assignments,
            "consumed": [token.to_dict()],
            "produced": [produced.to_dict()],
        }, inst.instance_id)
        apply_assignments(inst.variables, assignments)
        self._remove_tokens(inst, [token])
        inst.tokens.append(produced)
        return StepOutcome.progressed()

    # -- transition helpers ----------------------------------------------------

    def _move(self, inst: ProcessInstance, node: Node,
              consumed: list[Token], produced: list[Token]) -> None:
        self._journal.append(jn.TOKEN_MOVED, {
            "node": node.node_id,
            "consumed": [t.to_dict() for t in consumed],
            "produced": [t.to_dict() for t in produced],
        }, inst.instance_id)
        self._remove_tokens(inst, consumed)
        inst.tokens.extend(produced)

    def _remove_tokens(self, inst: ProcessInstance,
                       consumed: list[Token]) -> None:
        for token in consumed:
            inst.tokens.remove(token)

    def _complete(self, inst: ProcessInstance) -> StepOutcome:
        event = self._journal.append(jn.INSTANCE_COMPLETED, {},
                                     inst.instance_id)
        inst.status = InstanceStatus.COMPLETED
        inst.finished_at_ms = event.ts_ms
        inst._wakeup.set()
        return StepOutcome.finished(InstanceStatus.COMPLETED)

    def _fail_task(self, inst: ProcessInstance, node: Node, token: Token,
                   kind: str, attempts: int, error: str) -> StepOutcome:
        self._journal.append(jn.TASK_FAILED, {
            "node": node.node_id, "kind": kind, "attempts": attempts,
            "error": error, "consumed": [token.to_dict()],
        }, inst.instance_id)
        self._remove_tokens(inst, [token])
        return self._fault(inst, node.node_id, error)

    def _fault(self, inst: ProcessInstance, node_id: str | None,
               error: str) -> StepOutcome:
        event = self._journal.append(jn.INSTANCE_FAULTED,
                                     {"node": node_id, "error": error},
                                     inst.instance_id)
        inst._epoch += 1
        inst.tokens.clear()
        inst.status = InstanceStatus.FAULTED
        inst.fault_detail = {"nodeId": node_id, "error": error}
        inst.finished_at_ms = event.ts_ms
        inst._wakeup.set()
        return StepOutcome.finished(InstanceStatus.FAULTED)

    def _join_ready(self, inst: ProcessInstance,
                    definition: ProcessDefinition, node: Node) -> bool:
        delivered = {t.via for t in inst.tokens
                     if t.node_id == node.node_id
                     and t.phase is TokenPhase.ARRIVED}
        needed = {f.flow_id for f in definition.incoming[node.node_id]}
        return needed <= delivered

    # -- async invocation ---------------------------------------------------

    def _run_invocation(self, inst: ProcessInstance, epoch: int, node: Node,
                        request: dict, target, policy: InvocationPolicy) -> None:
        def emit(kind: str, payload: dict) -> None:
            with inst._lock:
                if (inst._epoch != epoch
                        or inst.status is not InstanceStatus.RUNNING):
                    return
                self._journal.append(kind, payload, inst.instance_id)

        def is_live() -> bool:
            with inst._lock:
                return (inst._epoch == epoch
                        and inst.status is InstanceStatus.RUNNING)

        try:
            result = self._invoker.invoke(
                target, request, policy, instance_id=inst.instance_id,
                node_id=node.node_id, emit=emit, is_live=is_live)
        except BaseException as exc:  # journal failure: stop this instance
            with inst._lock:
                inst._inflight -= 1
                inst._engine_error = exc
                inst._wakeup.set()
            return
        with inst._lock:
            inst._inflight -= 1
            if (inst._epoch == epoch
                    and inst.status is InstanceStatus.RUNNING):
                inst._completions.append((epoch, node.node_id, result))
            inst._wakeup.set()

    # -- recovery ------------------------------------------------------------

    def adopt(self, snapshot: dict) -> ProcessInstance:
        """Re-create an instance from a journal-reduced snapshot."""
        status = InstanceStatus(snapshot["status"])
        instance = ProcessInstance(
            instance_id=snapshot["instanceId"],
            definition_id=snapshot["definitionId"],
            definition_version=snapshot["definitionVersion"],
            tokens=[Token.from_dict(t) for t in snapshot["tokens"]],
            variables=deep_copy(snapshot["variables"]),
            status=status,
            resolved_services=dict(snapshot["resolvedServices"]),
            started_at_ms=snapshot["startedAtMs"],
            finished_at_ms=snapshot.get("finishedAtMs"),
            fault_detail=deep_copy(snapshot.get("faultDetail")),
        )
        if status is InstanceStatus.RUNNING:
            deployment = self._registry.get_deployment(
                instance.definition_id, instance.definition_version)
            instance._definition = deployment.definition
        with self._instances_lock:
            self._instances[instance.instance_id] = instance
        return instance

    def resume(self, instance: ProcessInstance) -> None:
        """Re-submit calls for tokens that were awaiting a service at crash.

        Delivery is at-least-once: a call that was in flight when the
        process died is invoked again.
        """
        with instance._lock:
            if instance.status is not InstanceStatus.RUNNING:
                return
            definition = instance._definition
            for token in [t for t in instance.tokens
                          if t.phase is TokenPhase.AWAITING_SERVICE]:
                node = definition.node_map[token.node_id]
                try:
                    request = build_request(node, instance.variables)
                except VariablePathError as exc:
                    self._fail_task(instance, node, token, "MappingError", 0,
                                    f"input mapping failed: {exc}")
                    return
                target = self._registry.get_service(
                    node.service.service_id,
                    instance.resolved_services[node.service.service_id])
                policy = self._policies.get(node.service.policy or "default",
                                            DEFAULT_POLICY)
                instance._inflight += 1
                self._io_pool.submit(self._run_invocation, instance,
                                     instance._epoch, node, request, target,
                                     policy)
