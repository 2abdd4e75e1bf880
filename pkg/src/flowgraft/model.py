"""Process graph model: nodes, flows, definitions, and diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property

from .expressions import Expression
from .semver import VersionRequirement


class NodeKind(str, Enum):
    START_EVENT = "StartEvent"
    END_EVENT = "EndEvent"
    SERVICE_TASK = "ServiceTask"
    EXCLUSIVE_GATEWAY = "ExclusiveGateway"
    PARALLEL_GATEWAY = "ParallelGateway"


class Severity(str, Enum):
    ERROR = "Error"
    WARNING = "Warning"


class Code(str, Enum):
    NO_START = "NO_START"
    MULTIPLE_START = "MULTIPLE_START"
    NO_END = "NO_END"
    DUPLICATE_ID = "DUPLICATE_ID"
    DANGLING_REF = "DANGLING_REF"
    UNREACHABLE_NODE = "UNREACHABLE_NODE"
    NON_TERMINATING_CYCLE = "NON_TERMINATING_CYCLE"
    NAME_MISMATCH = "NAME_MISMATCH"
    UNKNOWN_SERVICE_REF = "UNKNOWN_SERVICE_REF"
    BAD_GATEWAY_SHAPE = "BAD_GATEWAY_SHAPE"
    BAD_CONDITION = "BAD_CONDITION"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: Code
    subject_id: str
    message: str

    def sort_key(self) -> tuple:
        return (0 if self.severity is Severity.ERROR else 1,
                self.subject_id, self.code.value)

    def to_dict(self) -> dict:
        return {"severity": self.severity.value, "code": self.code.value,
                "subjectId": self.subject_id, "message": self.message}


def error(code: Code, subject_id: str, message: str) -> Diagnostic:
    return Diagnostic(Severity.ERROR, code, subject_id, message)


def warning(code: Code, subject_id: str, message: str) -> Diagnostic:
    return Diagnostic(Severity.WARNING, code, subject_id, message)


@dataclass(frozen=True)
class ServiceRef:
    service_id: str
    version_req: VersionRequirement
    policy: str | None = None


@dataclass(frozen=True)
class Node:
    node_id: str
    kind: NodeKind
    name: str = ""
    service: ServiceRef | None = None
    # (source path, destination path) pairs; empty means whole-tree default.
    input_mapping: tuple[tuple[str, str], ...] = ()
    output_mapping: tuple[tuple[str, str], ...] = ()
    default_flow_id: str | None = None


@dataclass(frozen=True)
class SequenceFlow:
    flow_id: str
    source_id: str
    target_id: str
    name: str = ""
    condition: Expression | None = None


@dataclass(frozen=True)
class ProcessDefinition:
    """Immutable executable graph; nodes and flows keep document order."""

    definition_id: str
    version: str
    name: str
    nodes: tuple[Node, ...]
    flows: tuple[SequenceFlow, ...]
    raw_document: bytes = field(repr=False, default=b"")

    @cached_property
    def node_map(self) -> dict[str, Node]:
        return {n.node_id: n for n in self.nodes}

    @cached_property
    def outgoing(self) -> dict[str, tuple[SequenceFlow, ...]]:
        out: dict[str, list[SequenceFlow]] = {n.node_id: [] for n in self.nodes}
        for f in self.flows:
            out[f.source_id].append(f)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def incoming(self) -> dict[str, tuple[SequenceFlow, ...]]:
        inc: dict[str, list[SequenceFlow]] = {n.node_id: [] for n in self.nodes}
        for f in self.flows:
            inc[f.target_id].append(f)
        return {k: tuple(v) for k, v in inc.items()}

    @cached_property
    def start_node(self) -> Node:
        return next(n for n in self.nodes if n.kind is NodeKind.START_EVENT)

    @cached_property
    def service_tasks(self) -> tuple[Node, ...]:
        return tuple(n for n in self.nodes if n.kind is NodeKind.SERVICE_TASK)

    def node(self, node_id: str) -> Node:
        return self.node_map[node_id]

    def flow(self, flow_id: str) -> SequenceFlow:
        return next(f for f in self.flows if f.flow_id == flow_id)

    def is_diverging(self, node: Node) -> bool:
        return len(self.outgoing[node.node_id]) > 1

    def with_version(self, version: str) -> "ProcessDefinition":
        return replace(self, version=version)
