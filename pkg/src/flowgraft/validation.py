"""Static analysis over parsed process graphs.

Finds the defect classes a diagram review would catch: nodes no token
can ever reach, cycles no exclusive-gateway choice can leave (which
would loop forever at runtime), flow labels that point at node names
that do not exist, and service references that a given registry view
cannot resolve.
"""

from __future__ import annotations

import networkx as nx

from .model import (Code, Diagnostic, NodeKind, ProcessDefinition,
                    error, warning)
from .semver import Version

# Flow-label prefixes that mark the label as a node-name reference.
_NAME_REF_PREFIXES = ("to ", "-> ")


def _graph(definition: ProcessDefinition) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(n.node_id for n in definition.nodes)
    g.add_edges_from((f.source_id, f.target_id) for f in definition.flows)
    return g


def _unreachable(definition: ProcessDefinition, g: nx.DiGraph) -> list[Diagnostic]:
    start = definition.start_node.node_id
    reachable = {start} | nx.descendants(g, start)
    return [error(Code.UNREACHABLE_NODE, n.node_id,
                  f"node {n.node_id!r} is not reachable from the start event")
            for n in definition.nodes if n.node_id not in reachable]


def _cycle_has_exit(definition: ProcessDefinition, cycle: list[str]) -> bool:
    """True when some diverging exclusive gateway in the cycle can leave it."""
    members = set(cycle)
    for node_id in cycle:
        node = definition.node_map[node_id]
        if node.kind is not NodeKind.EXCLUSIVE_GATEWAY:
            continue
        out = definition.outgoing[node_id]
        if len(out) < 2:
            continue
        if any(f.target_id not in members for f in out):
            return True
    return False


def _non_terminating_cycles(definition: ProcessDefinition,
                            g: nx.DiGraph) -> list[Diagnostic]:
    doc_order = {n.node_id: i for i, n in enumerate(definition.nodes)}
    flagged: dict[str, Diagnostic] = {}
    for cycle in nx.simple_cycles(g):
        if _cycle_has_exit(definition, cycle):
            continue
        subject = min(cycle, key=lambda n: doc_order.get(n, 0))
        if subject not in flagged:
            path = " -> ".join(sorted(cycle, key=lambda n: doc_order.get(n, 0)))
            flagged[subject] = error(
                Code.NON_TERMINATING_CYCLE, subject,
                f"cycle through {path} has no exclusive-gateway exit")
    return list(flagged.values())


def _name_mismatches(definition: ProcessDefinition) -> list[Diagnostic]:
    node_names = {n.name for n in definition.nodes if n.name}
    diags = []
    for f in definition.flows:
        for prefix in _NAME_REF_PREFIXES:
            if f.name.startswith(prefix):
                referenced = f.name[len(prefix):].strip()
                if referenced and referenced not in node_names:
                    diags.append(warning(
                        Code.NAME_MISMATCH, f.flow_id,
                        f"flow label {f.name!r} references node name "
                        f"{referenced!r} which does not exist"))
                break
    return diags


def _unknown_service_refs(definition: ProcessDefinition,
                          known_services) -> list[Diagnostic]:
    by_service: dict[str, list[Version]] = {}
    for service_id, version in known_services:
        by_service.setdefault(service_id, []).append(
            version if isinstance(version, Version) else Version.parse(version))
    diags = []
    for task in definition.service_tasks:
        ref = task.service
        versions = by_service.get(ref.service_id, [])
        if ref.version_req.resolve(versions) is None:
            diags.append(warning(
                Code.UNKNOWN_SERVICE_REF, task.node_id,
                f"no registered service satisfies {ref.service_id!r} "
                f"{ref.version_req}"))
    return diags


def validate(definition: ProcessDefinition,
             known_services=None) -> list[Diagnostic]:
    """All graph-level diagnostics, ordered by (severity, subjectId).

    `known_services` is an optional iterable of (serviceId, version)
    pairs; when given, service references that resolve to nothing yield
    UNKNOWN_SERVICE_REF warnings. An empty result means clean.
    """
    g = _graph(definition)
    diags = _unreachable(definition, g)
    diags += _non_terminating_cycles(definition, g)
    diags += _name_mismatches(definition)
    if known_services is not None:
        diags += _unknown_service_refs(definition, known_services)
    return sorted(diags, key=Diagnostic.sort_key)
