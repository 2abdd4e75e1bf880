"""BPMN 2.0 XML parsing into validated ProcessDefinition graphs.

Supported element subset: startEvent, endEvent, serviceTask,
exclusiveGateway, parallelGateway, sequenceFlow (with condition
expressions and gateway default flows). Engine wiring lives in the
`urn:flowgraft:ext` namespace on serviceTask elements:

    <serviceTask id="charge" name="Charge card"
                 ext:service="payments" ext:versionReq="1.x"
                 ext:policy="default">
      <extensionElements>
        <ext:input from="order.total" to="amount"/>
        <ext:output from="receiptId" to="payment.receipt"/>
      </extensionElements>
    </serviceTask>

Unknown elements in foreign namespaces are ignored; unknown elements in
the BPMN namespace are rejected. Parsing is deterministic and keeps
document order for nodes and flows.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass

from .errors import ParseError
from .expressions import ExpressionSyntaxError, parse_expression
from .model import (Code, Diagnostic, Node, NodeKind, ProcessDefinition,
                    SequenceFlow, ServiceRef, error)
from .semver import VersionRequirement

BPMN_NS = "http://www.omg.org/spec/BPMN/20100524/MODEL"
EXT_NS = "urn:flowgraft:ext"

_NODE_TAGS = {
    "startEvent": NodeKind.START_EVENT,
    "endEvent": NodeKind.END_EVENT,
    "serviceTask": NodeKind.SERVICE_TASK,
    "exclusiveGateway": NodeKind.EXCLUSIVE_GATEWAY,
    "parallelGateway": NodeKind.PARALLEL_GATEWAY,
}
# BPMN-namespace children of <process> that carry no control flow.
_IGNORED_TAGS = {"documentation", "extensionElements", "laneSet"}
_FLOW_NODE_CHILD_TAGS = {"incoming", "outgoing", "documentation",
                         "extensionElements", "conditionExpression"}


@dataclass
class _RawProcess:
    process_id: str
    name: str
    nodes: list[Node]
    flows: list[SequenceFlow]
    diagnostics: list[Diagnostic]
    raw: bytes


def _tag(elem: ET.Element) -> tuple[str, str]:
    """(namespace, localname) of an element tag."""
    if elem.tag.startswith("{"):
        ns, _, local = elem.tag[1:].partition("}")
        return ns, local
    return "", elem.tag


def _require(elem: ET.Element, attr: str, what: str) -> str:
    value = elem.get(attr)
    if value is None or not value.strip():
        raise ParseError(ParseError.MISSING_ATTRIBUTE,
                         f"{what} is missing required attribute {attr!r}")
    return value.strip()


def _parse_service_task(elem: ET.Element, node_id: str, name: str,
                        diagnostics: list[Diagnostic]) -> Node:
    service_id = elem.get(f"{{{EXT_NS}}}service")
    if service_id is None or not service_id.strip():
        raise ParseError(ParseError.MISSING_ATTRIBUTE,
                         f"serviceTask {node_id!r} is missing ext:service")
    req_text = elem.get(f"{{{EXT_NS}}}versionReq")
    try:
        version_req = VersionRequirement.parse(req_text)
    except ValueError as exc:
        raise ParseError(ParseError.MISSING_ATTRIBUTE,
                         f"serviceTask {node_id!r}: {exc}") from None
    policy = elem.get(f"{{{EXT_NS}}}policy")

    inputs: list[tuple[str, str]] = []
    outputs: list[tuple[str, str]] = []
    for child in elem.iter():
        ns, local = _tag(child)
        if ns != EXT_NS:
            continue
        if local == "input":
            inputs.append((_require(child, "from", f"ext:input in {node_id!r}"),
                           _require(child, "to", f"ext:input in {node_id!r}")))
        elif local == "output":
            outputs.append((_require(child, "from", f"ext:output in {node_id!r}"),
                            _require(child, "to", f"ext:output in {node_id!r}")))

    return Node(node_id, NodeKind.SERVICE_TASK, name,
                service=ServiceRef(service_id.strip(), version_req,
                                   policy.strip() if policy else None),
                input_mapping=tuple(inputs), output_mapping=tuple(outputs))


def _parse_flow(elem: ET.Element,
                diagnostics: list[Diagnostic]) -> SequenceFlow:
    flow_id = _require(elem, "id", "sequenceFlow")
    source = _require(elem, "sourceRef", f"sequenceFlow {flow_id!r}")
    target = _require(elem, "targetRef", f"sequenceFlow {flow_id!r}")
    name = (elem.get("name") or "").strip()
    condition = None
    for child in elem:
        ns, local = _tag(child)
        if ns == BPMN_NS and local == "conditionExpression":
            text = (child.text or "").strip()
            try:
                condition = parse_expression(text)
            except ExpressionSyntaxError as exc:
                diagnostics.append(error(
                    Code.BAD_CONDITION, flow_id,
                    f"flow {flow_id!r} condition does not parse: {exc}"))
    return SequenceFlow(flow_id, source, target, name, condition)


def _scan(document: bytes) -> _RawProcess:
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        raise ParseError(ParseError.XML_MALFORMED, str(exc)) from None

    ns, local = _tag(root)
    if ns != BPMN_NS or local != "definitions":
        raise ParseError(ParseError.UNSUPPORTED_ELEMENT,
                         f"document root must be BPMN definitions, got {local!r}")
    processes = [c for c in root if _tag(c) == (BPMN_NS, "process")]
    if not processes:
        raise ParseError(ParseError.UNSUPPORTED_ELEMENT,
                         "document contains no process element")
    if len(processes) > 1:
        raise ParseError(ParseError.UNSUPPORTED_ELEMENT,
                         "multiple process elements are not supported")
    process = processes[0]
    process_id = _require(process, "id", "process")
    process_name = (process.get("name") or process_id).strip()

    diagnostics: list[Diagnostic] = []
    nodes: list[Node] = []
    flows: list[SequenceFlow] = []
    for child in process:
        cns, clocal = _tag(child)
        if cns != BPMN_NS:
            continue  # foreign extension content
        if clocal in _IGNORED_TAGS:
            continue
        if clocal == "sequenceFlow":
            flows.append(_parse_flow(child, diagnostics))
            continue
        kind = _NODE_TAGS.get(clocal)
        if kind is None:
            raise ParseError(ParseError.UNSUPPORTED_ELEMENT,
                             f"unsupported BPMN element <{clocal}>")
        node_id = _require(child, "id", clocal)
        name = (child.get("name") or "").strip()
        if kind is NodeKind.SERVICE_TASK:
            nodes.append(_parse_service_task(child, node_id, name, diagnostics))
        elif kind is NodeKind.EXCLUSIVE_GATEWAY:
            default = child.get("default")
            nodes.append(Node(node_id, kind, name,
                              default_flow_id=default.strip() if default else None))
        else:
            nodes.append(Node(node_id, kind, name))

    return _RawProcess(process_id, process_name, nodes, flows,
                       diagnostics, bytes(document))


def _structural_diagnostics(raw: _RawProcess) -> list[Diagnostic]:
    """Invariant checks that gate definition construction."""
    diags = list(raw.diagnostics)

    seen: set[str] = set()
    for ident in [n.node_id for n in raw.nodes] + [f.flow_id for f in raw.flows]:
        if ident in seen:
            diags.append(error(Code.DUPLICATE_ID, ident,
                               f"identifier {ident!r} is not unique"))
        seen.add(ident)

    node_ids = {n.node_id for n in raw.nodes}
    for f in raw.flows:
        for ref in (f.source_id, f.target_id):
            if ref not in node_ids:
                diags.append(error(Code.DANGLING_REF, f.flow_id,
                                   f"flow {f.flow_id!r} references unknown node {ref!r}"))

    starts = [n for n in raw.nodes if n.kind is NodeKind.START_EVENT]
    ends = [n for n in raw.nodes if n.kind is NodeKind.END_EVENT]
    if not starts:
        diags.append(error(Code.NO_START, raw.process_id,
                           "process has no start event"))
    for extra in starts[1:]:
        diags.append(error(Code.MULTIPLE_START, extra.node_id,
                           "process has more than one start event"))
    if not ends:
        diags.append(error(Code.NO_END, raw.process_id,
                           "process has no end event"))

    if any(d.code in (Code.DUPLICATE_ID, Code.DANGLING_REF) for d in diags):
        # Degree-based checks are ill-defined over a broken graph.
        return diags

    in_deg = {n.node_id: 0 for n in raw.nodes}
    out_deg = {n.node_id: 0 for n in raw.nodes}
    for f in raw.flows:
        out_deg[f.source_id] += 1
        in_deg[f.target_id] += 1

    for n in raw.nodes:
        i, o = in_deg[n.node_id], out_deg[n.node_id]
        if n.kind is NodeKind.START_EVENT:
            if i != 0:
                diags.append(error(Code.BAD_GATEWAY_SHAPE, n.node_id,
                                   "a flow enters the start event"))
            if o != 1:
                diags.append(error(Code.BAD_GATEWAY_SHAPE, n.node_id,
                                   f"start event needs exactly one outgoing flow, has {o}"))
        elif n.kind is NodeKind.END_EVENT:
            if o != 0:
                diags.append(error(Code.BAD_GATEWAY_SHAPE, n.node_id,
                                   "a flow leaves the end event"))
        elif n.kind is NodeKind.SERVICE_TASK:
            if i != 1 or o != 1:
                diags.append(error(Code.BAD_GATEWAY_SHAPE, n.node_id,
                                   f"service task needs exactly one incoming and one "
                                   f"outgoing flow, has {i} in / {o} out"))
        else:  # gateways: diverging (1 in, >=2 out) xor converging (>=2 in, 1 out)
            diverging = i == 1 and o >= 2
            converging = i >= 2 and o == 1
            if not (diverging or converging):
                diags.append(error(Code.BAD_GATEWAY_SHAPE, n.node_id,
                                   f"gateway must be diverging or converging, "
                                   f"has {i} in / {o} out"))

    flows_by_source: dict[str, list[SequenceFlow]] = {}
    for f in raw.flows:
        flows_by_source.setdefault(f.source_id, []).append(f)
    node_by_id = {n.node_id: n for n in raw.nodes}
    flow_ids = {f.flow_id for f in raw.flows}

    for n in raw.nodes:
        if n.kind is NodeKind.EXCLUSIVE_GATEWAY and n.default_flow_id:
            own = {f.flow_id for f in flows_by_source.get(n.node_id, [])}
            if n.default_flow_id not in flow_ids or n.default_flow_id not in own:
                diags.append(error(Code.BAD_CONDITION, n.node_id,
                                   f"default flow {n.default_flow_id!r} is not an "
                                   f"outgoing flow of gateway {n.node_id!r}"))

    for f in raw.flows:
        if f.condition is None:
            continue
        src = node_by_id[f.source_id]
        src_diverging = (src.kind is NodeKind.EXCLUSIVE_GATEWAY
                         and len(flows_by_source.get(src.node_id, [])) >= 2)
        if not src_diverging:
            diags.append(error(Code.BAD_CONDITION, f.flow_id,
                               f"flow {f.flow_id!r} carries a condition but does not "
                               f"leave a diverging exclusive gateway"))
        elif src.default_flow_id == f.flow_id:
            diags.append(error(Code.BAD_CONDITION, f.flow_id,
                               f"default flow {f.flow_id!r} must not carry a condition"))

    diags.sort(key=Diagnostic.sort_key)
    return diags


def parse_bpmn(document: bytes) -> ProcessDefinition:
    """Parse a BPMN document; structural invariant violations raise.

    Deterministic and side-effect-free: identical bytes always yield a
    structurally equal definition.
    """
    raw = _scan(document)
    diags = _structural_diagnostics(raw)
    errors = [d for d in diags if d.severity.value == "Error"]
    if errors:
        raise ParseError(ParseError.INVARIANT_VIOLATION,
                         "; ".join(f"{d.code.value}({d.subject_id})" for d in errors),
                         diagnostics=errors)
    return ProcessDefinition(raw.process_id, "0.0.0", raw.name,
                             tuple(raw.nodes), tuple(raw.flows), raw.raw)


def analyze(document: bytes, known_services=None) -> list[Diagnostic]:
    """Full diagnostic pipeline over raw bytes, for tooling and editors.

    Structural errors short-circuit (graph analyses over a broken graph
    would only produce noise); a structurally sound document gets the
    reachability/cycle/name/service checks. Raises ParseError only for
    malformed XML, unsupported elements, and missing attributes.
    """
    from .validation import validate  # local import keeps modules acyclic

    raw = _scan(document)
    diags = _structural_diagnostics(raw)
    if any(d.severity.value == "Error" for d in diags):
        return diags
    definition = ProcessDefinition(raw.process_id, "0.0.0", raw.name,
                                   tuple(raw.nodes), tuple(raw.flows), raw.raw)
    return sorted(diags + validate(definition, known_services),
                  key=Diagnostic.sort_key)
