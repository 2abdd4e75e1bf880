/** Client-side reading of BPMN documents for rendering and editor checks.
 *
 * A deliberately small XML scanner (namespace prefixes are treated as
 * part of the name and matched by local part) so the same code runs in
 * the browser and in tests without a DOM. The engine's parser remains
 * the authority; this one only needs enough structure to draw diagrams
 * and mirror the quick structural checks in the editor.
 */

export interface XmlElement {
  name: string;            // local name, prefix stripped
  attrs: Record<string, string>;  // keyed by local attribute name
  children: XmlElement[];
  text: string;
}

export interface GraphNode {
  id: string;
  kind: "StartEvent" | "EndEvent" | "ServiceTask"
      | "ExclusiveGateway" | "ParallelGateway";
  name: string;
  service?: string;
  defaultFlowId?: string;
}

export interface GraphFlow {
  id: string;
  source: string;
  target: string;
  name: string;
  condition?: string;
  isDefault?: boolean;
}

export interface ProcessGraph {
  processId: string;
  processName: string;
  nodes: GraphNode[];
  flows: GraphFlow[];
}

export interface EditorDiagnostic {
  severity: "Error" | "Warning";
  code: string;
  subjectId: string;
  message: string;
}

export class XmlSyntaxError extends Error {
  constructor(message: string, public readonly position: number) {
    super(message);
  }
}

const NODE_KINDS: Record<string, GraphNode["kind"]> = {
  startEvent: "StartEvent",
  endEvent: "EndEvent",
  serviceTask: "ServiceTask",
  exclusiveGateway: "ExclusiveGateway",
  parallelGateway: "ParallelGateway",
};

function localName(raw: string): string {
  const colon = raw.indexOf(":");
  return colon === -1 ? raw : raw.slice(colon + 1);
}

function decodeEntities(text: string): string {
  return text
    .replace(/&lt;/g, "<").replace(/&gt;/g, ">")
    .replace(/&quot;/g, '"').replace(/&apos;/g, "'")
    .replace(/&amp;/g, "&");
}

/** Parse an XML document into an element tree; throws XmlSyntaxError. */
export function parseXml(source: string): XmlElement {
  let pos = 0;
  const n = source.length;
  const stack: XmlElement[] = [];
  let root: XmlElement | null = null;

  const fail = (message: string): never => {
    throw new XmlSyntaxError(message, pos);
  };

  while (pos < n) {
    const lt = source.indexOf("<", pos);
    if (lt === -1) {
      if (stack.length > 0) fail("unexpected end of document");
      break;
    }
    const gapText = source.slice(pos, lt);
    if (stack.length > 0 && gapText.trim()) {
      stack[stack.length - 1].text += decodeEntities(gapText.trim());
    }
    pos = lt;
    if (source.startsWith("<!--", pos)) {
      const close = source.indexOf("-->", pos);
      if (close === -1) fail("unterminated comment");
      pos = close + 3;
      continue;
    }
    if (source.startsWith("<?", pos)) {
      const close = source.indexOf("?>", pos);
      if (close === -1) fail("unterminated declaration");
      pos = close + 2;
      continue;
    }
    if (source.startsWith("</", pos)) {
      const close = source.indexOf(">", pos);
      if (close === -1) fail("unterminated closing tag");
      const name = localName(source.slice(pos + 2, close).trim());
      const open = stack.pop();
      if (!open || open.name !== name) {
        fail(`mismatched closing tag </${name}>`);
      }
      pos = close + 1;
      if (stack.length === 0) break;
      continue;
    }

    // Opening (or self-closing) tag.
    let i = pos + 1;
    while (i < n && !/[\s/>]/.test(source[i])) i++;
    if (i === pos + 1) fail("empty tag name");
    const element: XmlElement = {
      name: localName(source.slice(pos + 1, i)),
      attrs: {}, children: [], text: "",
    };
    // Attributes.
    while (i < n) {
      while (i < n && /\s/.test(source[i])) i++;
      if (source[i] === ">" || source.startsWith("/>", i)) break;
      let j = i;
      while (j < n && !/[=\s/>]/.test(source[j])) j++;
      const attrName = source.slice(i, j);
      while (j < n && /\s/.test(source[j])) j++;
      if (source[j] !== "=") {
        pos = j;
        fail(`attribute ${attrName} is missing a value`);
      }
      j++;
      while (j < n && /\s/.test(source[j])) j++;
      const quote = source[j];
      if (quote !== '"' && quote !== "'") {
        pos = j;
        fail(`attribute ${attrName} value must be quoted`);
      }
      const end = source.indexOf(quote, j + 1);
      if (end === -1) {
        pos = j;
        fail(`unterminated value for ${attrName}`);
      }
      element.attrs[localName(attrName)] =
        decodeEntities(source.slice(j + 1, end));
      i = end + 1;
    }
    if (i >= n) fail("unterminated tag");

    if (stack.length > 0) {
      stack[stack.length - 1].children.push(element);
    } else if (root === null) {
      root = element;
    } else {
      fail("multiple root elements");
    }
    if (source.startsWith("/>", i)) {
      pos = i + 2;
    } else {
      stack.push(element);
      pos = i + 1;
    }
  }
  if (stack.length > 0) fail(`unclosed element <${stack[0].name}>`);
  if (root === null) {
    throw new XmlSyntaxError("document has no root element", pos);
  }
  return root;
}

/** Extract the process graph needed for diagrams and quick checks. */
export function parseProcessGraph(source: string): ProcessGraph {
  const root = parseXml(source);
  const definitions = root.name === "definitions" ? root : null;
  if (!definitions) {
    throw new XmlSyntaxError("document root must be <definitions>", 0);
  }
  const process = definitions.children.find((c) => c.name === "process");
  if (!process) {
    throw new XmlSyntaxError("document contains no <process>", 0);
  }
  const nodes: GraphNode[] = [];
  const flows: GraphFlow[] = [];
  for (const child of process.children) {
    const kind = NODE_KINDS[child.name];
    if (kind) {
      nodes.push({
        id: child.attrs.id ?? "",
        kind,
        name: child.attrs.name ?? "",
        service: child.attrs.service,
        defaultFlowId: child.attrs.default,
      });
    } else if (child.name === "sequenceFlow") {
      const condition = child.children.find(
        (c) => c.name === "conditionExpression");
      flows.push({
        id: child.attrs.id ?? "",
        source: child.attrs.sourceRef ?? "",
        target: child.attrs.targetRef ?? "",
        name: child.attrs.name ?? "",
        condition: condition?.text || undefined,
      });
    }
  }
  for (const flow of flows) {
    const gateway = nodes.find(
      (node) => node.id === flow.source && node.defaultFlowId === flow.id);
    if (gateway) flow.isDefault = true;
  }
  return {
    processId: process.attrs.id ?? "",
    processName: process.attrs.name ?? process.attrs.id ?? "",
    nodes, flows,
  };
}

/** Quick structural checks mirrored from the engine's validator.
 *
 * Only the cheap editor-facing subset; the server's validate endpoint
 * stays authoritative before any deploy.
 */
export function quickDiagnostics(graph: ProcessGraph): EditorDiagnostic[] {
  const out: EditorDiagnostic[] = [];
  const starts = graph.nodes.filter((node) => node.kind === "StartEvent");
  const ends = graph.nodes.filter((node) => node.kind === "EndEvent");
  if (starts.length === 0) {
    out.push({ severity: "Error", code: "NO_START",
               subjectId: graph.processId,
               message: "process has no start event" });
  }
  for (const extra of starts.slice(1)) {
    out.push({ severity: "Error", code: "MULTIPLE_START",
               subjectId: extra.id,
               message: "process has more than one start event" });
  }
  if (ends.length === 0) {
    out.push({ severity: "Error", code: "NO_END",
               subjectId: graph.processId,
               message: "process has no end event" });
  }
  const seen = new Set<string>();
  for (const id of [...graph.nodes.map((node) => node.id),
                    ...graph.flows.map((flow) => flow.id)]) {
    if (id && seen.has(id)) {
      out.push({ severity: "Error", code: "DUPLICATE_ID", subjectId: id,
                 message: `identifier "${id}" is not unique` });
    }
    seen.add(id);
  }
  const nodeIds = new Set(graph.nodes.map((node) => node.id));
  for (const flow of graph.flows) {
    for (const ref of [flow.source, flow.target]) {
      if (!nodeIds.has(ref)) {
        out.push({ severity: "Error", code: "DANGLING_REF",
                   subjectId: flow.id,
                   message: `flow "${flow.id}" references unknown node "${ref}"` });
      }
    }
  }
  return out;
}
