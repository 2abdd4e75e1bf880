/** SVG rendering of process graphs.
 *
 * Exactly one glyph per node (data-node-id) and one edge per flow
 * (data-flow-id); live execution state overlays as a badge class per
 * node: idle | active | completed | faulted.
 */

import type { GraphNode, ProcessGraph } from "./bpmn.js";
import { computeLayout, type Layout } from "./layout.js";

export type NodeBadge = "idle" | "active" | "completed" | "faulted";

const ESCAPES: Record<string, string> = {
  "&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;", "'": "&apos;",
};

export function escapeXml(text: string): string {
  return text.replace(/[&<>"']/g, (c) => ESCAPES[c]);
}

function nodeLabel(node: GraphNode): string {
  return node.name || node.id;
}

function glyph(node: GraphNode, layout: Layout, badge: NodeBadge): string {
  const { x, y, width, height } = layout.positions[node.id];
  const cls = `node node-${badge}`;
  const title = `<title>${escapeXml(node.id)}</title>`;
  const parts: string[] = [];
  switch (node.kind) {
    case "StartEvent":
      parts.push(`<circle cx="${x}" cy="${y}" r="${width / 2}" class="shape event-start"/>`);
      break;
    case "EndEvent":
      parts.push(`<circle cx="${x}" cy="${y}" r="${width / 2}" class="shape event-end"/>`);
      break;
    case "ServiceTask": {
      const label = escapeXml(nodeLabel(node));
      parts.push(
        `<rect x="${x - width / 2}" y="${y - height / 2}" width="${width}" ` +
        `height="${height}" rx="8" class="shape task"/>`,
        `<text x="${x}" y="${y + 4}" class="label task-label">${label}</text>`);
      if (node.service) {
        parts.push(`<text x="${x}" y="${y + height / 2 + 14}" ` +
                   `class="label service-label">${escapeXml(node.service)}</text>`);
      }
      break;
    }
    case "ExclusiveGateway":
    case "ParallelGateway": {
      const h = width / 2;
      const points = `${x},${y - h} ${x + h},${y} ${x},${y + h} ${x - h},${y}`;
      parts.push(`<polygon points="${points}" class="shape gateway"/>`);
      const marker = node.kind === "ExclusiveGateway" ? "×" : "+";
      parts.push(`<text x="${x}" y="${y + 6}" class="label gateway-label">${marker}</text>`);
      break;
    }
  }
  if (node.kind !== "ServiceTask" && nodeLabel(node) !== node.id) {
    parts.push(`<text x="${x}" y="${y + height / 2 + 14}" class="label">` +
               `${escapeXml(nodeLabel(node))}</text>`);
  }
  if (badge !== "idle") {
    parts.push(`<circle cx="${x + width / 2 - 2}" cy="${y - height / 2 + 2}" ` +
               `r="7" class="badge badge-${badge}"/>`);
  }
  return `<g class="${cls}" data-node-id="${escapeXml(node.id)}">` +
         `${title}${parts.join("")}</g>`;
}

function edgePath(graph: ProcessGraph, layout: Layout, flowId: string):
    string {
  const flow = graph.flows.find((f) => f.id === flowId)!;
  const from = layout.positions[flow.source];
  const to = layout.positions[flow.target];
  if (!from || !to) return "";
  const x1 = from.x + from.width / 2;
  const y1 = from.y;
  const x2 = to.x - to.width / 2 - 4;
  const y2 = to.y;
  const midX = (x1 + x2) / 2;
  const path = y1 === y2
    ? `M ${x1} ${y1} L ${x2} ${y2}`
    : `M ${x1} ${y1} L ${midX} ${y1} L ${midX} ${y2} L ${x2} ${y2}`;
  const parts = [
    `<path d="${path}" class="flow${flow.isDefault ? " flow-default" : ""}" ` +
    `marker-end="url(#arrow)"/>`,
  ];
  const label = flow.name || (flow.condition ? `[${flow.condition}]` : "");
  if (label) {
    parts.push(`<text x="${midX}" y="${Math.min(y1, y2) - 6}" ` +
               `class="label flow-label">${escapeXml(label)}</text>`);
  }
  return `<g class="edge" data-flow-id="${escapeXml(flow.id)}">` +
         `${parts.join("")}</g>`;
}

export function renderDiagram(graph: ProcessGraph,
                              badges: Record<string, NodeBadge> = {}):
    string {
  const layout = computeLayout(graph);
  const edges = graph.flows.map((flow) => edgePath(graph, layout, flow.id));
  const glyphs = graph.nodes.map(
    (node) => glyph(node, layout, badges[node.id] ?? "idle"));
  return `<svg xmlns="http://www.w3.org/2000/svg" ` +
         `viewBox="0 0 ${layout.width} ${layout.height}" ` +
         `width="${layout.width}" height="${layout.height}" class="diagram">` +
         `<defs><marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" ` +
         `markerWidth="7" markerHeight="7" orient="auto-start-reverse">` +
         `<path d="M 0 0 L 10 5 L 0 10 z" class="arrowhead"/></marker></defs>` +
         `${edges.join("")}${glyphs.join("")}</svg>`;
}

/** Execution overlay badges derived from an instance snapshot. */
export function badgesForInstance(
    tokens: { node: string }[],
    completedNodes: Iterable<string>,
    faultedNode?: string | null): Record<string, NodeBadge> {
  const badges: Record<string, NodeBadge> = {};
  for (const node of completedNodes) badges[node] = "completed";
  for (const token of tokens) badges[token.node] = "active";
  if (faultedNode) badges[faultedNode] = "faulted";
  return badges;
}
