/** Layered left-to-right auto-layout.
 *
 * Columns are breadth-first depth from the start event (cycle-safe);
 * unreachable nodes land in an extra trailing column. Rows within a
 * column are ordered by the mean row of each node's predecessors to
 * keep edges short. Coordinates are centers.
 */

import type { ProcessGraph } from "./bpmn.js";

export interface NodeGeometry {
  x: number;
  y: number;
  width: number;
  height: number;
}

export interface Layout {
  positions: Record<string, NodeGeometry>;
  width: number;
  height: number;
}

export const COLUMN_GAP = 190;
export const ROW_GAP = 96;
export const MARGIN_X = 80;
export const MARGIN_Y = 64;

const SIZES: Record<string, { width: number; height: number }> = {
  StartEvent: { width: 36, height: 36 },
  EndEvent: { width: 36, height: 36 },
  ServiceTask: { width: 132, height: 56 },
  ExclusiveGateway: { width: 44, height: 44 },
  ParallelGateway: { width: 44, height: 44 },
};

export function computeLayout(graph: ProcessGraph): Layout {
  const successors = new Map<string, string[]>();
  const predecessors = new Map<string, string[]>();
  for (const node of graph.nodes) {
    successors.set(node.id, []);
    predecessors.set(node.id, []);
  }
  for (const flow of graph.flows) {
    successors.get(flow.source)?.push(flow.target);
    predecessors.get(flow.target)?.push(flow.source);
  }

  const depth = new Map<string, number>();
  const start = graph.nodes.find((node) => node.kind === "StartEvent");
  if (start) {
    depth.set(start.id, 0);
    let frontier = [start.id];
    while (frontier.length > 0) {
      const next: string[] = [];
      for (const id of frontier) {
        for (const succ of successors.get(id) ?? []) {
          if (!depth.has(succ)) {
            depth.set(succ, (depth.get(id) ?? 0) + 1);
            next.push(succ);
          }
        }
      }
      frontier = next;
    }
  }
  const maxDepth = Math.max(0, ...depth.values());
  for (const node of graph.nodes) {  // unreachable nodes trail the layout
    if (!depth.has(node.id)) depth.set(node.id, maxDepth + 1);
  }

  const columns = new Map<number, string[]>();
  for (const node of graph.nodes) {
    const column = depth.get(node.id)!;
    if (!columns.has(column)) columns.set(column, []);
    columns.get(column)!.push(node.id);
  }

  // Order rows by predecessor barycenter, one left-to-right pass.
  const row = new Map<string, number>();
  const orderedColumns = [...columns.keys()].sort((a, b) => a - b);
  for (const column of orderedColumns) {
    const members = columns.get(column)!;
    const keyed = members.map((id, index) => {
      const prev = (predecessors.get(id) ?? [])
        .filter((p) => row.has(p))
        .map((p) => row.get(p)!);
      const barycenter = prev.length
        ? prev.reduce((a, b) => a + b, 0) / prev.length
        : index;
      return { id, barycenter, index };
    });
    keyed.sort((a, b) => a.barycenter - b.barycenter || a.index - b.index);
    keyed.forEach((entry, position) => row.set(entry.id, position));
  }

  const positions: Record<string, NodeGeometry> = {};
  let width = 0;
  let height = 0;
  for (const node of graph.nodes) {
    const size = SIZES[node.kind];
    const x = MARGIN_X + depth.get(node.id)! * COLUMN_GAP;
    const y = MARGIN_Y + row.get(node.id)! * ROW_GAP;
    positions[node.id] = { x, y, ...size };
    width = Math.max(width, x + size.width / 2 + MARGIN_X);
    height = Math.max(height, y + size.height / 2 + MARGIN_Y);
  }
  return { positions, width: Math.max(width, 320),
           height: Math.max(height, 200) };
}
