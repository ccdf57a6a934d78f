/** SVG rendering of a DAG view as a plain string, so it can be generated
 * and inspected without a document. Click targets carry `data-task`. */

import type { DagView } from "./viewmodel.js";
import { layoutDag } from "./viewmodel.js";

const NODE_W = 148;
const NODE_H = 46;
const COL_GAP = 210;
const ROW_GAP = 74;
const MARGIN = 24;

function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function dagSvg(view: DagView, selected?: string): string {
  const positions = layoutDag(
    view.nodes.map((n) => n.taskName),
    view.edges,
  );
  const at = new Map(positions.map((p) => [p.taskName, p]));
  const xy = (name: string): [number, number] => {
    const p = at.get(name);
    return p
      ? [MARGIN + p.col * COL_GAP, MARGIN + p.row * ROW_GAP]
      : [MARGIN, MARGIN];
  };

  const cols = Math.max(0, ...positions.map((p) => p.col));
  const rows = Math.max(0, ...positions.map((p) => p.row));
  const width = MARGIN * 2 + cols * COL_GAP + NODE_W;
  const height = MARGIN * 2 + rows * ROW_GAP + NODE_H;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" ` +
      `width="${width}" height="${height}" role="img">`,
    `<defs><marker id="arrow" viewBox="0 0 8 8" refX="7" refY="4" ` +
      `markerWidth="7" markerHeight="7" orient="auto">` +
      `<path d="M 0 0 L 8 4 L 0 8 z" fill="#64748b"/></marker></defs>`,
  );

  for (const [from, to] of view.edges) {
    const [x1, y1] = xy(from);
    const [x2, y2] = xy(to);
    const sx = x1 + NODE_W;
    const sy = y1 + NODE_H / 2;
    const tx = x2;
    const ty = y2 + NODE_H / 2;
    const mid = (sx + tx) / 2;
    parts.push(
      `<path class="edge" data-edge="${esc(from)}->${esc(to)}" ` +
        `d="M ${sx} ${sy} C ${mid} ${sy}, ${mid} ${ty}, ${tx} ${ty}" ` +
        `fill="none" stroke="#64748b" stroke-width="1.5" marker-end="url(#arrow)"/>`,
    );
  }

  for (const node of view.nodes) {
    const [x, y] = xy(node.taskName);
    const ring = node.taskName === selected ? ' stroke="#0f172a" stroke-width="3"' : ' stroke="#334155" stroke-width="1"';
    parts.push(
      `<g class="node" data-task="${esc(node.taskName)}" cursor="pointer">`,
      `<rect x="${x}" y="${y}" rx="8" width="${NODE_W}" height="${NODE_H}" ` +
        `fill="${node.color}"${ring}/>`,
      `<text x="${x + NODE_W / 2}" y="${y + 19}" text-anchor="middle" ` +
        `font-size="13" font-weight="600" fill="#0f172a">${esc(node.taskName)}</text>`,
      `<text x="${x + NODE_W / 2}" y="${y + 36}" text-anchor="middle" ` +
        `font-size="11" fill="#1e293b">${esc(node.state)}</text>`,
      `</g>`,
    );
  }

  parts.push("</svg>");
  return parts.join("");
}
