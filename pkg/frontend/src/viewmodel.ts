/** Pure projections from wire bodies to the structures the panels render.
 *
 * Everything here is computed from service responses alone. No provenance
 * is derived locally: the DAG's node set is the description's activities,
 * its states are the instance snapshot's, nothing more.
 */

import type {
  ActivityState,
  InstanceSnapshot,
  InstanceStatus,
  OutcomeKind,
  Reconstruction,
} from "./types.js";

export const STATE_ORDER: readonly ActivityState[] = [
  "PENDING",
  "SCHEDULED",
  "RUNNING",
  "COMPLETED",
  "FAILED",
  "SKIPPED",
];

/** One color per lifecycle state, the legend in every DAG rendering. */
export const STATE_COLORS: Record<ActivityState, string> = {
  PENDING: "#9ca3af",
  SCHEDULED: "#60a5fa",
  RUNNING: "#f59e0b",
  COMPLETED: "#22c55e",
  FAILED: "#ef4444",
  SKIPPED: "#a78bfa",
};

export interface InstanceRow {
  instanceId: string;
  definition: string;
  status: InstanceStatus;
  done: number;
  total: number;
  fraction: number;
}

export function instanceRows(instances: InstanceSnapshot[]): InstanceRow[] {
  const rows = instances.map((s) => {
    const states = Object.values(s.activityStates);
    const done = states.filter((v) => v === "COMPLETED").length;
    return {
      instanceId: s.instanceId,
      definition: `${s.descriptionName}@${s.descriptionVersion}`,
      status: s.status,
      done,
      total: states.length,
      fraction: states.length ? done / states.length : 0,
    };
  });
  rows.sort((a, b) => (a.instanceId < b.instanceId ? -1 : a.instanceId > b.instanceId ? 1 : 0));
  return rows;
}

export interface DagNode {
  taskName: string;
  state: ActivityState;
  color: string;
  executable: string;
}

export interface DagView {
  instanceId: string;
  definition: string;
  status: InstanceStatus;
  nodes: DagNode[];
  edges: [string, string][];
}

/** Project a reconstruct payload onto the DAG panel. Node set equals the
 * description's activities, edge set equals its edges, states come from the
 * instance snapshot in the same payload. */
export function dagView(recon: Reconstruction): DagView {
  const { instance, description } = recon;
  return {
    instanceId: instance.instanceId,
    definition: `${description.name}@${description.version}`,
    status: instance.status,
    nodes: description.activities.map((a) => {
      const state = instance.activityStates[a.taskName] ?? "PENDING";
      return {
        taskName: a.taskName,
        state,
        color: STATE_COLORS[state],
        executable: a.executable,
      };
    }),
    edges: description.edges.map(([a, b]) => [a, b]),
  };
}

export interface NodePosition {
  taskName: string;
  col: number;
  row: number;
}

/** Layered left-to-right placement: a node's column is the longest path
 * from any root, its row is its rank within the column. Pure and
 * deterministic so the SVG for a given payload never changes. */
export function layoutDag(
  taskNames: string[],
  edges: [string, string][],
): NodePosition[] {
  const preds = new Map<string, string[]>(taskNames.map((n) => [n, []]));
  for (const [from, to] of edges) {
    preds.get(to)?.push(from);
  }
  const col = new Map<string, number>();
  const depth = (name: string, trail: Set<string>): number => {
    const known = col.get(name);
    if (known !== undefined) return known;
    if (trail.has(name)) return 0; // defensive; descriptions are acyclic
    trail.add(name);
    const ps = preds.get(name) ?? [];
    const d = ps.length ? 1 + Math.max(...ps.map((p) => depth(p, trail))) : 0;
    trail.delete(name);
    col.set(name, d);
    return d;
  };
  for (const n of taskNames) depth(n, new Set());
  const rowCounter = new Map<number, number>();
  return taskNames.map((name) => {
    const c = col.get(name) ?? 0;
    const r = rowCounter.get(c) ?? 0;
    rowCounter.set(c, r + 1);
    return { taskName: name, col: c, row: r };
  });
}

/** Human-readable preview of an outcome payload. Text kinds render as text,
 * data products as a hex window. */
export function payloadPreview(kind: OutcomeKind, payload: Uint8Array): string[] {
  if (kind === "ERROR_LOG" || kind === "STATUS") {
    const text = new TextDecoder("utf-8", { fatal: false }).decode(payload);
    const clipped = text.length > 400 ? `${text.slice(0, 400)}…` : text;
    return clipped.split("\n");
  }
  const window = payload.slice(0, 48);
  const lines: string[] = [];
  for (let off = 0; off < window.length; off += 16) {
    const chunk = Array.from(window.slice(off, off + 16));
    const hex = chunk.map((b) => b.toString(16).padStart(2, "0")).join(" ");
    lines.push(`${off.toString(16).padStart(4, "0")}  ${hex}`);
  }
  if (payload.length > window.length) {
    lines.push(`… ${payload.length} bytes total`);
  }
  return lines;
}

export function formatBytes(n: number): string {
  if (n < 1024) return `${n} B`;
  const units = ["KiB", "MiB", "GiB", "TiB"];
  let v = n;
  let i = -1;
  do {
    v /= 1024;
    i += 1;
  } while (v >= 1024 && i < units.length - 1);
  return `${v.toFixed(1)} ${units[i]}`;
}
