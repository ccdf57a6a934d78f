/** Structured-text renderings of diff, validation, and comparison bodies.
 *
 * These mirror the service CLI's plain-text output line for line, so a
 * researcher sees the same text in the terminal and in the dashboard.
 */

import type { ComparisonBody, SpecDiffBody, SpecValidationBody } from "./types.js";

/** Value formatting used in field-change lines: strings quoted, lists in
 * square brackets, maps in braces, booleans capitalized. */
export function rep(v: unknown): string {
  if (typeof v === "string") {
    return `'${v.replace(/\\/g, "\\\\").replace(/'/g, "\\'")}'`;
  }
  if (typeof v === "number" || typeof v === "bigint") return String(v);
  if (typeof v === "boolean") return v ? "True" : "False";
  if (v === null || v === undefined) return "None";
  if (Array.isArray(v)) return `[${v.map(rep).join(", ")}]`;
  if (typeof v === "object") {
    const entries = Object.entries(v as Record<string, unknown>);
    return `{${entries.map(([k, val]) => `${rep(k)}: ${rep(val)}`).join(", ")}}`;
  }
  return String(v);
}

export function table(headers: string[], rows: (string | number)[][]): string[] {
  const cells = [headers, ...rows.map((r) => r.map(String))];
  const widths = headers.map((_, i) =>
    Math.max(...cells.map((row) => (row[i] ?? "").length)),
  );
  const body = [cells[0]!, widths.map((w) => "-".repeat(w)), ...cells.slice(1)];
  return body.map((row) =>
    row.map((c, i) => c.padEnd(widths[i] ?? 0)).join("  ").replace(/\s+$/, ""),
  );
}

export function kv(pairs: [string, unknown][]): string[] {
  const width = Math.max(0, ...pairs.map(([k]) => k.length));
  return pairs.map(([k, v]) => `${k.padEnd(width)}  ${v}`);
}

export function diffText(d: SpecDiffBody): string[] {
  const lines: string[] = [];
  for (const name of d.addedActivities) lines.push(`+ activity ${name}`);
  for (const name of d.removedActivities) lines.push(`- activity ${name}`);
  for (const mod of d.modifiedActivities) {
    for (const field of Object.keys(mod.fields).sort()) {
      const change = mod.fields[field]!;
      lines.push(`~ ${mod.taskName}.${field}: ${rep(change.from)} -> ${rep(change.to)}`);
    }
  }
  for (const [a, b] of d.addedEdges) lines.push(`+ edge ${a} -> ${b}`);
  for (const [a, b] of d.removedEdges) lines.push(`- edge ${a} -> ${b}`);
  for (const ch of d.annotationChanges) {
    const sign = ch.op === "add" ? "+" : "-";
    lines.push(`${sign} note [${ch.target}] ${ch.key}: ${ch.text}`);
  }
  return lines.length ? lines : ["(no differences)"];
}

export function specValidationText(v: SpecValidationBody): string[] {
  const head = kv([
    ["candidate", `${v.candidate.name}@${v.candidate.version}`],
    ["reference", `${v.reference.name}@${v.reference.version}`],
    ["verdict", v.verdict],
  ]);
  return [...head, "", ...diffText(v.diff)];
}

export function comparisonText(c: ComparisonBody): string[] {
  const lines = kv([
    ["analysisA", c.analysisA],
    ["analysisB", c.analysisB],
    ["comparable", c.comparable ? "True" : "False"],
    ["makespanMsA", c.durationStats.makespanMsA],
    ["makespanMsB", c.durationStats.makespanMsB],
    ["failedEventsA", c.errorCounts.failedEventsA],
    ["failedEventsB", c.errorCounts.failedEventsB],
  ]);
  lines.push("", "version delta:");
  lines.push(...diffText(c.versionDelta).map((l) => `  ${l}`));
  if (c.outcomeDeltas.length) {
    lines.push("", "outcome deltas:");
    const rows = c.outcomeDeltas.map((d) => [
      d.taskName,
      d.digestA.slice(0, 16),
      d.digestB.slice(0, 16),
    ]);
    lines.push(...table(["task", "digestA", "digestB"], rows).map((l) => `  ${l}`));
  }
  return lines;
}
