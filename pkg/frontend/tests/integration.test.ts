/** End-to-end checks against a real service process.
 *
 * Needs the Python package installed (`pip install -e .` at the repo root)
 * so the `tracegrid` command is on PATH. The server runs a data directory
 * seeded with the smoke rehearsal profile; the test drives further
 * transitions over HTTP exactly like an executor would.
 */

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { ApiError, ServiceClient } from "../src/client.js";
import { Poller } from "../src/poller.js";
import { instanceRows, dagView, payloadPreview, STATE_COLORS } from "../src/viewmodel.js";
import { dagSvg } from "../src/svg.js";
import type { InstancesSnapshot } from "../src/poller.js";

const PORT = 8900 + (process.pid % 90);
const BASE = `http://127.0.0.1:${PORT}`;
const POLL_INTERVAL = 500;

let dataDir: string;
let server: ChildProcess;
let client: ServiceClient;

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

async function waitFor<T>(
  probe: () => T | undefined,
  what: string,
  timeoutMs = 10_000,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const got = probe();
    if (got !== undefined) return got;
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await sleep(25);
  }
}

beforeAll(async () => {
  dataDir = mkdtempSync(join(tmpdir(), "tracegrid-dash-"));
  const seeded = spawnSync(
    "tracegrid",
    ["challenge", "--profile", "smoke", "--seed", "1", "--data-dir", dataDir],
    { encoding: "utf-8" },
  );
  if (seeded.error || seeded.status !== 0) {
    throw new Error(
      `could not seed the smoke profile; is the service package installed? ` +
        `${seeded.error ?? seeded.stderr}`,
    );
  }

  server = spawn("tracegrid", ["serve", "--data-dir", dataDir, "--addr", `127.0.0.1:${PORT}`], {
    stdio: "ignore",
  });
  client = new ServiceClient(BASE);
  const deadline = Date.now() + 15_000;
  for (;;) {
    try {
      const health = await client.health();
      if (health.ok) break;
    } catch {
      if (Date.now() > deadline) throw new Error("service did not come up");
      await sleep(250);
    }
  }
});

afterAll(() => {
  server?.kill();
  if (dataDir) rmSync(dataDir, { recursive: true, force: true });
});

describe("instance list against the smoke data", () => {
  it("shows every enacted instance as a completed row", async () => {
    const instances = await client.listInstances();
    const rows = instanceRows(instances);
    expect(rows.length).toBe(4); // smoke profile: 4 scans through 1 pipeline
    for (const row of rows) {
      expect(row.definition).toBe("thickness-quick@1");
      expect(row.status).toBe("COMPLETED");
      expect(row.fraction).toBe(1);
    }
  });
});

describe("live polling", () => {
  it("reflects a RUNNING to COMPLETED transition within one polling interval", async () => {
    const opened = await client.openInstance({
      descriptionName: "thickness-quick",
      inputs: { in: "scan-live" },
    });
    const id = opened.instance.instanceId;
    await client.postEvent(id, {
      taskName: "thickness-quick",
      fromState: "PENDING",
      toState: "SCHEDULED",
      simTimestamp: 0,
    });
    await client.postEvent(id, {
      taskName: "thickness-quick",
      fromState: "SCHEDULED",
      toState: "RUNNING",
      simTimestamp: 0,
    });

    const poller = new Poller(() => client.listInstances(), POLL_INTERVAL);
    const seen: { snap: InstancesSnapshot; at: number }[] = [];
    poller.onUpdate((snap) => seen.push({ snap, at: Date.now() }));
    poller.start();
    try {
      const rowState = (snap: InstancesSnapshot) =>
        snap.instances.find((s) => s.instanceId === id)?.activityStates["thickness-quick"];

      await waitFor(
        () => (rowState(poller.snapshot) === "RUNNING" ? true : undefined),
        "the running row to appear",
      );

      const t0 = Date.now();
      await client.postEvent(id, {
        taskName: "thickness-quick",
        fromState: "RUNNING",
        toState: "COMPLETED",
        simTimestamp: 1000,
        outcome: {
          kind: "DATA",
          payloadB64: Buffer.from("thickness map bytes").toString("base64"),
        },
      });

      const hit = await waitFor(
        () => seen.find((e) => rowState(e.snap) === "COMPLETED"),
        "the completed row",
        POLL_INTERVAL * 4,
      );
      const elapsed = hit.at - t0;
      expect(elapsed).toBeLessThanOrEqual(POLL_INTERVAL + 300);

      const row = instanceRows(hit.snap.instances).find((r) => r.instanceId === id);
      expect(row).toMatchObject({ status: "COMPLETED", done: 1, total: 1, fraction: 1 });
    } finally {
      poller.stop();
    }
  });

  it("keeps the last snapshot and reports the outage when the service is gone", async () => {
    const broken = new ServiceClient(`http://127.0.0.1:1`); // nothing listens here
    const live = await client.listInstances();
    const poller = new Poller(() => broken.listInstances(), POLL_INTERVAL);
    // seed with one good snapshot, then cut over to the dead address
    const good = new Poller(() => client.listInstances(), POLL_INTERVAL);
    await good.pollNow();
    expect(good.snapshot.instances.length).toBe(live.length);

    await poller.pollNow();
    expect(poller.snapshot.connected).toBe(false);
    expect(poller.snapshot.error).toBeTruthy();
  });
});

describe("DAG view against the reconstruct endpoint", () => {
  it("renders exactly the payload's nodes and edges for a mid-run diamond", async () => {
    await client.defineTemplate({
      pipelineName: "diamond-check",
      tasks: [
        { taskName: "A", executable: "/opt/a" },
        { taskName: "B", executable: "/opt/b", dependsOn: ["A"] },
        { taskName: "C", executable: "/opt/c", dependsOn: ["A"] },
        { taskName: "D", executable: "/opt/d", dependsOn: ["B", "C"] },
      ],
    });
    const opened = await client.openInstance({ descriptionName: "diamond-check" });
    const id = opened.instance.instanceId;
    const post = (taskName: string, fromState: string, toState: string, outcome?: boolean) =>
      client.postEvent(id, {
        taskName,
        fromState,
        toState,
        simTimestamp: 0,
        ...(outcome
          ? {
              outcome: {
                kind: "DATA",
                payloadB64: Buffer.from(`${taskName} product`).toString("base64"),
              },
            }
          : {}),
      });
    await post("A", "PENDING", "SCHEDULED");
    await post("A", "SCHEDULED", "RUNNING");
    await post("A", "RUNNING", "COMPLETED", true);
    await post("B", "PENDING", "SCHEDULED");
    await post("B", "SCHEDULED", "RUNNING");
    await post("C", "PENDING", "SCHEDULED");

    const recon = await client.reconstruct(id);
    const view = dagView(recon);

    const payloadNodes = new Set(recon.description.activities.map((a) => a.taskName));
    const renderedNodes = new Set(view.nodes.map((n) => n.taskName));
    expect(renderedNodes).toEqual(payloadNodes);
    expect(view.nodes.length).toBe(4);

    const payloadEdges = new Set(recon.description.edges.map(([a, b]) => `${a}->${b}`));
    const renderedEdges = new Set(view.edges.map(([a, b]) => `${a}->${b}`));
    expect(renderedEdges).toEqual(payloadEdges);
    expect(view.edges.length).toBe(4);

    for (const node of view.nodes) {
      expect(node.state).toBe(recon.instance.activityStates[node.taskName]);
    }
    const svg = dagSvg(view);
    for (const name of payloadNodes) expect(svg).toContain(`data-task="${name}"`);
  });

  it("surfaces a permanent failure with its error log", async () => {
    const opened = await client.openInstance({ descriptionName: "thickness-quick" });
    const id = opened.instance.instanceId;
    const task = "thickness-quick";
    await client.postEvent(id, { taskName: task, fromState: "PENDING", toState: "SCHEDULED", simTimestamp: 0 });
    await client.postEvent(id, { taskName: task, fromState: "SCHEDULED", toState: "RUNNING", simTimestamp: 0 });
    await client.postEvent(id, {
      taskName: task,
      fromState: "RUNNING",
      toState: "FAILED",
      simTimestamp: 700,
      final: true,
      outcome: {
        kind: "ERROR_LOG",
        payloadB64: Buffer.from("segfault in vertex pass\nexit status 139").toString("base64"),
      },
    });

    const recon = await client.reconstruct(id);
    const view = dagView(recon);
    expect(view.status).toBe("FAILED");
    expect(view.nodes[0]?.color).toBe(STATE_COLORS.FAILED);

    const rows = await client.outcomes(id, task);
    expect(rows.length).toBe(1);
    expect(rows[0]?.outcome.kind).toBe("ERROR_LOG");
    const payload = await client.outcomePayload(rows[0]!.outcome.outcomeId);
    expect(payloadPreview("ERROR_LOG", payload)).toEqual([
      "segfault in vertex pass",
      "exit status 139",
    ]);
  });

  it("reports a missing instance as a 404 the app can turn into a panel", async () => {
    await expect(client.reconstruct("inst-999999")).rejects.toThrowError(ApiError);
    await client.reconstruct("inst-999999").catch((err: ApiError) => {
      expect(err.status).toBe(404);
      expect(err.code).toBe("NotFound");
    });
  });
});

describe("annotation round trip", () => {
  it("a saved annotation shows up in a subsequent search", async () => {
    const instances = await client.listInstances();
    const target = instances[0]!.instanceId;
    const reply = await client.annotate({
      target,
      key: "qc-status",
      text: "checked from the dashboard",
      author: "rm",
    });
    expect(reply.annotation.target).toBe(target);

    const found = await client.annotations({ target });
    expect(found.some((n) => n.text === "checked from the dashboard")).toBe(true);

    const byText = await client.annotations({ text: "from the dashboard" });
    expect(byText.length).toBeGreaterThanOrEqual(1);
  });
});
