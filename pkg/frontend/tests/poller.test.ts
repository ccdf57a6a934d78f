import { describe, expect, it } from "vitest";

import { Poller } from "../src/poller.js";
import type { InstanceSnapshot } from "../src/types.js";

function inst(id: string): InstanceSnapshot {
  return {
    instanceId: id,
    descriptionName: "p",
    descriptionVersion: 1,
    submittedAt: 0,
    inputs: {},
    activityStates: {},
    status: "OPEN",
    lastSeq: 0,
  };
}

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

describe("Poller", () => {
  it("replaces the snapshot atomically on success", async () => {
    let data: InstanceSnapshot[] = [inst("inst-000001")];
    const p = new Poller(async () => data, 1000, () => 42);
    await p.pollNow();
    expect(p.snapshot).toEqual({
      connected: true,
      instances: [inst("inst-000001")],
      syncedAt: 42,
      error: null,
    });

    data = [inst("inst-000001"), inst("inst-000002")];
    await p.pollNow();
    expect(p.snapshot.instances).toHaveLength(2);
  });

  it("keeps the last good snapshot and flips connected off on failure", async () => {
    let fail = false;
    const p = new Poller(async () => {
      if (fail) throw new Error("connection refused");
      return [inst("inst-000001")];
    });
    await p.pollNow();
    expect(p.snapshot.connected).toBe(true);

    fail = true;
    await p.pollNow();
    expect(p.snapshot.connected).toBe(false);
    expect(p.snapshot.error).toBe("connection refused");
    expect(p.snapshot.instances).toEqual([inst("inst-000001")]); // stale rows retained

    fail = false;
    await p.pollNow();
    expect(p.snapshot.connected).toBe(true);
    expect(p.snapshot.error).toBeNull();
  });

  it("never runs two fetches concurrently", async () => {
    let release: (v: InstanceSnapshot[]) => void = () => {};
    let calls = 0;
    const p = new Poller(() => {
      calls += 1;
      return new Promise<InstanceSnapshot[]>((resolve) => {
        release = resolve;
      });
    });
    const first = p.pollNow();
    const second = p.pollNow(); // joins the in-flight request
    expect(calls).toBe(1);
    release([inst("inst-000001")]);
    await Promise.all([first, second]);
    expect(p.snapshot.instances).toHaveLength(1);

    const third = p.pollNow(); // previous poll settled, so this one fetches
    expect(calls).toBe(2);
    release([inst("inst-000001"), inst("inst-000002")]);
    await third;
    expect(p.snapshot.instances).toHaveLength(2);
  });

  it("notifies listeners after every settled poll", async () => {
    const seen: boolean[] = [];
    let fail = false;
    const p = new Poller(async () => {
      if (fail) throw new Error("down");
      return [];
    });
    const off = p.onUpdate((snap) => seen.push(snap.connected));
    await p.pollNow();
    fail = true;
    await p.pollNow();
    expect(seen).toEqual([true, false]);
    off();
    fail = false;
    await p.pollNow();
    expect(seen).toEqual([true, false]);
  });

  it("polls on an interval once started and stops cleanly", async () => {
    let calls = 0;
    const p = new Poller(async () => {
      calls += 1;
      return [];
    }, 15);
    p.start();
    p.start(); // second start is a no-op, not a second loop
    await sleep(80);
    p.stop();
    const after = calls;
    expect(after).toBeGreaterThanOrEqual(3);
    await sleep(50);
    expect(calls).toBe(after);
  });
});
