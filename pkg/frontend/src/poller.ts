/** Polling loop for the instance list.
 *
 * One snapshot at a time: a poll either replaces the whole instance list or
 * leaves the previous one in place and flips `connected` off, so consumers
 * never see a half-updated view. At most one request is in flight; a manual
 * refresh while one is pending joins it instead of stacking another.
 */

import type { InstanceSnapshot } from "./types.js";

export interface InstancesSnapshot {
  connected: boolean;
  instances: InstanceSnapshot[];
  syncedAt: number | null;
  error: string | null;
}

export type SnapshotListener = (snap: InstancesSnapshot) => void;

export const DEFAULT_POLL_INTERVAL_MS = 2_000;

export class Poller {
  private current: InstancesSnapshot = {
    connected: false,
    instances: [],
    syncedAt: null,
    error: null,
  };
  private listeners = new Set<SnapshotListener>();
  private inFlight: Promise<InstancesSnapshot> | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private running = false;
  fetchCount = 0;

  constructor(
    private readonly fetchInstances: () => Promise<InstanceSnapshot[]>,
    readonly intervalMs: number = DEFAULT_POLL_INTERVAL_MS,
    private readonly now: () => number = Date.now,
  ) {}

  get snapshot(): InstancesSnapshot {
    return this.current;
  }

  onUpdate(fn: SnapshotListener): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }

  /** Fetch once. Joins the in-flight request if there is one. */
  pollNow(): Promise<InstancesSnapshot> {
    if (this.inFlight) return this.inFlight;
    this.fetchCount += 1;
    this.inFlight = this.fetchInstances()
      .then((instances) => {
        this.current = {
          connected: true,
          instances,
          syncedAt: this.now(),
          error: null,
        };
        return this.current;
      })
      .catch((err: unknown) => {
        this.current = {
          ...this.current,
          connected: false,
          error: err instanceof Error ? err.message : String(err),
        };
        return this.current;
      })
      .finally(() => {
        this.inFlight = null;
        for (const fn of this.listeners) fn(this.current);
      });
    return this.inFlight;
  }

  /** Poll immediately, then keep polling every `intervalMs` after each
   * request settles (so slow responses delay the next tick rather than
   * overlapping it). */
  start(): void {
    if (this.running) return;
    this.running = true;
    const tick = () => {
      void this.pollNow().then(() => {
        if (!this.running) return;
        this.timer = setTimeout(tick, this.intervalMs);
      });
    };
    tick();
  }

  stop(): void {
    this.running = false;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }
}
