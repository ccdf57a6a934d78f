/** Thin typed wrapper over the service's HTTP API.
 *
 * Every method maps to exactly one request; nothing is cached or derived
 * here. The dashboard never computes provenance itself, it renders what
 * these calls return.
 */

import type {
  AnalysisRow,
  AnnotateReply,
  AnnotationRecordBody,
  ComparisonBody,
  DefineReply,
  EventReply,
  HealthBody,
  InstanceSnapshot,
  OpenInstanceReply,
  OutcomeBody,
  OutcomeRow,
  Reconstruction,
  ResultsValidationBody,
  SpecValidationBody,
  TemplateListing,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Error body {code, message} surfaced with the HTTP status attached. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function reject(res: Response): Promise<never> {
  let code = "Error";
  let message = `${res.status} ${res.statusText}`;
  try {
    const body = (await res.json()) as { code?: string; message?: string };
    if (body.code) code = body.code;
    if (body.message) message = body.message;
  } catch {
    // non-JSON error body; keep the status line
  }
  throw new ApiError(res.status, code, message);
}

export class ServiceClient {
  readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(base: string, fetchFn?: FetchLike) {
    this.base = base.replace(/\/+$/, "");
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async get<T>(path: string): Promise<T> {
    const res = await this.fetchFn(this.base + path);
    if (!res.ok) await reject(res);
    return (await res.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const res = await this.fetchFn(this.base + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) await reject(res);
    return (await res.json()) as T;
  }

  health(): Promise<HealthBody> {
    return this.get("/health");
  }

  listInstances(status?: string): Promise<InstanceSnapshot[]> {
    const q = status ? `?status=${encodeURIComponent(status)}` : "";
    return this.get(`/instances${q}`);
  }

  getInstance(id: string): Promise<InstanceSnapshot> {
    return this.get(`/instances/${encodeURIComponent(id)}`);
  }

  reconstruct(id: string, upToSeq?: number): Promise<Reconstruction> {
    const q = upToSeq === undefined ? "" : `?upToSeq=${upToSeq}`;
    return this.get(`/instances/${encodeURIComponent(id)}/reconstruct${q}`);
  }

  outcomes(id: string, taskName?: string): Promise<OutcomeRow[]> {
    const q = taskName ? `?taskName=${encodeURIComponent(taskName)}` : "";
    return this.get(`/instances/${encodeURIComponent(id)}/outcomes${q}`);
  }

  outcome(outcomeId: string): Promise<OutcomeBody> {
    return this.get(`/outcomes/${encodeURIComponent(outcomeId)}`);
  }

  async outcomePayload(outcomeId: string): Promise<Uint8Array> {
    const res = await this.fetchFn(
      `${this.base}/outcomes/${encodeURIComponent(outcomeId)}/payload`,
    );
    if (!res.ok) await reject(res);
    return new Uint8Array(await res.arrayBuffer());
  }

  listTemplates(): Promise<TemplateListing[]> {
    return this.get("/templates");
  }

  template(name: string, version?: number): Promise<Record<string, unknown>> {
    const tail = version === undefined ? "" : `/${version}`;
    return this.get(`/templates/${encodeURIComponent(name)}${tail}`);
  }

  defineTemplate(document: unknown, revise = false): Promise<DefineReply> {
    const q = revise ? "?revise=true" : "";
    return this.post(`/templates${q}`, document);
  }

  openInstance(req: {
    descriptionName: string;
    version?: number;
    inputs?: Record<string, string>;
  }): Promise<OpenInstanceReply> {
    return this.post("/instances", req);
  }

  postEvent(
    id: string,
    body: {
      taskName: string;
      fromState: string;
      toState: string;
      simTimestamp: number;
      seq?: number;
      final?: boolean;
      outcome?: { kind: string; payloadB64: string; sizeBytes?: number };
    },
  ): Promise<EventReply> {
    return this.post(`/instances/${encodeURIComponent(id)}/events`, body);
  }

  validateSpec(req: {
    candidate: { name: string; version?: number };
    reference: { name: string; version?: number };
    ignoreAnnotations?: boolean;
  }): Promise<SpecValidationBody> {
    return this.post("/validate/spec", req);
  }

  validateResults(req: {
    instanceId: string;
    reference: Record<string, string>;
  }): Promise<ResultsValidationBody> {
    return this.post("/validate/results", req);
  }

  analyses(filters: Partial<Record<
    "author" | "descriptionName" | "datasetId" | "status" | "from" | "to",
    string
  >> = {}): Promise<AnalysisRow[]> {
    const params = new URLSearchParams();
    for (const [k, v] of Object.entries(filters)) {
      if (v !== undefined && v !== "") params.set(k, v);
    }
    const q = params.toString();
    return this.get(`/analyses${q ? `?${q}` : ""}`);
  }

  compareAnalyses(a: string, b: string): Promise<ComparisonBody> {
    const params = new URLSearchParams({ a, b });
    return this.get(`/analyses/compare?${params}`);
  }

  annotations(filters: Partial<Record<"key" | "text" | "target", string>> = {}):
    Promise<AnnotationRecordBody[]> {
    const params = new URLSearchParams();
    for (const [k, v] of Object.entries(filters)) {
      if (v !== undefined && v !== "") params.set(k, v);
    }
    const q = params.toString();
    return this.get(`/annotations${q ? `?${q}` : ""}`);
  }

  annotate(body: {
    target: string;
    key: string;
    text: string;
    author?: string;
  }): Promise<AnnotateReply> {
    return this.post("/annotations", body);
  }
}
