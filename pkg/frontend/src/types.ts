/** Wire shapes as the service emits them. Field names are verbatim. */

export type ActivityState =
  | "PENDING"
  | "SCHEDULED"
  | "RUNNING"
  | "COMPLETED"
  | "FAILED"
  | "SKIPPED";

export type InstanceStatus = "OPEN" | "COMPLETED" | "FAILED";

export type OutcomeKind = "DATA" | "ERROR_LOG" | "STATUS";

export interface ActivityBody {
  taskName: string;
  executable: string;
  priority: number;
  inputSlots: string[];
  outputSlots: string[];
  environment: Record<string, string>;
}

export interface AnnotationBody {
  target: string;
  key: string;
  text: string;
  author: string;
  createdAt: number;
}

export interface DescriptionBody {
  name: string;
  version: number;
  createdAt: number;
  activities: ActivityBody[];
  edges: [string, string][];
  annotations: AnnotationBody[];
  extra: Record<string, unknown>;
}

export interface InstanceSnapshot {
  instanceId: string;
  descriptionName: string;
  descriptionVersion: number;
  submittedAt: number;
  inputs: Record<string, string>;
  activityStates: Record<string, ActivityState>;
  status: InstanceStatus;
  lastSeq: number;
}

export interface EventBody {
  instanceId: string;
  taskName: string;
  seq: number;
  fromState: ActivityState;
  toState: ActivityState;
  simTimestamp: number;
  final?: boolean;
  outcomeId?: string;
}

export interface OutcomeBody {
  outcomeId: string;
  kind: OutcomeKind;
  sizeBytes: number;
  producer: { instanceId: string; taskName: string; seq: number };
}

export interface OutcomeRow {
  event: EventBody;
  outcome: OutcomeBody;
}

export interface Reconstruction {
  instance: InstanceSnapshot;
  description: DescriptionBody;
  events: EventBody[];
}

export interface FieldChangeBody {
  from: unknown;
  to: unknown;
}

export interface SpecDiffBody {
  addedActivities: string[];
  removedActivities: string[];
  modifiedActivities: { taskName: string; fields: Record<string, FieldChangeBody> }[];
  addedEdges: [string, string][];
  removedEdges: [string, string][];
  annotationChanges: { op: string; target: string; key: string; text: string }[];
}

export interface SpecValidationBody {
  verdict: string;
  candidate: { name: string; version: number };
  reference: { name: string; version: number };
  diff: SpecDiffBody;
}

export interface ResultsValidationBody {
  instanceId: string;
  perActivity: Record<string, string>;
  verdict: string;
}

export interface ComparisonBody {
  analysisA: string;
  analysisB: string;
  comparable: boolean;
  versionDelta: SpecDiffBody;
  outcomeDeltas: { taskName: string; digestA: string; digestB: string }[];
  durationStats: { makespanMsA: number; makespanMsB: number };
  errorCounts: { failedEventsA: number; failedEventsB: number };
}

export interface AnalysisRow {
  analysisId: string;
  title: string;
  datasetId: string;
  descriptionName: string;
  descriptionVersion: number;
  instanceIds: string[];
  author: string;
  annotations: { key: string; text: string }[];
  finalOutcomeIds: string[];
  createdAt: number;
  status: string;
}

export interface AnnotationRecordBody {
  annotationId: string;
  target: string;
  key: string;
  text: string;
  author: string;
  createdAt: number;
}

export interface HealthBody {
  ok: boolean;
  journalHeads: Record<string, number>;
}

export interface TemplateListing {
  name: string;
  latestVersion: number;
}

export interface DefineReply {
  name: string;
  version: number;
  journalSeq: number;
}

export interface OpenInstanceReply {
  instance: InstanceSnapshot;
  journalSeq: number;
}

export interface EventReply {
  seq: number;
  journalSeq: number;
  outcomeId?: string;
}

export interface AnnotateReply {
  annotation: AnnotationRecordBody;
  journalSeq: number;
}
