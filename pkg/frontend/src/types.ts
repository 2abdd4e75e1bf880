/** JSON shapes exchanged with the engine API. */

export interface WorkflowSummary {
  definitionId: string;
  version: string;
  name: string;
  state: "Active" | "Retired";
  deployedAtMs: number;
}

export interface ServiceSummary {
  serviceId: string;
  version: string;
  target: { kind: "remote"; baseUrl: string; path: string }
        | { kind: "local"; functionRef: string };
  health: "Unknown" | "Healthy" | "Unhealthy";
  registeredAtMs: number;
}

export interface TokenView {
  node: string;
  phase: "Arrived" | "AwaitingService" | "Departing";
  via: string | null;
}

export interface InstanceSnapshot {
  instanceId: string;
  definitionId: string;
  definitionVersion: string;
  status: "Running" | "Completed" | "Faulted" | "Cancelled";
  tokens: TokenView[];
  variables: Record<string, unknown>;
  resolvedServices: Record<string, string>;
  faultDetail: { nodeId: string | null; error: string } | null;
  startedAtMs: number;
  finishedAtMs: number | null;
}

export interface JournalEvent {
  seq: number;
  ts: number;
  kind: string;
  instanceId: string | null;
  payload: Record<string, any>;
}

export interface Diagnostic {
  severity: "Error" | "Warning";
  code: string;
  subjectId: string;
  message: string;
}

export type CircuitSnapshot = Record<string, {
  state: "Closed" | "Open" | "HalfOpen";
  totalCalls: number;
  consecutiveFailures?: number;
  reopenAtMs?: number;
  probesRemaining?: number;
}>;

export interface EngineHealth {
  status: string;
  pid: number;
  lastSeq: number;
}
