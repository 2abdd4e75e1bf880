/** Typed client for the engine's HTTP API.
 *
 * The console performs no orchestration logic of its own: every state
 * change round-trips through these endpoints, and monitoring pages use
 * only the get* methods (which never mutate engine state).
 */

import type {
  CircuitSnapshot, Diagnostic, EngineHealth, InstanceSnapshot,
  JournalEvent, ServiceSummary, WorkflowSummary,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    public readonly detail: string,
    public readonly diagnostics: Diagnostic[] = [],
  ) {
    super(`${code}: ${detail}`);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class EngineClient {
  constructor(
    public readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request(method: string, path: string, init: RequestInit = {}):
      Promise<Response> {
    const response = await this.fetchImpl(
      this.baseUrl.replace(/\/$/, "") + path, { ...init, method });
    if (response.status >= 400) {
      let code = `HTTP_${response.status}`;
      let detail = response.statusText;
      let diagnostics: Diagnostic[] = [];
      try {
        const body = await response.json();
        code = body.code ?? code;
        detail = body.detail ?? detail;
        diagnostics = body.diagnostics ?? [];
      } catch {
        // non-JSON error body; keep the status line
      }
      throw new ApiError(response.status, code, detail, diagnostics);
    }
    return response;
  }

  private async getJson<T>(path: string): Promise<T> {
    return (await this.request("GET", path)).json();
  }

  // -- reads (monitoring-safe) ------------------------------------------

  async getWorkflows(): Promise<WorkflowSummary[]> {
    return (await this.getJson<{ workflows: WorkflowSummary[] }>(
      "/workflows")).workflows;
  }

  async getWorkflowXml(definitionId: string, version: string):
      Promise<string> {
    const response = await this.request(
      "GET", `/workflows/${encodeURIComponent(definitionId)}/` +
             encodeURIComponent(version));
    return response.text();
  }

  async getServices(): Promise<ServiceSummary[]> {
    return (await this.getJson<{ services: ServiceSummary[] }>(
      "/services")).services;
  }

  async getInstances(): Promise<InstanceSnapshot[]> {
    return (await this.getJson<{ instances: InstanceSnapshot[] }>(
      "/instances")).instances;
  }

  async getInstance(instanceId: string): Promise<InstanceSnapshot> {
    return this.getJson(`/instances/${encodeURIComponent(instanceId)}`);
  }

  async getInstanceEvents(instanceId: string): Promise<JournalEvent[]> {
    return (await this.getJson<{ events: JournalEvent[] }>(
      `/instances/${encodeURIComponent(instanceId)}/events`)).events;
  }

  async getCircuits(): Promise<CircuitSnapshot> {
    return (await this.getJson<{ circuits: CircuitSnapshot }>(
      "/monitor/circuits")).circuits;
  }

  async getHealth(): Promise<EngineHealth> {
    return this.getJson("/monitor/health");
  }

  // -- mutations ----------------------------------------------------------

  async deployWorkflow(document: string, version: string):
      Promise<{ definitionId: string; version: string }> {
    const response = await this.request(
      "POST", `/workflows?version=${encodeURIComponent(version)}`, {
        body: document,
        headers: { "Content-Type": "application/xml" },
      });
    return response.json();
  }

  async retireWorkflow(definitionId: string, version: string):
      Promise<WorkflowSummary> {
    const response = await this.request(
      "DELETE", `/workflows/${encodeURIComponent(definitionId)}/` +
                encodeURIComponent(version));
    return response.json();
  }

  async validateDocument(document: string): Promise<Diagnostic[]> {
    const response = await this.request("POST", "/validate", {
      body: document,
      headers: { "Content-Type": "application/xml" },
    });
    return (await response.json()).diagnostics;
  }

  async startInstance(definitionId: string, variables: unknown,
                      version?: string): Promise<{ instanceId: string }> {
    const body: Record<string, unknown> = { definitionId, variables };
    if (version) body.version = version;
    const response = await this.request("POST", "/instances", {
      body: JSON.stringify(body),
      headers: { "Content-Type": "application/json" },
    });
    return response.json();
  }

  async cancelInstance(instanceId: string): Promise<InstanceSnapshot> {
    const response = await this.request(
      "POST", `/instances/${encodeURIComponent(instanceId)}/cancel`);
    return response.json();
  }
}
