/** Console pages. Monitoring pages only ever issue reads; every state
 * change goes through the documented mutation endpoints. */

import { ApiError, EngineClient } from "./api.js";
import { parseProcessGraph } from "./bpmn.js";
import { badgesForInstance, renderDiagram } from "./diagram.js";
import { clear, el, fmtTime } from "./dom.js";
import { BpmnEditor } from "./editor.js";
import { Poller } from "./poller.js";
import { engineUrl, pollIntervalMs, setEngineUrl, setPollIntervalMs } from "./state.js";
import type { InstanceSnapshot, JournalEvent } from "./types.js";

export interface PageContext {
  client: EngineClient;
  navigate: (hash: string) => void;
  /** Pages register their pollers here; the router stops them on leave. */
  pollers: Poller<unknown>[];
}

function errorBanner(error: unknown): HTMLElement {
  if (error instanceof ApiError) {
    return el("div", { class: "banner error" },
              `${error.code}: ${error.detail}`);
  }
  return el("div", { class: "banner error reconnect" },
            `engine unreachable at ${engineUrl()} — retrying…`);
}

function poll<T>(context: PageContext, load: () => Promise<T>,
                 apply: (value: T) => void,
                 onError: (error: unknown) => void): void {
  const poller = new Poller(load, apply, pollIntervalMs(), onError);
  context.pollers.push(poller as Poller<unknown>);
  poller.start();
}

// -- workflows ------------------------------------------------------------

export function workflowsPage(context: PageContext): HTMLElement {
  const { client, navigate } = context;
  const body = el("div", { class: "page" });
  const table = el("div");
  body.append(
    el("div", { class: "page-header" },
      el("h2", {}, "Workflows"),
      el("button", { class: "primary",
                     onclick: () => navigate("#/editor") }, "New workflow")),
    table);

  const refresh = async () => {
    try {
      const workflows = await client.getWorkflows();
      clear(table);
      if (workflows.length === 0) {
        table.append(el("p", { class: "empty" },
                        "No workflows deployed yet."));
        return;
      }
      const rows = workflows.map((w) => el("tr", {},
        el("td", {}, el("a", {
          href: `#/workflows/${w.definitionId}/${w.version}`,
        }, w.definitionId)),
        el("td", {}, w.version),
        el("td", {}, w.name),
        el("td", {}, el("span", { class: `state state-${w.state}` }, w.state)),
        el("td", {}, fmtTime(w.deployedAtMs)),
        el("td", {},
          el("button", {
            onclick: () =>
              navigate(`#/editor/${w.definitionId}/${w.version}`),
          }, "edit"),
          " ",
          w.state === "Active"
            ? el("button", {
                class: "danger",
                onclick: async (event) => {
                  const button = event.target as HTMLButtonElement;
                  if (button.dataset.confirm !== "1") {
                    button.dataset.confirm = "1";
                    button.textContent = "confirm remove";
                    return;
                  }
                  await client.retireWorkflow(w.definitionId, w.version);
                  await refresh();
                },
              }, "remove")
            : null)));
      table.append(el("table", { class: "grid" },
        el("thead", {}, el("tr", {},
          ...["workflow", "version", "name", "state", "deployed", ""]
            .map((h) => el("th", {}, h)))),
        el("tbody", {}, ...rows)));
    } catch (error) {
      clear(table);
      table.append(errorBanner(error));
    }
  };
  void refresh();
  return body;
}

export function workflowDetailPage(context: PageContext, definitionId: string,
                                   version: string): HTMLElement {
  const { client, navigate } = context;
  const body = el("div", { class: "page" },
    el("div", { class: "page-header" },
      el("h2", {}, `${definitionId} ${version}`),
      el("button", {
        onclick: () => navigate(`#/editor/${definitionId}/${version}`),
      }, "Edit")));
  const host = el("div", { class: "diagram-host" });
  body.append(host);
  void (async () => {
    try {
      const xml = await client.getWorkflowXml(definitionId, version);
      const graph = parseProcessGraph(xml);
      host.innerHTML = renderDiagram(graph);
    } catch (error) {
      host.append(errorBanner(error));
    }
  })();
  return body;
}

// -- editor ----------------------------------------------------------------

export function editorPage(context: PageContext, definitionId?: string,
                           version?: string): HTMLElement {
  const { client, navigate } = context;
  const body = el("div", { class: "page" },
    el("h2", {}, definitionId ? `Edit ${definitionId}` : "New workflow"));
  const editor = new BpmnEditor({
    client,
    onDeployed: () => navigate("#/workflows"),
  });
  body.append(editor.root);
  if (definitionId && version) {
    editor.versionInput.value = version;  // bumped after load below
    void (async () => {
      try {
        editor.value = await client.getWorkflowXml(definitionId, version);
        const { bumpVersion } = await import("./editor.js");
        editor.versionInput.value = bumpVersion(version);
      } catch (error) {
        editor.statusPane.textContent = String(error);
      }
    })();
  }
  return body;
}

// -- instances ---------------------------------------------------------------

export function instancesPage(context: PageContext): HTMLElement {
  const { client, navigate } = context;
  const body = el("div", { class: "page" });
  const startStatus = el("span", { class: "editor-status" });
  const definitionInput = el("input", { type: "text",
                                        placeholder: "definitionId" });
  const versionInput = el("input", { type: "text",
                                     placeholder: "version (latest)" });
  const varsInput = el("input", { type: "text", value: "{}",
                                  class: "vars-input" });
  const form = el("div", { class: "start-form" },
    definitionInput, versionInput, varsInput,
    el("button", {
      class: "primary",
      onclick: async () => {
        let variables: unknown;
        try {
          variables = JSON.parse(varsInput.value || "{}");
        } catch (error) {
          startStatus.textContent = `variables are not valid JSON: ${error}`;
          return;
        }
        try {
          const started = await client.startInstance(
            definitionInput.value.trim(), variables,
            versionInput.value.trim() || undefined);
          navigate(`#/instances/${started.instanceId}`);
        } catch (error) {
          startStatus.textContent = error instanceof ApiError
            ? `${error.code}: ${error.detail}` : String(error);
        }
      },
    }, "Start instance"), startStatus);

  const table = el("div");
  body.append(el("div", { class: "page-header" },
                 el("h2", {}, "Instances")), form, table);

  poll(context, () => client.getInstances(), (instances) => {
    clear(table);
    if (instances.length === 0) {
      table.append(el("p", { class: "empty" }, "No instances yet."));
      return;
    }
    const rows = instances.map((instance) => el("tr", {},
      el("td", {}, el("a", { href: `#/instances/${instance.instanceId}` },
                      instance.instanceId.slice(0, 12))),
      el("td", {}, `${instance.definitionId} ${instance.definitionVersion}`),
      el("td", {}, el("span", { class: `state state-${instance.status}` },
                      instance.status)),
      el("td", {}, fmtTime(instance.startedAtMs)),
      el("td", {}, fmtTime(instance.finishedAtMs))));
    table.append(el("table", { class: "grid" },
      el("thead", {}, el("tr", {},
        ...["instance", "workflow", "status", "started", "finished"]
          .map((h) => el("th", {}, h)))),
      el("tbody", {}, ...rows)));
  }, (error) => {
    clear(table);
    table.append(errorBanner(error));
  });
  return body;
}

export function completedNodesFromEvents(events: JournalEvent[]): string[] {
  return events.filter((event) => event.kind === "TaskCompleted")
    .map((event) => event.payload.node as string);
}

export function instanceDetailPage(context: PageContext,
                                   instanceId: string): HTMLElement {
  const { client } = context;
  const body = el("div", { class: "page" });
  const header = el("h2", {}, `Instance ${instanceId.slice(0, 12)}`);
  const status = el("div", { class: "instance-status" });
  const diagramHost = el("div", { class: "diagram-host" });
  const variablesPane = el("pre", { class: "variables" });
  const timeline = el("div", { class: "timeline" });
  const cancelButton = el("button", {
    class: "danger",
    onclick: async () => {
      try {
        await client.cancelInstance(instanceId);
      } catch (error) {
        status.append(errorBanner(error));
      }
    },
  }, "Cancel");
  body.append(el("div", { class: "page-header" }, header, cancelButton),
              status, diagramHost,
              el("h3", {}, "Variables"), variablesPane,
              el("h3", {}, "Timeline"), timeline);

  let graphXmlFor = "";
  let graph: ReturnType<typeof parseProcessGraph> | null = null;

  poll(context, async () => {
    const snapshot = await client.getInstance(instanceId);
    const events = await client.getInstanceEvents(instanceId);
    return { snapshot, events };
  }, ({ snapshot, events }: { snapshot: InstanceSnapshot;
                              events: JournalEvent[] }) => {
    void (async () => {
      const wanted = `${snapshot.definitionId}@${snapshot.definitionVersion}`;
      if (graphXmlFor !== wanted) {
        const xml = await client.getWorkflowXml(snapshot.definitionId,
                                                snapshot.definitionVersion);
        graph = parseProcessGraph(xml);
        graphXmlFor = wanted;
      }
      clear(status);
      status.append(
        el("span", { class: `state state-${snapshot.status}` },
           snapshot.status),
        snapshot.faultDetail
          ? el("span", { class: "fault-detail" },
               ` at ${snapshot.faultDetail.nodeId}: ` +
               snapshot.faultDetail.error)
          : "");
      if (graph) {
        diagramHost.innerHTML = renderDiagram(graph, badgesForInstance(
          snapshot.tokens, completedNodesFromEvents(events),
          snapshot.faultDetail?.nodeId));
      }
      variablesPane.textContent =
        JSON.stringify(snapshot.variables, null, 2);
      clear(timeline);
      timeline.append(el("table", { class: "grid" },
        el("thead", {}, el("tr", {},
          ...["seq", "time", "event", "detail"].map((h) => el("th", {}, h)))),
        el("tbody", {}, ...events.map((event) => el("tr", {},
          el("td", {}, String(event.seq)),
          el("td", {}, fmtTime(event.ts)),
          el("td", {}, event.kind),
          el("td", {}, event.payload.node
            ? `${event.payload.node}` +
              (event.payload.attempt ? ` attempt ${event.payload.attempt}` : "")
            : ""))))));
    })();
  }, (error) => {
    clear(status);
    status.append(errorBanner(error));
  });
  return body;
}

// -- circuits ------------------------------------------------------------------

export function circuitsPage(context: PageContext): HTMLElement {
  const { client } = context;
  const body = el("div", { class: "page" },
    el("div", { class: "page-header" }, el("h2", {}, "Circuits")));
  const host = el("div");
  body.append(host);
  poll(context, () => client.getCircuits(), (circuits) => {
    clear(host);
    const keys = Object.keys(circuits).sort();
    if (keys.length === 0) {
      host.append(el("p", { class: "empty" },
                     "No circuits yet — nothing has been invoked."));
      return;
    }
    host.append(el("div", { class: "chips" }, ...keys.map((key) => {
      const circuit = circuits[key];
      const detail = circuit.state === "Closed"
        ? `${circuit.consecutiveFailures ?? 0} consecutive failures`
        : circuit.state === "Open"
          ? `reopens ${fmtTime(circuit.reopenAtMs ?? null)}`
          : `${circuit.probesRemaining} probes left`;
      return el("div", { class: `chip chip-${circuit.state}` },
        el("strong", {}, key), ` ${circuit.state}`,
        el("small", {}, ` · ${circuit.totalCalls} calls · ${detail}`));
    })));
  }, (error) => {
    clear(host);
    host.append(errorBanner(error));
  });
  return body;
}

// -- settings -----------------------------------------------------------------

export function settingsPage(context: PageContext): HTMLElement {
  const urlInput = el("input", { type: "text", value: engineUrl(),
                                 class: "url-input" });
  const intervalInput = el("input", { type: "text",
                                      value: String(pollIntervalMs()) });
  const saved = el("span", { class: "editor-status" });
  return el("div", { class: "page" },
    el("h2", {}, "Settings"),
    el("div", { class: "settings-form" },
      el("label", {}, "Engine URL ", urlInput),
      el("label", {}, "Poll interval (ms) ", intervalInput),
      el("button", {
        class: "primary",
        onclick: () => {
          setEngineUrl(urlInput.value.trim());
          const interval = parseInt(intervalInput.value, 10);
          if (Number.isFinite(interval)) setPollIntervalMs(interval);
          saved.textContent = "saved — reloading";
          location.reload();
        },
      }, "Save"), saved));
}
