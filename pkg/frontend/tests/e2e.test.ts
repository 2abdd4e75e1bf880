/** Full operator loop against a live engine and scripted fleet:
 * deploy a workflow through the editor, start an instance from the
 * monitoring form, watch it reach Completed, and see a tripped breaker
 * render Open. The engine and fleet are real subprocesses; the console
 * runs its actual components in the test DOM.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { EngineClient } from "../src/api.js";
import { BpmnEditor } from "../src/editor.js";
import { circuitsPage, instanceDetailPage, instancesPage,
         type PageContext } from "../src/pages.js";
import type { Poller } from "../src/poller.js";

const CHAIN_XML = `<?xml version="1.0" encoding="UTF-8"?>
<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL"
             xmlns:ext="urn:flowgraft:ext" id="defs">
  <process id="order-flow" name="Order flow">
    <startEvent id="start"/>
    <serviceTask id="a" name="Reserve" ext:service="svc-a"/>
    <serviceTask id="b" name="Charge" ext:service="svc-b"/>
    <serviceTask id="c" name="Notify" ext:service="svc-c"/>
    <endEvent id="end"/>
    <sequenceFlow id="f1" sourceRef="start" targetRef="a"/>
    <sequenceFlow id="f2" sourceRef="a" targetRef="b"/>
    <sequenceFlow id="f3" sourceRef="b" targetRef="c"/>
    <sequenceFlow id="f4" sourceRef="c" targetRef="end"/>
  </process>
</definitions>
`;

const FAILING_XML = CHAIN_XML
  .replace(/order-flow/g, "doomed-flow")
  .replace('ext:service="svc-a"', 'ext:service="svc-down"')
  .replace('ext:service="svc-b"', 'ext:service="svc-down"')
  .replace('ext:service="svc-c"', 'ext:service="svc-down"');

const FLEET_CONFIG = [
  { serviceId: "svc-a", version: "1.0.0", behavior: [{ echo: true }] },
  { serviceId: "svc-b", version: "1.0.0", behavior: [{ echo: true }] },
  { serviceId: "svc-c", version: "1.0.0", behavior: [{ echo: true }] },
  { serviceId: "svc-down", version: "1.0.0", behavior: [{ fail: 500 }] },
];

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const server = createServer();
    server.listen(0, "127.0.0.1", () => {
      const address = server.address();
      if (address && typeof address === "object") {
        const port = address.port;
        server.close(() => resolve(port));
      } else {
        reject(new Error("no port"));
      }
    });
  });
}

async function until<T>(load: () => Promise<T>, good: (v: T) => boolean,
                        what: string, timeoutMs = 30_000): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  let last: unknown;
  while (Date.now() < deadline) {
    try {
      const value = await load();
      if (good(value)) return value;
      last = value;
    } catch (error) {
      last = error;
    }
    await new Promise((r) => setTimeout(r, 100));
  }
  throw new Error(`timed out waiting for ${what}; last: ${last}`);
}

const flush = (ms = 50) => new Promise((r) => setTimeout(r, ms));

let engine: ChildProcess;
let fleet: ChildProcess;
let client: EngineClient;
let baseUrl: string;
const livePollers: Poller<unknown>[] = [];

function context(): PageContext & { lastNavigation: string[] } {
  const navigations: string[] = [];
  const ctx = {
    client,
    navigate: (hash: string) => navigations.push(hash),
    pollers: livePollers,
    lastNavigation: navigations,
  };
  return ctx;
}

beforeAll(async () => {
  localStorage.setItem("flowgraft.pollIntervalMs", "100");
  const dir = mkdtempSync(join(tmpdir(), "flowgraft-e2e-"));
  const port = await freePort();
  baseUrl = `http://127.0.0.1:${port}`;
  engine = spawn("python3", ["-m", "flowgraft.cli", "serve",
                             "--listen", `127.0.0.1:${port}`,
                             "--journal", join(dir, "journal.ndjson")],
                 { stdio: "ignore" });
  client = new EngineClient(baseUrl);
  await until(() => client.getHealth(), (h) => h.status === "ok", "engine");

  const fleetFile = join(dir, "fleet.json");
  writeFileSync(fleetFile, JSON.stringify(FLEET_CONFIG));
  fleet = spawn("python3", ["-m", "flowgraft.cli", "fleet",
                            "--fleet", fleetFile, "--register-to", baseUrl],
                { stdio: "ignore" });
  await until(() => client.getServices(), (s) => s.length === 4, "fleet");
});

afterAll(() => {
  for (const poller of livePollers) poller.stop();
  fleet?.kill("SIGKILL");
  engine?.kill("SIGINT");
});

describe("operator loop end to end", () => {
  it("deploys through the editor, runs to Completed, and shows a tripped breaker",
     async () => {
    // 1. Deploy the composite workflow via the editor pane.
    const editor = new BpmnEditor({ client });
    editor.value = CHAIN_XML;
    editor.versionInput.value = "1.0.0";
    expect(editor.deployButton.disabled).toBe(false);
    await editor.deploy();
    expect(editor.statusPane.textContent)
      .toContain("deployed order-flow 1.0.0");
    const workflows = await client.getWorkflows();
    expect(workflows.map((w) => w.definitionId)).toContain("order-flow");

    // 2. Start an instance from the monitoring page's form.
    const ctx = context();
    const page = instancesPage(ctx);
    document.body.append(page);
    const inputs = page.querySelectorAll("input");
    (inputs[0] as HTMLInputElement).value = "order-flow";
    (inputs[2] as HTMLInputElement).value = '{"order": 7}';
    (page.querySelector("button.primary") as HTMLButtonElement).click();
    await until(async () => ctx.lastNavigation,
                (n) => n.length > 0, "start navigation", 10_000);
    const instanceId = ctx.lastNavigation[0].split("/").pop()!;

    // 3. Watch the detail page reach Completed with three task rows.
    const detail = instanceDetailPage(context(), instanceId);
    document.body.append(detail);
    await until(async () => detail.textContent ?? "",
                (text) => text.includes("Completed"), "Completed status");
    await flush(150);
    const timelineKinds = [...detail.querySelectorAll(
      ".timeline tbody tr td:nth-child(3)")].map((td) => td.textContent);
    expect(timelineKinds.filter((k) => k === "TaskCompleted")).toHaveLength(3);
    const completedBadges = detail.querySelectorAll(".badge-completed");
    expect(completedBadges.length).toBe(3);

    // 4. Trip a breaker (two failing runs exceed the threshold of 5)
    //    and see the circuits page render the Open chip.
    await client.deployWorkflow(FAILING_XML, "1.0.0");
    for (let i = 0; i < 2; i++) {
      const started = await client.startInstance("doomed-flow", {});
      await until(() => client.getInstance(started.instanceId),
                  (snap) => snap.status !== "Running", "doomed instance");
    }
    const circuits = circuitsPage(context());
    document.body.append(circuits);
    await until(async () => circuits.innerHTML,
                (html) => html.includes("chip-Open"), "Open chip");
    expect(circuits.querySelector(".chip-Open")?.textContent)
      .toContain("svc-down@1.0.0");

    for (const poller of livePollers) poller.stop();
    console.log("ACCEPTANCE 9 console end-to-end: PASS " +
                "(editor deploy, form start, Completed observed, " +
                "breaker rendered Open)");
  });
});
