/** Synchronized BPMN editor: XML text pane with syntax highlighting,
 * a live diagram preview re-rendered on every edit, quick structural
 * diagnostics, and a palette that inserts element skeletons at the
 * cursor. Deploying first asks the server to validate; the deploy is
 * blocked while server diagnostics contain Errors.
 */

import { ApiError, EngineClient } from "./api.js";
import { parseProcessGraph, quickDiagnostics, XmlSyntaxError,
         type EditorDiagnostic } from "./bpmn.js";
import { renderDiagram } from "./diagram.js";
import { clear, el } from "./dom.js";

export const TEMPLATE_DOCUMENT = `<?xml version="1.0" encoding="UTF-8"?>
<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL"
             xmlns:ext="urn:flowgraft:ext" id="defs">
  <process id="new-workflow" name="New workflow">
    <startEvent id="start"/>
    <serviceTask id="task1" name="First task" ext:service="my-service"/>
    <endEvent id="end"/>
    <sequenceFlow id="f1" sourceRef="start" targetRef="task1"/>
    <sequenceFlow id="f2" sourceRef="task1" targetRef="end"/>
  </process>
</definitions>
`;

export const PALETTE: Record<string, string> = {
  "service task":
    '<serviceTask id="task_NEW" name="New task" ext:service="my-service" ' +
    'ext:versionReq="latest"/>\n',
  "exclusive gateway":
    '<exclusiveGateway id="choice_NEW" default="flow_else"/>\n',
  "parallel gateway pair":
    '<parallelGateway id="fork_NEW"/>\n    <parallelGateway id="join_NEW"/>\n',
  "sequence flow":
    '<sequenceFlow id="flow_NEW" sourceRef="a" targetRef="b"/>\n',
};

// One combined pass so a rule can never re-match inside markup that an
// earlier rule produced. Alternatives are ordered by precedence.
const HIGHLIGHT_TOKEN =
  /(&lt;!--[\s\S]*?--&gt;)|(&lt;\/?[\w:.-]+)|(&quot;[\s\S]*?&quot;|'[^']*')|([\w:.-]+(?==))/g;

export function highlightXml(source: string): string {
  const escaped = source
    .replace(/&/g, "&amp;").replace(/</g, "&lt;")
    .replace(/>/g, "&gt;").replace(/"/g, "&quot;");
  return escaped.replace(HIGHLIGHT_TOKEN,
    (match, comment, tag, value) => {
      const cls = comment ? "hl-comment" : tag ? "hl-tag"
        : value ? "hl-value" : "hl-attr";
      return `<span class="${cls}">${match}</span>`;
    });
}

export function bumpVersion(version: string): string {
  const match = version.match(/^(\d+)\.(\d+)\.(\d+)$/);
  if (!match) return "1.0.0";
  return `${match[1]}.${parseInt(match[2], 10) + 1}.0`;
}

export interface EditorOptions {
  client: EngineClient;
  initialXml?: string;
  initialVersion?: string;
  onDeployed?: (definitionId: string, version: string) => void;
}

export class BpmnEditor {
  readonly root: HTMLElement;
  readonly textarea: HTMLTextAreaElement;
  readonly highlightPane: HTMLElement;
  readonly preview: HTMLElement;
  readonly diagnosticsPane: HTMLElement;
  readonly versionInput: HTMLInputElement;
  readonly deployButton: HTMLButtonElement;
  readonly statusPane: HTMLElement;
  localDiagnostics: EditorDiagnostic[] = [];

  constructor(private readonly options: EditorOptions) {
    this.textarea = el("textarea", {
      class: "editor-text", spellcheck: "false",
      oninput: () => this.onEdit(),
      onscroll: () => this.syncScroll(),
    });
    this.textarea.value = options.initialXml ?? TEMPLATE_DOCUMENT;
    this.highlightPane = el("pre", { class: "editor-highlight",
                                     "aria-hidden": "true" });
    this.preview = el("div", { class: "editor-preview" });
    this.diagnosticsPane = el("div", { class: "editor-diagnostics" });
    this.versionInput = el("input", {
      class: "version-input", type: "text",
      value: options.initialVersion ?? "1.0.0",
    });
    this.deployButton = el("button", {
      class: "primary", onclick: () => void this.deploy(),
    }, "Deploy") as HTMLButtonElement;
    this.statusPane = el("span", { class: "editor-status" });

    const palette = el("div", { class: "palette" },
      "Insert:",
      ...Object.keys(PALETTE).map((name) =>
        el("button", { class: "palette-item",
                       onclick: () => this.insertSkeleton(name) }, name)));
    const toolbar = el("div", { class: "editor-toolbar" },
      palette,
      el("span", { class: "spacer" }),
      el("label", {}, "version ", this.versionInput),
      this.deployButton, this.statusPane);

    this.root = el("div", { class: "editor" },
      toolbar,
      el("div", { class: "editor-panes" },
        el("div", { class: "editor-text-wrap" },
          this.highlightPane, this.textarea),
        this.preview),
      this.diagnosticsPane);
    this.onEdit();
  }

  get value(): string {
    return this.textarea.value;
  }

  set value(xml: string) {
    this.textarea.value = xml;
    this.onEdit();
  }

  /** Re-highlight, re-render the preview, and refresh quick checks. */
  onEdit(): void {
    this.highlightPane.innerHTML = highlightXml(this.textarea.value);
    clear(this.preview);
    clear(this.diagnosticsPane);
    try {
      const graph = parseProcessGraph(this.textarea.value);
      this.localDiagnostics = quickDiagnostics(graph);
      this.preview.innerHTML = renderDiagram(graph);
    } catch (error) {
      this.localDiagnostics = [];
      if (error instanceof XmlSyntaxError) {
        this.diagnosticsPane.append(el("div", { class: "banner error" },
          `XML does not parse at position ${error.position}: ${error.message}`));
        this.deployButton.disabled = true;
        return;
      }
      throw error;
    }
    for (const diagnostic of this.localDiagnostics) {
      this.diagnosticsPane.append(el("div", {
        class: `banner ${diagnostic.severity.toLowerCase()}`,
      }, `${diagnostic.code} ${diagnostic.subjectId}: ${diagnostic.message}`));
    }
    this.deployButton.disabled =
      this.localDiagnostics.some((d) => d.severity === "Error");
  }

  syncScroll(): void {
    this.highlightPane.scrollTop = this.textarea.scrollTop;
    this.highlightPane.scrollLeft = this.textarea.scrollLeft;
  }

  insertSkeleton(name: string): void {
    const snippet = PALETTE[name];
    if (!snippet) return;
    const at = this.textarea.selectionStart ?? this.textarea.value.length;
    const text = this.textarea.value;
    this.textarea.value = text.slice(0, at) + snippet + text.slice(at);
    this.textarea.selectionStart = this.textarea.selectionEnd =
      at + snippet.length;
    this.onEdit();
  }

  /** Server-side validation is the authority before anything deploys. */
  async deploy(): Promise<void> {
    const version = this.versionInput.value.trim() || "1.0.0";
    this.statusPane.textContent = "validating…";
    clear(this.diagnosticsPane);
    try {
      const diagnostics = await this.options.client.validateDocument(
        this.value);
      for (const diagnostic of diagnostics) {
        this.diagnosticsPane.append(el("div", {
          class: `banner ${diagnostic.severity.toLowerCase()}`,
        }, `${diagnostic.code} ${diagnostic.subjectId}: ${diagnostic.message}`));
      }
      if (diagnostics.some((d) => d.severity === "Error")) {
        this.statusPane.textContent = "deploy blocked: fix the errors above";
        return;
      }
      const deployed = await this.options.client.deployWorkflow(
        this.value, version);
      this.statusPane.textContent =
        `deployed ${deployed.definitionId} ${deployed.version}`;
      this.versionInput.value = bumpVersion(deployed.version);
      this.options.onDeployed?.(deployed.definitionId, deployed.version);
    } catch (error) {
      if (error instanceof ApiError) {
        this.statusPane.textContent = `${error.code}: ${error.detail}`;
        for (const diagnostic of error.diagnostics) {
          this.diagnosticsPane.append(el("div", { class: "banner error" },
            `${diagnostic.code} ${diagnostic.subjectId}: ${diagnostic.message}`));
        }
      } else {
        this.statusPane.textContent = `engine unreachable: ${error}`;
      }
    }
  }
}
