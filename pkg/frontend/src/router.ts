/** Hash router: #/page/param1/param2. Stops the previous page's
 * pollers before rendering the next page. */

import { EngineClient } from "./api.js";
import { clear } from "./dom.js";
import {
  circuitsPage, editorPage, instanceDetailPage, instancesPage,
  settingsPage, workflowDetailPage, workflowsPage, type PageContext,
} from "./pages.js";
import type { Poller } from "./poller.js";

export interface Route {
  page: string;
  params: string[];
}

export function parseHash(hash: string): Route {
  const parts = hash.replace(/^#\/?/, "").split("/").filter(Boolean)
    .map(decodeURIComponent);
  return { page: parts[0] || "workflows", params: parts.slice(1) };
}

export class Router {
  private pollers: Poller<unknown>[] = [];

  constructor(private readonly outlet: HTMLElement,
              private readonly client: EngineClient) {}

  start(): void {
    window.addEventListener("hashchange", () => this.render());
    this.render();
  }

  navigate(hash: string): void {
    if (location.hash === hash) {
      this.render();
    } else {
      location.hash = hash;
    }
  }

  render(): void {
    for (const poller of this.pollers) poller.stop();
    this.pollers = [];
    const context: PageContext = {
      client: this.client,
      navigate: (hash) => this.navigate(hash),
      pollers: this.pollers,
    };
    const route = parseHash(location.hash);
    clear(this.outlet);
    this.outlet.append(this.pageFor(route, context));
    for (const link of document.querySelectorAll("nav a")) {
      link.classList.toggle(
        "active", link.getAttribute("href") === `#/${route.page}`);
    }
  }

  private pageFor(route: Route, context: PageContext): HTMLElement {
    switch (route.page) {
      case "workflows":
        return route.params.length === 2
          ? workflowDetailPage(context, route.params[0], route.params[1])
          : workflowsPage(context);
      case "editor":
        return editorPage(context, route.params[0], route.params[1]);
      case "instances":
        return route.params.length === 1
          ? instanceDetailPage(context, route.params[0])
          : instancesPage(context);
      case "circuits":
        return circuitsPage(context);
      case "settings":
        return settingsPage(context);
      default:
        return workflowsPage(context);
    }
  }
}
