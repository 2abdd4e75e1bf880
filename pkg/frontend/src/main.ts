import { EngineClient } from "./api.js";
import { Router } from "./router.js";
import { engineUrl } from "./state.js";

function boot(): void {
  const outlet = document.getElementById("outlet");
  if (!outlet) throw new Error("missing #outlet element");
  const client = new EngineClient(engineUrl());
  new Router(outlet, client).start();
  const urlLabel = document.getElementById("engine-url");
  if (urlLabel) urlLabel.textContent = engineUrl();
}

if (document.readyState === "loading") {
  document.addEventListener("DOMContentLoaded", boot);
} else {
  boot();
}
