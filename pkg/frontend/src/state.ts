/** Console settings: engine URL and poll interval, persisted locally. */

const ENGINE_URL_KEY = "flowgraft.engineUrl";
const POLL_INTERVAL_KEY = "flowgraft.pollIntervalMs";

declare const __ENGINE_URL__: string | undefined;

// Build-time default (string replacement hook) with a runtime fallback.
const BUILD_DEFAULT =
  typeof __ENGINE_URL__ === "string" ? __ENGINE_URL__ : "http://127.0.0.1:7070";

function storage(): Storage | null {
  try {
    return typeof localStorage === "undefined" ? null : localStorage;
  } catch {
    return null;
  }
}

export function engineUrl(): string {
  return storage()?.getItem(ENGINE_URL_KEY) ?? BUILD_DEFAULT;
}

export function setEngineUrl(url: string): void {
  storage()?.setItem(ENGINE_URL_KEY, url.replace(/\/$/, ""));
}

export function pollIntervalMs(): number {
  const raw = storage()?.getItem(POLL_INTERVAL_KEY);
  const parsed = raw ? parseInt(raw, 10) : NaN;
  return Number.isFinite(parsed) && parsed >= 100 ? parsed : 1000;
}

export function setPollIntervalMs(ms: number): void {
  storage()?.setItem(POLL_INTERVAL_KEY, String(ms));
}
