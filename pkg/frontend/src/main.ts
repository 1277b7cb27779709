/** Entry point: routes /upload and /visualize onto one page shell. */

import { ApiClient } from "./api.js";
import { initUploadView } from "./upload.js";
import { initVisualizeView } from "./visualize.js";

export function mount(root: HTMLElement, apiBase: string, location: Location): void {
  const api = new ApiClient(apiBase);
  const path = location.pathname;
  if (path === "/visualize") {
    const cid = new URLSearchParams(location.search).get("cid") ?? undefined;
    initVisualizeView(root, api, cid);
  } else {
    initUploadView(root, api);
  }
}

declare const process: { env?: Record<string, string | undefined> } | undefined;

if (typeof document !== "undefined" && document.getElementById("app")) {
  const apiBase =
    (typeof process !== "undefined" && process?.env?.FARMLEDGER_API) ||
    "http://127.0.0.1:5001";
  mount(document.getElementById("app")!, apiBase, window.location);
}
