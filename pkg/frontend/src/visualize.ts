/** Visualizer window: cid input + filter controls + chart, all data
 * server-computed. In-flight requests are superseded by newer ones
 * (latest-wins), so the chart always reflects the last completed request. */

import {
  AnalyzeParams,
  AnalyzeResponse,
  ApiClient,
  ApiError,
  looksLikeCid,
} from "./api.js";
import { renderScatter, renderTimeseries } from "./charts.js";

export type FetchStatus =
  | "idle"
  | "loading"
  | "loaded"
  | "not_found"
  | "not_dataset"
  | "invalid"
  | "error";

export interface VisualizeView {
  root: HTMLElement;
  status: FetchStatus;
  data: AnalyzeResponse | null;
  load(): Promise<void>;
  setCid(cid: string): void;
  setFilter(name: "product_type" | "location" | "farm_type", value: string): void;
  setChart(chart: "timeseries" | "scatter"): void;
}

const STATUS_TEXT: Record<FetchStatus, string> = {
  idle: "",
  loading: "Fetching farm data…",
  loaded: "",
  not_found: "Content not found on the network.",
  not_dataset: "This content is not a farm dataset.",
  invalid: "That does not look like a valid cid.",
  error: "Request failed — please retry.",
};

export function initVisualizeView(
  root: HTMLElement,
  api: ApiClient,
  initialCid?: string,
): VisualizeView {
  root.innerHTML = `
    <section class="visualize-view">
      <h1>Farm data visualizer</h1>
      <form data-role="cid-form">
        <input type="text" data-role="cid-input" placeholder="Qm…" size="48">
        <button type="submit">Visualize</button>
      </form>
      <fieldset data-role="filters">
        <select data-role="chart-select">
          <option value="timeseries">Yield over time</option>
          <option value="scatter">Yield vs resource</option>
        </select>
        <input type="text" data-role="filter-product_type" placeholder="product type">
        <input type="text" data-role="filter-location" placeholder="location">
        <input type="text" data-role="filter-farm_type" placeholder="farm type">
      </fieldset>
      <p data-role="status" hidden></p>
      <dl data-role="summary" hidden>
        <dt>Records</dt><dd data-role="summary-count"></dd>
        <dt>Total yield (kg)</dt><dd data-role="summary-yield"></dd>
      </dl>
      <div data-role="chart"></div>
    </section>`;

  const cidInput = root.querySelector<HTMLInputElement>('[data-role="cid-input"]')!;
  const form = root.querySelector<HTMLFormElement>('[data-role="cid-form"]')!;
  const chartSelect = root.querySelector<HTMLSelectElement>('[data-role="chart-select"]')!;
  const statusEl = root.querySelector<HTMLElement>('[data-role="status"]')!;
  const summaryEl = root.querySelector<HTMLElement>('[data-role="summary"]')!;
  const summaryCount = root.querySelector<HTMLElement>('[data-role="summary-count"]')!;
  const summaryYield = root.querySelector<HTMLElement>('[data-role="summary-yield"]')!;
  const chartEl = root.querySelector<HTMLElement>('[data-role="chart"]')!;

  const filters: Record<string, string> = {
    product_type: "",
    location: "",
    farm_type: "",
  };
  let controller: AbortController | null = null;
  let requestSeq = 0;

  function showStatus(status: FetchStatus) {
    view.status = status;
    statusEl.hidden = STATUS_TEXT[status] === "";
    statusEl.textContent = STATUS_TEXT[status];
    statusEl.dataset.status = status;
  }

  const view: VisualizeView = {
    root,
    status: "idle",
    data: null,
    setCid(cid) {
      cidInput.value = cid;
    },
    setFilter(name, value) {
      filters[name] = value;
      const input = root.querySelector<HTMLInputElement>(
        `[data-role="filter-${name}"]`,
      )!;
      input.value = value;
    },
    setChart(chart) {
      chartSelect.value = chart;
    },
    async load() {
      const cid = cidInput.value.trim();
      if (!looksLikeCid(cid)) {
        showStatus("invalid");
        return;
      }
      controller?.abort();
      controller = new AbortController();
      const seq = ++requestSeq;
      showStatus("loading");
      const params: AnalyzeParams = {
        cid,
        chart: chartSelect.value as "timeseries" | "scatter",
      };
      if (params.chart === "scatter") {
        params.resource = "water_l";
        params.group_by = "farm_type";
      }
      for (const key of ["product_type", "location", "farm_type"] as const) {
        if (filters[key]) params[key] = filters[key];
      }
      try {
        const data = await api.analyze(params, controller.signal);
        if (seq !== requestSeq) return; // superseded by a newer request
        view.data = data;
        showStatus("loaded");
        summaryEl.hidden = false;
        summaryCount.textContent = String(data.summary.record_count);
        summaryYield.textContent = String(data.summary.yield_kg);
        chartEl.replaceChildren(
          data.chart === "timeseries"
            ? renderTimeseries(data)
            : renderScatter(data),
        );
      } catch (err) {
        if (seq !== requestSeq) return;
        if (err instanceof DOMException && err.name === "AbortError") return;
        summaryEl.hidden = true;
        chartEl.replaceChildren();
        if (err instanceof ApiError && err.status === 404) showStatus("not_found");
        else if (err instanceof ApiError && err.status === 422)
          showStatus("not_dataset");
        else showStatus("error");
      }
    },
  };

  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    void view.load();
  });
  chartSelect.addEventListener("change", () => void view.load());
  for (const key of ["product_type", "location", "farm_type"]) {
    const input = root.querySelector<HTMLInputElement>(
      `[data-role="filter-${key}"]`,
    )!;
    input.addEventListener("change", () => {
      filters[key] = input.value.trim();
      void view.load();
    });
  }

  if (initialCid) {
    // deep link: /visualize?cid=X behaves exactly like typing X and submitting
    view.setCid(initialCid);
    void view.load();
  }
  return view;
}
