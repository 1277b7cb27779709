// End-to-end UI acceptance, fixture-backed; prints one PASS line per criterion.
import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient, TimeseriesResponse, UploadReceipt } from "../src/api.js";
import { initUploadView } from "../src/upload.js";
import { initVisualizeView } from "../src/visualize.js";
import { fixture, fixtureText, jsonResponse, stubFetch } from "./helpers.js";

const receipt = fixture<UploadReceipt>("upload_receipt.json");
const allSeries = fixture<TimeseriesResponse>("analyze_timeseries_all.json");
const tomatoSeries = fixture<TimeseriesResponse>("analyze_timeseries_tomato.json");
const sampleCsv = fixtureText("sample.csv");
const UNKNOWN = "QmYwAPJzv5CZsnA625s3Xf2nemtYgPpHdWEz79ojWnPbdG";

describe("ui acceptance", () => {
  let root: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = '<div id="app"></div>';
    root = document.getElementById("app")!;
  });

  it("criterion 14: upload flow shows cid, visualizer link and QR", async () => {
    stubFetch(() => jsonResponse(200, receipt));
    const view = initUploadView(root, new ApiClient("http://api.test"));
    const input = root.querySelector<HTMLInputElement>('[data-role="file-input"]')!;
    Object.defineProperty(input, "files", {
      value: [new File([sampleCsv], "sample.csv", { type: "text/csv" })],
    });
    await view.submit();

    const cid = root.querySelector('[data-role="receipt-cid"]')!.textContent!;
    expect(cid).toHaveLength(46);
    expect(cid).toBe(receipt.cid);
    const link = root.querySelector<HTMLAnchorElement>('[data-role="receipt-link"]')!;
    expect(link.href).toBe(receipt.visualizer_link);
    expect(link.href).toContain(cid);
    const qr = root.querySelector<HTMLImageElement>('[data-role="receipt-qr"]')!;
    expect(qr.src).toBe(`data:image/png;base64,${receipt.qr_png}`);
    console.log("ACCEPTANCE 14: PASS — upload shows 46-char cid, visualizer link, QR image");
  });

  it("criterion 15: visualizer matches recorded fixtures; unknown cid shows not-found", async () => {
    stubFetch((url) => {
      const q = new URL(url).searchParams;
      if (q.get("cid") !== receipt.cid) {
        return jsonResponse(404, { error: "content not found" });
      }
      return jsonResponse(
        200,
        q.get("product_type") === "tomato" ? tomatoSeries : allSeries,
      );
    });

    // filter combination 1: no filter
    const view = initVisualizeView(root, new ApiClient("http://api.test"), receipt.cid);
    await new Promise((r) => setTimeout(r, 0));
    let values = [...root.querySelectorAll("circle[data-value]")].map((c) =>
      Number(c.getAttribute("data-value")),
    );
    expect(values).toEqual(allSeries.series.map((p) => p.value));

    // filter combination 2: product_type=tomato
    view.setFilter("product_type", "tomato");
    await view.load();
    values = [...root.querySelectorAll("circle[data-value]")].map((c) =>
      Number(c.getAttribute("data-value")),
    );
    expect(values).toEqual(tomatoSeries.series.map((p) => p.value));

    // unknown cid → not-found state
    view.setCid(UNKNOWN);
    await view.load();
    expect(view.status).toBe("not_found");
    console.log("ACCEPTANCE 15: PASS — charts match recorded fixtures for two filters; unknown cid → not-found");
  });
});
