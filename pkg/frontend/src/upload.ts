/** Upload window: pick a CSV, post it, show the receipt (cid, link, QR). */

import { ApiClient, ApiError, UploadReceipt } from "./api.js";

export type UploadStatus = "idle" | "uploading" | "done" | "error";

export interface UploadView {
  root: HTMLElement;
  status: UploadStatus;
  receipt: UploadReceipt | null;
  submit(): Promise<void>;
}

export function initUploadView(root: HTMLElement, api: ApiClient): UploadView {
  root.innerHTML = `
    <section class="upload-view">
      <h1>Upload farm data</h1>
      <input type="file" accept=".csv,text/csv" data-role="file-input">
      <button type="button" data-role="submit">Upload</button>
      <p data-role="progress" hidden></p>
      <div data-role="error-banner" class="error" hidden></div>
      <div data-role="receipt" class="receipt" hidden>
        <p>Stored as <code data-role="receipt-cid"></code></p>
        <p><a data-role="receipt-link" target="_blank">Open in visualizer</a></p>
        <img data-role="receipt-qr" alt="QR code linking to the visualizer" width="256">
      </div>
    </section>`;

  const fileInput = root.querySelector<HTMLInputElement>('[data-role="file-input"]')!;
  const submitBtn = root.querySelector<HTMLButtonElement>('[data-role="submit"]')!;
  const progress = root.querySelector<HTMLElement>('[data-role="progress"]')!;
  const errorBanner = root.querySelector<HTMLElement>('[data-role="error-banner"]')!;
  const receiptPanel = root.querySelector<HTMLElement>('[data-role="receipt"]')!;
  const cidEl = root.querySelector<HTMLElement>('[data-role="receipt-cid"]')!;
  const linkEl = root.querySelector<HTMLAnchorElement>('[data-role="receipt-link"]')!;
  const qrEl = root.querySelector<HTMLImageElement>('[data-role="receipt-qr"]')!;

  const view: UploadView = {
    root,
    status: "idle",
    receipt: null,
    async submit() {
      const file = fileInput.files?.[0];
      if (!file) {
        view.status = "error";
        errorBanner.hidden = false;
        errorBanner.textContent = "Choose a CSV file first.";
        return;
      }
      view.status = "uploading";
      view.receipt = null;
      receiptPanel.hidden = true;
      errorBanner.hidden = true;
      progress.hidden = false;
      progress.textContent = `Uploading ${file.name}…`;
      try {
        const receipt = await api.uploadCsv(await file.text());
        view.receipt = receipt;
        view.status = "done";
        cidEl.textContent = receipt.cid;
        linkEl.href = receipt.visualizer_link;
        qrEl.src = `data:image/png;base64,${receipt.qr_png}`;
        receiptPanel.hidden = false;
      } catch (err) {
        view.status = "error";
        errorBanner.hidden = false;
        if (err instanceof ApiError) {
          const kind = err.body.error ?? "UploadRejected";
          const detail = err.body.detail ?? "";
          errorBanner.textContent = `${kind}: ${detail}`.trim();
        } else {
          errorBanner.textContent = "Network error — please retry.";
        }
      } finally {
        progress.hidden = true;
      }
    },
  };

  submitBtn.addEventListener("click", () => void view.submit());
  return view;
}
