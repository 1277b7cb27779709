/** Typed client for the node RPC API. The UI performs no aggregation of its
 * own: every number rendered comes straight out of these response payloads. */

export interface UploadReceipt {
  cid: string;
  visualizer_link: string;
  qr_png: string; // base64 PNG
}

export interface AnalyzeSummary {
  yield_kg: number;
  water_l: number;
  electricity_kwh: number;
  fertilizer_kg: number;
  record_count: number;
}

export interface TimeseriesPoint {
  bucket_start: string; // ISO date of the bucket
  value: number;
}

export interface GroupFit {
  slope: number;
  intercept: number;
  r2: number;
}

export interface ScatterGroup {
  points: [number, number][];
  fit: GroupFit | null;
}

export interface TimeseriesResponse {
  chart: "timeseries";
  summary: AnalyzeSummary;
  series: TimeseriesPoint[];
}

export interface ScatterResponse {
  chart: "scatter";
  summary: AnalyzeSummary;
  groups: Record<string, ScatterGroup>;
}

export type AnalyzeResponse = TimeseriesResponse | ScatterResponse;

export interface AnalyzeParams {
  cid: string;
  chart: "timeseries" | "scatter";
  bucket?: string;
  resource?: string;
  group_by?: string;
  product_type?: string;
  location?: string;
  farm_type?: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: { error?: string; detail?: string },
  ) {
    super(body.detail ?? body.error ?? `request failed with ${status}`);
  }
}

const BASE58 = "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";

/** Client-side shape check only; the server remains the authority. */
export function looksLikeCid(text: string): boolean {
  return (
    text.length === 46 &&
    text.startsWith("Qm") &&
    [...text].every((ch) => BASE58.includes(ch))
  );
}

async function parseError(resp: Response): Promise<ApiError> {
  let body: { error?: string; detail?: string } = {};
  try {
    body = await resp.json();
  } catch {
    // non-JSON error body; keep the status
  }
  return new ApiError(resp.status, body);
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  async uploadCsv(csvText: string): Promise<UploadReceipt> {
    const resp = await fetch(`${this.baseUrl}/api/v0/farm/upload`, {
      method: "POST",
      headers: { "Content-Type": "text/csv" },
      body: csvText,
    });
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as UploadReceipt;
  }

  analyzeUrl(params: AnalyzeParams): string {
    const q = new URLSearchParams();
    for (const [key, value] of Object.entries(params)) {
      if (value) q.set(key, value);
    }
    return `${this.baseUrl}/api/v0/farm/analyze?${q.toString()}`;
  }

  async analyze(
    params: AnalyzeParams,
    signal?: AbortSignal,
  ): Promise<AnalyzeResponse> {
    const resp = await fetch(this.analyzeUrl(params), { signal });
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as AnalyzeResponse;
  }
}
