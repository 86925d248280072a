/** Typed client for the review API. Every call maps non-2xx responses to
 * ApiError carrying the server's error message, so the UI can tell a 409
 * (guidance) from a 400 (bug) from a dead server (status 0). */

export type Label = "secret" | "not_secret";

export interface ConfusionCounts {
  tp: number;
  fp: number;
  tn: number;
  fn: number;
}

export interface Metrics {
  precision: number;
  recall: number;
  f1: number;
  counts: ConfusionCounts;
  degenerate_flags: string[];
}

export interface FindingView {
  finding_id: string;
  path: string;
  line_number: number;
  detector: string;
  entropy_bits: number;
  score: number | null;
  label: string;
  context: [number, string][];
}

export interface FindingsPage {
  findings: FindingView[];
  total: number;
  offset: number;
  limit: number;
}

export interface Stats {
  pending: number;
  labeled: number;
  secrets: number;
  not_secrets: number;
  current_metrics: Metrics | null;
}

export interface RetrainResult {
  before: Metrics | null;
  after: Metrics;
}

export interface LabelRecord {
  finding_id: string;
  label: Label;
  labeled_at: string;
  annotator: string;
}

export type Status = "pending" | "labeled" | "";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

export interface Api {
  fetchAllFindings(status: Status): Promise<FindingView[]>;
  postLabel(findingId: string, label: Label): Promise<LabelRecord>;
  fetchStats(): Promise<Stats>;
  postRetrain(): Promise<RetrainResult>;
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  let response: Response;
  try {
    response = await fetch(path, init);
  } catch {
    throw new ApiError(0, "API unreachable");
  }
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    const message =
      typeof body?.error === "string" ? body.error : `HTTP ${response.status}`;
    throw new ApiError(response.status, message);
  }
  return body as T;
}

const PAGE_LIMIT = 200;

/** Client against a review service; `base` is empty for same-origin use
 * and an absolute origin in tests that talk to a separately spawned
 * server. */
export function makeHttpApi(base = ""): Api {
  async function fetchPage(status: Status, offset: number): Promise<FindingsPage> {
    const params = new URLSearchParams({
      offset: String(offset),
      limit: String(PAGE_LIMIT),
    });
    if (status) params.set("status", status);
    return request<FindingsPage>(`${base}/api/findings?${params}`);
  }

  return {
    async fetchAllFindings(status) {
      const findings: FindingView[] = [];
      let offset = 0;
      for (;;) {
        const page = await fetchPage(status, offset);
        findings.push(...page.findings);
        offset += page.findings.length;
        if (offset >= page.total || page.findings.length === 0) break;
      }
      return findings;
    },

    postLabel(findingId, label) {
      return request<LabelRecord>(`${base}/api/labels`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ finding_id: findingId, label }),
      });
    },

    fetchStats() {
      return request<Stats>(`${base}/api/stats`);
    },

    postRetrain() {
      return request<RetrainResult>(`${base}/api/retrain`, { method: "POST" });
    },
  };
}

export const httpApi: Api = makeHttpApi();
