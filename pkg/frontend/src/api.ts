/** Thin typed client over the service HTTP API with an injectable fetch. */

import type {
  ComparisonResultWire,
  Decision,
  AnnotationRecord,
  ServiceConfig,
  TrialPayload,
} from "./types.js";

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string }
) => Promise<{ status: number; json(): Promise<unknown> }>;

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

export class ApiClient {
  constructor(
    private fetchLike: FetchLike,
    private baseUrl: string = "",
    public annotatorId: string = "anonymous"
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: { method: string; headers: Record<string, string>; body?: string } = {
      method,
      headers: { "X-Annotator-Id": this.annotatorId },
    };
    if (body !== undefined) {
      init.headers["Content-Type"] = "application/json";
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchLike(this.baseUrl + path, init);
    const payload = (await res.json()) as Record<string, unknown>;
    if (res.status >= 400) {
      const detail =
        typeof payload?.detail === "string" ? payload.detail : `HTTP ${res.status}`;
      throw new ApiError(res.status, detail);
    }
    return payload as T;
  }

  getConfig(): Promise<ServiceConfig> {
    return this.request("GET", "/config");
  }

  nextTrial(step: "evaluation" | "verification"): Promise<TrialPayload> {
    const params = new URLSearchParams({ annotator: this.annotatorId, step });
    return this.request("GET", `/trials/next?${params.toString()}`);
  }

  submitDecision(
    trialId: string,
    decision: Decision,
    annotations: AnnotationRecord[]
  ): Promise<TrialPayload> {
    return this.request("POST", `/trials/${trialId}/decision`, { decision, annotations });
  }

  getResult(pairId: string): Promise<ComparisonResultWire> {
    return this.request("GET", `/results/${pairId}`);
  }

  runComparison(pairId: string): Promise<ComparisonResultWire> {
    return this.request("POST", `/compare/${pairId}`);
  }

  recordReview(pairId: string, agree: boolean): Promise<unknown> {
    return this.request("POST", `/results/${pairId}/review`, { agree });
  }

  fileUrl(relative: string): string {
    return `${this.baseUrl}/files/${relative}`;
  }
}
