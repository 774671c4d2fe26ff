/**
 * Typed client for the labeling service. One submission is in flight at a
 * time: while a POST of decisions is pending, further submit calls return
 * the same promise (so a double-clicked button sends one request), and the
 * idempotency token makes a network retry safe on the server side.
 */
import type {
  BatchPayload,
  DatasetSummary,
  SessionStatus,
  Submission,
  SubmissionResult,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

async function readError(response: Response): Promise<ServiceError> {
  let detail = `${response.status}`;
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    /* non-JSON error body */
  }
  return new ServiceError(response.status, detail);
}

export class ApiClient {
  private inFlight: Promise<SubmissionResult> | null = null;

  constructor(private baseUrl: string, private fetchImpl: FetchLike =
              (...args) => fetch(...args)) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async uploadDataset(csvText: string): Promise<DatasetSummary> {
    const response = await this.fetchImpl(this.url("/datasets"), {
      method: "POST",
      headers: { "Content-Type": "text/csv" },
      body: csvText,
    });
    if (!response.ok) throw await readError(response);
    return response.json();
  }

  async createSession(body: {
    dataset_id: string;
    task: string;
    sampling: { method: "threshold" | "n_least"; threshold?: number; n?: number };
    detect_mismatches: boolean;
  }): Promise<SessionStatus> {
    const response = await this.fetchImpl(this.url("/sessions"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) throw await readError(response);
    return response.json();
  }

  /** Returns null when the pool is exhausted (204). */
  async fetchBatch(sessionId: string): Promise<BatchPayload | null> {
    const response = await this.fetchImpl(this.url(`/sessions/${sessionId}/batch`));
    if (response.status === 204) return null;
    if (!response.ok) throw await readError(response);
    return response.json();
  }

  submitLabels(sessionId: string, submission: Submission): Promise<SubmissionResult> {
    if (this.inFlight) return this.inFlight;
    const request = (async () => {
      try {
        const response = await this.fetchImpl(this.url(`/sessions/${sessionId}/labels`), {
          method: "POST",
          headers: { "Content-Type": "application/json" },
          body: JSON.stringify(submission),
        });
        if (!response.ok) throw await readError(response);
        return (await response.json()) as SubmissionResult;
      } finally {
        this.inFlight = null;
      }
    })();
    this.inFlight = request;
    return request;
  }

  async exportCsv(sessionId: string): Promise<string> {
    const response = await this.fetchImpl(this.url(`/sessions/${sessionId}/export`));
    if (!response.ok) throw await readError(response);
    return response.text();
  }
}
