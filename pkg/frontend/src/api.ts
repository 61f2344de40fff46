/** Thin typed client over the annotation service routes. */

import type {
  ApiFailure,
  Assignment,
  FinalizeReport,
  SessionSnapshot,
  ThresholdResponse,
} from "./types.js";

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(status: number, failure: ApiFailure) {
    super(failure.detail);
    this.code = failure.error;
    this.status = status;
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(base + path, init);
  if (!response.ok) {
    let failure: ApiFailure;
    try {
      failure = (await response.json()) as ApiFailure;
    } catch {
      failure = { error: "http_error", detail: `status ${response.status}` };
    }
    throw new ApiError(response.status, failure);
  }
  return (await response.json()) as T;
}

function post<T>(base: string, path: string, body: unknown): Promise<T> {
  return request<T>(base, path, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
}

export class SalpClient {
  constructor(readonly base: string = "") {}

  getSession(): Promise<SessionSnapshot> {
    return request<SessionSnapshot>(this.base, "/api/session");
  }

  setThreshold(tau: number): Promise<ThresholdResponse> {
    return post<ThresholdResponse>(this.base, "/api/threshold", { tau });
  }

  postLabels(assignments: Assignment[]): Promise<{ applied: number }> {
    return post<{ applied: number }>(this.base, "/api/labels", { assignments });
  }

  undo(): Promise<{ undone: number }> {
    return post<{ undone: number }>(this.base, "/api/undo", {});
  }

  finalize(): Promise<FinalizeReport> {
    return post<FinalizeReport>(this.base, "/api/finalize", {});
  }

  thumbnailUrl(id: number): string {
    return `${this.base}/api/thumbnail/${id}`;
  }
}
