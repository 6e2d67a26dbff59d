/**
 * Thin typed client for the gesturekit session service.
 *
 * Every method is one HTTP route; nothing is computed client-side. Errors
 * surface as ApiError carrying the HTTP status and the service's detail
 * string, which the UI shows as a toast.
 */

export type TraceRows = Array<[number, number, number, number]>;

export interface ClassifyResponse {
  decision: string | null;
  posteriors: Record<string, number>;
  sample_counts?: Record<string, number>;
  candidates: string[];
  samples_used: number;
  elapsed_ms?: number;
  degenerate?: boolean;
  mode: string;
  thr: number;
  forced?: boolean;
}

export interface SessionSummary {
  session_id: string;
  gestures: Record<string, number>;
  trained: boolean;
  stale: boolean;
  quantizer: string;
  thr: number;
  min_samples: number;
  priors: Record<string, number> | null;
}

export interface MetricsResponse {
  thr_grid: number[];
  recognition: number[];
  abstention: number[];
  per_gesture: Record<string, { precision: number[]; recall: number[] }>;
  in_sample: boolean;
  stale: boolean;
  thr: number;
}

export interface TrainResponse {
  status: string;
  quantizer: string;
  gestures: Record<string, number>;
}

export interface ConfigPatch {
  thr?: number;
  min_samples?: number;
  priors?: Record<string, number>;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function parse<T>(res: Response): Promise<T> {
  const body = await res.json().catch(() => ({}));
  if (!res.ok) {
    const detail =
      typeof body === "object" && body !== null && "detail" in body
        ? String((body as { detail: unknown }).detail)
        : res.statusText;
    throw new ApiError(res.status, detail);
  }
  return body as T;
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private req<T>(method: string, path: string, body?: unknown): Promise<T> {
    return fetch(this.baseUrl + path, {
      method,
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    }).then((res) => parse<T>(res));
  }

  createSession(): Promise<{ session_id: string }> {
    return this.req("POST", "/sessions", {});
  }

  addGesture(sessionId: string, label: string): Promise<{ label: string; samples: number }> {
    return this.req("POST", `/sessions/${sessionId}/gestures`, { label });
  }

  addSample(
    sessionId: string,
    label: string,
    rows: TraceRows,
  ): Promise<{ label: string; samples: number }> {
    return this.req(
      "POST",
      `/sessions/${sessionId}/gestures/${encodeURIComponent(label)}/samples`,
      rows,
    );
  }

  train(
    sessionId: string,
    body: { quantizer?: string; n_states?: number; seed?: number } = {},
  ): Promise<TrainResponse> {
    return this.req("POST", `/sessions/${sessionId}/train`, body);
  }

  classify(
    sessionId: string,
    rows: TraceRows,
    opts: { mode?: "signaled" | "dead_start"; thr?: number } = {},
  ): Promise<ClassifyResponse> {
    return this.req("POST", `/sessions/${sessionId}/classify`, {
      sample: rows,
      ...opts,
    });
  }

  patchConfig(sessionId: string, patch: ConfigPatch): Promise<{
    thr: number;
    min_samples: number;
    priors: Record<string, number> | null;
    quantizer: string;
  }> {
    return this.req("PATCH", `/sessions/${sessionId}/config`, patch);
  }

  metrics(sessionId: string): Promise<MetricsResponse> {
    return this.req("GET", `/sessions/${sessionId}/metrics`);
  }

  session(sessionId: string): Promise<SessionSummary> {
    return this.req("GET", `/sessions/${sessionId}`);
  }
}
