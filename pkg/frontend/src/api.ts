import type {
  ClusterResponse,
  ExcludeResponse,
  JobResponse,
  PointsResponse,
  ProbeReport,
  SuggestResponse,
  ValidateResponse,
} from "./types";

const BASE = "";

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(`${BASE}${path}`, init);
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    const message = (body as { error?: string }).error ?? response.statusText;
    throw new Error(message);
  }
  return body as T;
}

function post<T>(path: string, payload: unknown): Promise<T> {
  return request<T>(path, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(payload),
  });
}

export const api = {
  health: () => request<{ status: string; version: string }>("/api/health"),

  suggest: (topic: string, samples: number) =>
    post<SuggestResponse>("/api/keywords/suggest", { topic, samples }),

  validate: (keywords: string[], from: string, to: string) =>
    post<ValidateResponse>("/api/keywords/validate", { keywords, from, to }),

  collect: (payload: Record<string, unknown>) =>
    post<{ job_id: string }>("/api/collect", payload),

  embed: (modelTag: string) =>
    post<{ job_id: string }>("/api/embed", { model_tag: modelTag }),

  runProjection: (payload: Record<string, unknown>) =>
    post<{ job_id: string }>("/api/projection/run", payload),

  points: (runId: string) =>
    request<PointsResponse>(`/api/projection/${encodeURIComponent(runId)}/points`),

  cluster: (runId: string, eps: number, minPts: number) =>
    post<ClusterResponse>("/api/cluster", {
      run_id: runId,
      eps,
      min_pts: minPts,
    }),

  exclude: (runId: string, clusters: number[], excluded: boolean) =>
    post<ExcludeResponse>("/api/exclude", {
      run_id: runId,
      clusters,
      excluded,
    }),

  buildCorpus: (payload: Record<string, unknown>) =>
    post<{ manifest: Record<string, unknown> }>("/api/corpus/build", payload),

  runProbes: (payload: Record<string, unknown>) =>
    post<{ job_id: string }>("/api/probe/run", payload),

  probeReport: (runId: string, threshold: number) =>
    request<ProbeReport>(
      `/api/probe/${encodeURIComponent(runId)}/report?threshold=${threshold}`),

  job: (jobId: string) => request<JobResponse>(`/api/jobs/${jobId}`),
};

export type Api = typeof api;
