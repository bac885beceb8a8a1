/** Response shapes of the popscope HTTP API (the single source of truth
 * for every number the UI displays). */

export interface Candidate {
  surface: string;
  ordinal: number;
}

export interface SuggestResponse {
  prompt: string;
  candidates: Candidate[];
  unparsed_completions: number;
}

export interface KeywordReport {
  keyword: string;
  ordinal: number;
  total: number | null;
  daily: [string, number][] | null;
  context_urls: [string, string][];
}

export interface ValidateResponse {
  window: { from: string; to: string };
  reports: KeywordReport[];
}

export interface ScatterPoint {
  post_id: string;
  x: number;
  y: number;
  label: number;
  excluded: boolean;
  text: string;
}

export interface PointsResponse {
  run_id: string;
  points: ScatterPoint[];
  cluster_sizes: Record<string, number>;
  excluded_labels: number[];
  candidate_count: number;
}

export interface ClusterResponse {
  run_id: string;
  labels: number[];
  n_clusters: number;
  cluster_sizes: Record<string, number>;
  candidate_count: number;
}

export interface ExcludeResponse {
  run_id: string;
  updated: number;
  excluded: boolean;
  candidate_count: number;
}

export interface TagDeviation {
  expected_pct: number;
  observed_pct: number;
  deviation_pct: number;
}

export interface ProbeReport {
  probe_run_id?: string;
  per_tag: Record<string, TagDeviation>;
  max_abs_deviation_pct: number;
  parse_failures: number;
  total: number;
  threshold_pct: number;
  passed: boolean;
  unreliable: boolean;
  distribution: Record<string, number>;
}

export interface JobResponse {
  id: string;
  kind: string;
  status: "queued" | "running" | "succeeded" | "failed";
  result: unknown;
  error: string | null;
}
