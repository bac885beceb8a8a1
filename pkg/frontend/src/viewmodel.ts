/** Pure payload-to-display transforms.
 *
 * These functions reshape API responses for rendering and nothing else:
 * every displayed number is taken verbatim from the payload, so snapshot
 * tests against recorded API fixtures pin the whole surface.
 */

import type {
  KeywordReport,
  PointsResponse,
  ProbeReport,
  ValidateResponse,
} from "./types";

export const CLUSTER_PALETTE = [
  "#4269d0", "#efb118", "#ff725c", "#6cc5b0", "#3ca951",
  "#ff8ab7", "#a463f2", "#97bbf5", "#9c6b4e", "#bab0ab",
];
export const NOISE_COLOR = "#c8c8c8";

export function clusterColor(label: number): string {
  return label < 0 ? NOISE_COLOR : CLUSTER_PALETTE[label % CLUSTER_PALETTE.length];
}

export interface KeywordRow {
  keyword: string;
  total: number | null;
  totalDisplay: string;
  weak: boolean;        // zero usage over the window
  failed: boolean;      // counts backend failure (null series)
  spark: number[];      // daily counts as returned, for the sparkline
  contextUrls: [string, string][];
}

export function keywordRows(payload: ValidateResponse): KeywordRow[] {
  return payload.reports.map((report: KeywordReport) => ({
    keyword: report.keyword,
    total: report.total,
    totalDisplay: report.total === null
      ? "backend failure"
      : report.total.toLocaleString("en-US"),
    weak: report.total === 0,
    failed: report.total === null,
    spark: (report.daily ?? []).map(([, count]) => count),
    contextUrls: report.context_urls,
  }));
}

/** Polyline points for a fixed-size sparkline; pure geometry. */
export function sparklinePoints(values: number[], width = 120,
                                height = 28): string {
  if (values.length === 0) return "";
  const max = Math.max(...values, 1);
  const step = values.length > 1 ? width / (values.length - 1) : 0;
  return values
    .map((v, i) => `${(i * step).toFixed(1)},${(height - (v / max) * height).toFixed(1)}`)
    .join(" ");
}

export interface LegendEntry {
  label: number;
  name: string;
  size: number;        // from the API's cluster_sizes
  excluded: boolean;
  color: string;
}

export interface ScatterModel {
  runId: string;
  candidateCount: number;   // from the API, never recomputed client-side
  legend: LegendEntry[];
  totalPoints: number;
}

export function scatterModel(payload: PointsResponse): ScatterModel {
  const excluded = new Set(payload.excluded_labels);
  const legend = Object.entries(payload.cluster_sizes)
    .map(([key, size]) => {
      const label = Number(key);
      return {
        label,
        name: label < 0 ? "noise" : `cluster ${label}`,
        size,
        excluded: excluded.has(label),
        color: clusterColor(label),
      };
    })
    .sort((a, b) => a.label - b.label);
  return {
    runId: payload.run_id,
    candidateCount: payload.candidate_count,
    legend,
    totalPoints: payload.points.length,
  };
}

export const TAG_ORDER = ["ten", "twenty", "thirty", "forty"] as const;

export interface ProbeTableRow {
  tag: string;
  expected: string;
  observed: string;
  deviation: string;
  count: number;
}

export interface ProbeTableModel {
  rows: ProbeTableRow[];
  maxDeviation: string;
  threshold: string;
  badge: "PASS" | "FAIL";
  unreliable: boolean;
  parseFailures: number;
  total: number;
}

const pct = (value: number) => `${value.toFixed(2)}%`;

export function probeTable(report: ProbeReport): ProbeTableModel {
  return {
    rows: TAG_ORDER.map((tag) => {
      const d = report.per_tag[tag];
      return {
        tag,
        expected: pct(d.expected_pct),
        observed: pct(d.observed_pct),
        deviation: `${d.deviation_pct >= 0 ? "+" : ""}${d.deviation_pct.toFixed(2)}%`,
        count: report.distribution[tag] ?? 0,
      };
    }),
    maxDeviation: pct(report.max_abs_deviation_pct),
    threshold: pct(report.threshold_pct),
    badge: report.passed ? "PASS" : "FAIL",
    unreliable: report.unreliable,
    parseFailures: report.parse_failures,
    total: report.total,
  };
}
