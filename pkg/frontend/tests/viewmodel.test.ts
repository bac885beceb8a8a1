/** Snapshot tests against recorded API payloads.
 *
 * Every number shown in the UI must be traceable to an API fixture value;
 * the assertions below compare the view models field-by-field with the
 * payloads, so any client-side recomputation would fail here.
 */

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import type {
  ClusterResponse,
  ExcludeResponse,
  PointsResponse,
  ProbeReport,
  ValidateResponse,
} from "../src/types";
import {
  keywordRows,
  probeTable,
  scatterModel,
  sparklinePoints,
} from "../src/viewmodel";

function fixture<T>(name: string): T {
  return JSON.parse(
    readFileSync(join(__dirname, "fixtures", name), "utf-8")) as T;
}

describe("keyword workbench rows", () => {
  const payload = fixture<ValidateResponse>("validate.json");
  const rows = keywordRows(payload);

  it("keeps the API's order and totals verbatim", () => {
    expect(rows.map((r) => [r.keyword, r.total])).toEqual(
      payload.reports.map((r) => [r.keyword, r.total]));
    expect(rows[0]).toMatchObject({ keyword: "Monkeys", total: 36772 });
  });

  it("flags zero-total keywords as weak", () => {
    for (const row of rows) {
      expect(row.weak).toBe(row.total === 0);
    }
  });

  it("passes context urls through untouched", () => {
    expect(rows[0].contextUrls).toEqual(payload.reports[0].context_urls);
    expect(rows[0].contextUrls).toHaveLength(11);
  });

  it("matches the snapshot", () => {
    expect(rows.map(({ spark, contextUrls, ...rest }) => rest))
      .toMatchSnapshot();
  });
});

describe("sparkline geometry", () => {
  it("is empty for no data", () => {
    expect(sparklinePoints([])).toBe("");
  });

  it("spans the full width", () => {
    const points = sparklinePoints([1, 2, 3], 100, 20).split(" ");
    expect(points[0].startsWith("0.0,")).toBe(true);
    expect(points[2].startsWith("100.0,")).toBe(true);
  });
});

describe("embed map model (acceptance 11)", () => {
  const before = fixture<PointsResponse>("points_before.json");
  const cluster = fixture<ClusterResponse>("cluster.json");
  const exclude = fixture<ExcludeResponse>("exclude.json");
  const after = fixture<PointsResponse>("points_after_exclude.json");

  it("shows the candidate counter straight from the API", () => {
    expect(scatterModel(before).candidateCount).toBe(before.candidate_count);
    expect(scatterModel(after).candidateCount).toBe(after.candidate_count);
  });

  it("excluding cluster 1 drops the counter by exactly its size", () => {
    const clusterSize = cluster.cluster_sizes["1"];
    expect(exclude.updated).toBe(clusterSize);
    expect(scatterModel(before).candidateCount
           - scatterModel(after).candidateCount).toBe(clusterSize);
    // and the exclude response already carries the fresh counter
    expect(exclude.candidate_count)
      .toBe(scatterModel(after).candidateCount);
  });

  it("legend sizes come from the API's cluster_sizes", () => {
    const legend = scatterModel(before).legend;
    for (const entry of legend) {
      expect(entry.size).toBe(before.cluster_sizes[String(entry.label)]);
    }
  });

  it("marks excluded clusters after the exclusion", () => {
    const legend = scatterModel(after).legend;
    const excluded = legend.filter((e) => e.excluded).map((e) => e.label);
    expect(excluded).toEqual(after.excluded_labels);
    expect(excluded).toContain(1);
  });

  it("repaint model is a pure reshape of the payload", () => {
    expect(scatterModel(before)).toMatchSnapshot("before-exclusion");
    expect(scatterModel(after)).toMatchSnapshot("after-exclusion");
  });
});

describe("probe console table (acceptance 12)", () => {
  const report = fixture<ProbeReport>("probe_report.json");
  const model = probeTable(report);

  it("badge mirrors the API's pass verdict", () => {
    expect(model.badge).toBe(report.passed ? "PASS" : "FAIL");
    expect(model.badge).toBe("PASS");
  });

  it("shows the API's deviation numbers verbatim", () => {
    expect(model.maxDeviation).toBe("4.00%");
    for (const row of model.rows) {
      const tag = report.per_tag[row.tag];
      expect(row.expected).toBe(`${tag.expected_pct.toFixed(2)}%`);
      expect(row.observed).toBe(`${tag.observed_pct.toFixed(2)}%`);
      expect(row.count).toBe(report.distribution[row.tag]);
    }
  });

  it("is not flagged unreliable for this run", () => {
    expect(model.unreliable).toBe(report.unreliable);
    expect(model.unreliable).toBe(false);
  });

  it("matches the snapshot", () => {
    expect(model).toMatchSnapshot();
  });
});
