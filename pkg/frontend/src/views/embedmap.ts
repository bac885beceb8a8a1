import { api } from "../api";
import { clear, errorBanner, h } from "../dom";
import {
  Transform,
  clusterCentroids,
  hitTestCluster,
  hitTestPoint,
  paintScatter,
} from "../scatter";
import type { PointsResponse } from "../types";
import { scatterModel } from "../viewmodel";

const HIT_RADIUS_PX = 60;
const HOVER_RADIUS_PX = 8;

export function embedMap(root: HTMLElement): void {
  const runInput = h("input", { type: "text", value: "blobrun" });
  const loadButton = h("button", {}, "Load run");
  const epsInput = h("input", { type: "number", value: "1.6", step: "0.1" });
  const minPtsInput = h("input", { type: "number", value: "5", min: "1" });
  const reclusterButton = h("button", { disabled: true }, "Re-cluster");
  const counter = h("span", { class: "counter" }, "–");
  const canvas = h("canvas", { width: "760", height: "520" });
  const legend = h("div", { class: "legend" });
  const hover = h("div", { class: "hover-text" });
  const status = h("div", { class: "status" });

  let payload: PointsResponse | null = null;
  let transform: Transform | null = null;

  function repaint() {
    if (!payload) return;
    transform = paintScatter(canvas, payload);
    const model = scatterModel(payload);
    counter.textContent =
      `corpus candidates: ${model.candidateCount}`;
    clear(legend);
    for (const entry of model.legend) {
      legend.append(h("button", {
        class: "legend-entry" + (entry.excluded ? " excluded" : ""),
        style: `--swatch:${entry.color}`,
        onclick: () => toggleExcluded(entry.label, !entry.excluded),
      }, `${entry.name} (${entry.size})` + (entry.excluded ? " [excluded]" : "")));
    }
    reclusterButton.disabled = false;
  }

  async function reload() {
    clear(status);
    try {
      payload = await api.points(runInput.value);
      repaint();
    } catch (err) {
      status.append(errorBanner(String(err)));
    }
  }

  async function toggleExcluded(label: number, excluded: boolean) {
    if (!payload) return;
    clear(status);
    try {
      await api.exclude(payload.run_id, [label], excluded);
      await reload();
    } catch (err) {
      status.append(errorBanner(String(err)));
    }
  }

  loadButton.addEventListener("click", reload);

  reclusterButton.addEventListener("click", async () => {
    if (!payload) return;
    clear(status);
    try {
      await api.cluster(payload.run_id, Number(epsInput.value),
                        Number(minPtsInput.value));
      await reload();  // repaint from fresh API state, nothing client-side
    } catch (err) {
      // failed re-cluster leaves the previous paint intact
      status.append(errorBanner(String(err)));
    }
  });

  canvas.addEventListener("click", (event) => {
    if (!payload || !transform) return;
    const rect = canvas.getBoundingClientRect();
    const pixel: [number, number] =
      [event.clientX - rect.left, event.clientY - rect.top];
    const centroids = clusterCentroids(payload.points, transform);
    const label = hitTestCluster(pixel, centroids, HIT_RADIUS_PX);
    if (label === null || label < 0) return;
    const currentlyExcluded = payload.excluded_labels.includes(label);
    toggleExcluded(label, !currentlyExcluded);
  });

  canvas.addEventListener("mousemove", (event) => {
    if (!payload || !transform) return;
    const rect = canvas.getBoundingClientRect();
    const hit = hitTestPoint(
      [event.clientX - rect.left, event.clientY - rect.top],
      payload.points, transform, HOVER_RADIUS_PX);
    hover.textContent = hit ? hit.text : "";
  });

  root.append(h("section", {},
    h("h2", {}, "Embedding map"),
    h("div", { class: "row" },
      h("label", {}, "Run ", runInput), loadButton,
      h("label", {}, "eps ", epsInput),
      h("label", {}, "min_pts ", minPtsInput),
      reclusterButton,
      counter),
    status,
    h("div", { class: "map-layout" }, canvas, legend),
    hover));
}
