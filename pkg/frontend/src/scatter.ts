/** Canvas scatter plot with nearest-centroid cluster hit testing. */

import type { PointsResponse, ScatterPoint } from "./types";
import { clusterColor } from "./viewmodel";

export interface Viewport {
  width: number;
  height: number;
  pad: number;
}

export interface Transform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export function fitTransform(points: ScatterPoint[], view: Viewport): Transform {
  if (points.length === 0) return { scale: 1, offsetX: 0, offsetY: 0 };
  let minX = Infinity, maxX = -Infinity, minY = Infinity, maxY = -Infinity;
  for (const p of points) {
    minX = Math.min(minX, p.x); maxX = Math.max(maxX, p.x);
    minY = Math.min(minY, p.y); maxY = Math.max(maxY, p.y);
  }
  const spanX = maxX - minX || 1;
  const spanY = maxY - minY || 1;
  const scale = Math.min((view.width - 2 * view.pad) / spanX,
                         (view.height - 2 * view.pad) / spanY);
  return {
    scale,
    offsetX: view.pad - minX * scale
      + ((view.width - 2 * view.pad) - spanX * scale) / 2,
    offsetY: view.pad - minY * scale
      + ((view.height - 2 * view.pad) - spanY * scale) / 2,
  };
}

export function toPixel(p: { x: number; y: number },
                        t: Transform): [number, number] {
  return [p.x * t.scale + t.offsetX, p.y * t.scale + t.offsetY];
}

/** Pixel-space centroids per cluster label (noise included as -1). */
export function clusterCentroids(points: ScatterPoint[],
                                 t: Transform): Map<number, [number, number]> {
  const sums = new Map<number, [number, number, number]>();
  for (const p of points) {
    const [px, py] = toPixel(p, t);
    const acc = sums.get(p.label) ?? [0, 0, 0];
    acc[0] += px; acc[1] += py; acc[2] += 1;
    sums.set(p.label, acc);
  }
  const centroids = new Map<number, [number, number]>();
  for (const [label, [sx, sy, n]] of sums) {
    centroids.set(label, [sx / n, sy / n]);
  }
  return centroids;
}

/** The cluster whose centroid is nearest the cursor, within radius px. */
export function hitTestCluster(pixel: [number, number],
                               centroids: Map<number, [number, number]>,
                               radius: number): number | null {
  let best: number | null = null;
  let bestDist = radius * radius;
  for (const [label, [cx, cy]] of centroids) {
    const d2 = (pixel[0] - cx) ** 2 + (pixel[1] - cy) ** 2;
    if (d2 <= bestDist) {
      best = label;
      bestDist = d2;
    }
  }
  return best;
}

/** The single point nearest the cursor, within radius px (for hover text). */
export function hitTestPoint(pixel: [number, number], points: ScatterPoint[],
                             t: Transform, radius: number): ScatterPoint | null {
  let best: ScatterPoint | null = null;
  let bestDist = radius * radius;
  for (const p of points) {
    const [px, py] = toPixel(p, t);
    const d2 = (pixel[0] - px) ** 2 + (pixel[1] - py) ** 2;
    if (d2 <= bestDist) {
      best = p;
      bestDist = d2;
    }
  }
  return best;
}

export function paintScatter(canvas: HTMLCanvasElement,
                             payload: PointsResponse): Transform {
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("canvas 2d context unavailable");
  const view = { width: canvas.width, height: canvas.height, pad: 14 };
  const t = fitTransform(payload.points, view);
  ctx.clearRect(0, 0, view.width, view.height);
  for (const p of payload.points) {
    const [px, py] = toPixel(p, t);
    ctx.beginPath();
    ctx.arc(px, py, 3, 0, Math.PI * 2);
    if (p.excluded) {
      // excluded clusters render hollow
      ctx.strokeStyle = clusterColor(p.label);
      ctx.lineWidth = 1.2;
      ctx.stroke();
    } else {
      ctx.fillStyle = clusterColor(p.label);
      ctx.fill();
    }
  }
  return t;
}
