/** Canvas scatterplot: residue drawn first (beneath), then auto, manual, and
 * supervised points; optional confidence coloring; lasso overlay. */

import { confidenceColor, RESIDUE_COLOR, SUPERVISED_BORDER, tint } from "./colors.js";
import { Quadtree, XY } from "./geometry.js";
import type { ColorMode } from "./model.js";
import type { ClassInfo, PointView } from "./types.js";

const POINT_RADIUS = 3.5;
const SUPERVISED_RADIUS = 4.5;
const MARGIN = 24;

export interface Transform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export function fitTransform(points: PointView[], width: number, height: number): Transform {
  if (points.length === 0) return { scale: 1, offsetX: 0, offsetY: 0 };
  let minX = Infinity, maxX = -Infinity, minY = Infinity, maxY = -Infinity;
  for (const p of points) {
    minX = Math.min(minX, p.x);
    maxX = Math.max(maxX, p.x);
    minY = Math.min(minY, p.y);
    maxY = Math.max(maxY, p.y);
  }
  const spanX = Math.max(maxX - minX, 1e-9);
  const spanY = Math.max(maxY - minY, 1e-9);
  const scale = Math.min((width - 2 * MARGIN) / spanX, (height - 2 * MARGIN) / spanY);
  return {
    scale,
    offsetX: MARGIN - minX * scale + (width - 2 * MARGIN - spanX * scale) / 2,
    offsetY: MARGIN - minY * scale + (height - 2 * MARGIN - spanY * scale) / 2,
  };
}

export function toScreen(point: XY, t: Transform): XY {
  return { x: point.x * t.scale + t.offsetX, y: point.y * t.scale + t.offsetY };
}

export function buildIndex(points: PointView[], t: Transform,
                           width: number, height: number): Quadtree<PointView> {
  const tree = new Quadtree<PointView>(0, 0, width, height);
  for (const p of points) {
    const s = toScreen(p, t);
    tree.insert(s.x, s.y, p);
  }
  return tree;
}

function fillColor(point: PointView, classes: ClassInfo[], mode: ColorMode): string {
  const classColor = (label: number | null): string =>
    label === null ? RESIDUE_COLOR : classes[label]?.color ?? RESIDUE_COLOR;
  if (mode === "by-confidence" && point.state !== "supervised") {
    return point.confidence === null ? RESIDUE_COLOR : confidenceColor(point.confidence);
  }
  switch (point.state) {
    case "supervised":
      return classColor(point.label);
    case "manual":
      return classColor(point.label);
    case "auto":
      return tint(classColor(point.label), 0.55);
    default:
      return RESIDUE_COLOR;
  }
}

export function render(
  ctx: CanvasRenderingContext2D,
  points: PointView[],
  classes: ClassInfo[],
  mode: ColorMode,
  transform: Transform,
  selection: Set<number>,
  lassoPath: XY[],
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  const layers: Record<string, PointView[]> = {
    unlabeled: [], auto: [], manual: [], supervised: [],
  };
  for (const p of points) layers[p.state].push(p);

  for (const state of ["unlabeled", "auto", "manual", "supervised"] as const) {
    for (const p of layers[state]) {
      const s = toScreen(p, transform);
      const radius = state === "supervised" ? SUPERVISED_RADIUS : POINT_RADIUS;
      ctx.beginPath();
      ctx.arc(s.x, s.y, radius, 0, Math.PI * 2);
      ctx.fillStyle = fillColor(p, classes, mode);
      ctx.fill();
      if (state === "supervised") {
        ctx.lineWidth = 1.8;
        ctx.strokeStyle = SUPERVISED_BORDER;
        ctx.stroke();
      }
      if (selection.has(p.id)) {
        ctx.lineWidth = 1.5;
        ctx.strokeStyle = "#00bcd4";
        ctx.beginPath();
        ctx.arc(s.x, s.y, radius + 2.5, 0, Math.PI * 2);
        ctx.stroke();
      }
    }
  }

  if (lassoPath.length > 1) {
    ctx.beginPath();
    ctx.moveTo(lassoPath[0].x, lassoPath[0].y);
    for (const vertex of lassoPath.slice(1)) ctx.lineTo(vertex.x, vertex.y);
    ctx.closePath();
    ctx.strokeStyle = "#00bcd4";
    ctx.lineWidth = 1.2;
    ctx.setLineDash([5, 4]);
    ctx.stroke();
    ctx.setLineDash([]);
    ctx.fillStyle = "rgba(0, 188, 212, 0.08)";
    ctx.fill();
  }
}
