/** Client view model and its pure update logic.
 *
 * The server is the single source of truth: the model only caches the latest
 * snapshot plus transient client-side state (selection, pending batch, color
 * mode). Nothing is recolored locally without a server acknowledgment; every
 * ack is followed by a snapshot refresh.
 */

import { pointInPolygon, XY } from "./geometry.js";
import type { Assignment, PointView, SessionSnapshot } from "./types.js";

export type ColorMode = "by-label" | "by-confidence";

export interface ViewModel {
  snapshot: SessionSnapshot | null;
  colorMode: ColorMode;
  selection: Set<number>;
  activeClass: number;
  pending: Assignment[];
  lastError: string | null;
}

export function emptyModel(): ViewModel {
  return {
    snapshot: null,
    colorMode: "by-label",
    selection: new Set(),
    activeClass: 0,
    pending: [],
    lastError: null,
  };
}

export function isSelectable(point: PointView): boolean {
  return point.state === "unlabeled" || point.state === "manual";
}

export interface LassoResult {
  selected: number[];
  excluded: number;
}

/** Residue points strictly inside the polygon; auto/supervised points inside
 * are counted for the exclusion badge instead of being selected. */
export function lassoSelect(points: PointView[], polygon: XY[]): LassoResult {
  if (polygon.length < 3) {
    return { selected: [], excluded: 0 };
  }
  const selected: number[] = [];
  let excluded = 0;
  for (const point of points) {
    if (!pointInPolygon(point, polygon)) continue;
    if (isSelectable(point)) {
      selected.push(point.id);
    } else {
      excluded += 1;
    }
  }
  return { selected, excluded };
}

/** Replace or (with the modifier held) extend the current selection. */
export function applySelection(
  model: ViewModel,
  result: LassoResult,
  additive: boolean,
): ViewModel {
  const selection = additive ? new Set(model.selection) : new Set<number>();
  for (const id of result.selected) selection.add(id);
  return { ...model, selection };
}

/** Build the atomic batch for the active class from the current selection. */
export function stageAssignments(model: ViewModel): Assignment[] {
  return [...model.selection]
    .sort((a, b) => a - b)
    .map((id) => ({ id, label: model.activeClass }));
}

/** A fresh snapshot arrived: drop stale selection entries and drain pending. */
export function acceptSnapshot(model: ViewModel, snapshot: SessionSnapshot): ViewModel {
  const selectable = new Set(
    snapshot.points.filter(isSelectable).map((point) => point.id),
  );
  const selection = new Set([...model.selection].filter((id) => selectable.has(id)));
  return { ...model, snapshot, selection, pending: [], lastError: null };
}

export function pointById(model: ViewModel, id: number): PointView | undefined {
  return model.snapshot?.points.find((point) => point.id === id);
}
