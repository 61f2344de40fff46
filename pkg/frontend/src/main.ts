/** Application wiring: canvas, tau slider, class picker, lasso, tooltip. */

import { ApiError, SalpClient } from "./api.js";
import { Quadtree, XY } from "./geometry.js";
import {
  acceptSnapshot, applySelection, emptyModel, lassoSelect, stageAssignments,
  ViewModel,
} from "./model.js";
import { buildIndex, fitTransform, render, toScreen, Transform } from "./scatterplot.js";
import type { PointView } from "./types.js";

const client = new SalpClient("");
let model: ViewModel = emptyModel();
let transform: Transform = { scale: 1, offsetX: 0, offsetY: 0 };
let index: Quadtree<PointView> | null = null;
let lassoPath: XY[] = [];
let lassoActive = false;

const canvas = document.getElementById("plot") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const tauSlider = document.getElementById("tau") as HTMLInputElement;
const tauValue = document.getElementById("tau-value")!;
const countsBox = document.getElementById("counts")!;
const classPicker = document.getElementById("classes")!;
const colorMode = document.getElementById("color-mode") as HTMLSelectElement;
const assignButton = document.getElementById("assign") as HTMLButtonElement;
const undoButton = document.getElementById("undo") as HTMLButtonElement;
const finalizeButton = document.getElementById("finalize") as HTMLButtonElement;
const toast = document.getElementById("toast")!;
const badge = document.getElementById("badge")!;
const tooltip = document.getElementById("tooltip")!;
const reportBox = document.getElementById("report")!;

function showToast(message: string): void {
  toast.textContent = message;
  toast.classList.add("visible");
  setTimeout(() => toast.classList.remove("visible"), 4000);
}

function redraw(): void {
  if (!model.snapshot) return;
  render(ctx, model.snapshot.points, model.snapshot.classes, model.colorMode,
         transform, model.selection, lassoPath, canvas.width, canvas.height);
}

function renderCounts(): void {
  const snapshot = model.snapshot;
  if (!snapshot) return;
  const c = snapshot.counts;
  countsBox.textContent =
    `S ${c.supervised} | auto ${c.auto} | manual ${c.manual} | ` +
    `residue ${c.residue} | selected ${model.selection.size}`;
  tauValue.textContent = snapshot.tau.toFixed(2);
  tauSlider.value = String(snapshot.tau);
  const finalized = snapshot.status === "finalized";
  for (const button of [assignButton, undoButton, finalizeButton]) {
    button.disabled = finalized;
  }
  tauSlider.disabled = finalized;
}

function renderClasses(): void {
  const snapshot = model.snapshot;
  if (!snapshot) return;
  classPicker.innerHTML = "";
  for (const cls of snapshot.classes) {
    const chip = document.createElement("button");
    chip.className = "chip" + (cls.id === model.activeClass ? " active" : "");
    chip.style.setProperty("--chip-color", cls.color);
    chip.textContent = cls.name;
    chip.onclick = () => {
      model = { ...model, activeClass: cls.id };
      renderClasses();
    };
    classPicker.appendChild(chip);
  }
}

async function refresh(): Promise<void> {
  const snapshot = await client.getSession();
  model = acceptSnapshot(model, snapshot);
  transform = fitTransform(snapshot.points, canvas.width, canvas.height);
  index = buildIndex(snapshot.points, transform, canvas.width, canvas.height);
  renderCounts();
  renderClasses();
  redraw();
}

// -- tau slider (debounced; counts always reflect the last server response) --

let tauTimer: number | undefined;
tauSlider.addEventListener("input", () => {
  tauValue.textContent = Number(tauSlider.value).toFixed(2);
  window.clearTimeout(tauTimer);
  tauTimer = window.setTimeout(async () => {
    try {
      const response = await client.setThreshold(Number(tauSlider.value));
      if (response.evicted.length > 0) {
        showToast(`${response.evicted.length} manual label(s) absorbed by the auto set`);
      }
      await refresh();
    } catch (error) {
      showToast(error instanceof ApiError ? error.message : String(error));
    }
  }, 150);
});

colorMode.addEventListener("change", () => {
  model = { ...model, colorMode: colorMode.value as ViewModel["colorMode"] };
  redraw();
});

// -- lasso selection ---------------------------------------------------------

function canvasPoint(event: MouseEvent): XY {
  const rect = canvas.getBoundingClientRect();
  return { x: event.clientX - rect.left, y: event.clientY - rect.top };
}

canvas.addEventListener("mousedown", (event) => {
  if (!model.snapshot || model.snapshot.status === "finalized") return;
  lassoActive = true;
  lassoPath = [canvasPoint(event)];
});

canvas.addEventListener("mousemove", (event) => {
  if (lassoActive) {
    lassoPath.push(canvasPoint(event));
    redraw();
    return;
  }
  handleHover(event);
});

canvas.addEventListener("mouseup", (event) => {
  if (!lassoActive || !model.snapshot) return;
  lassoActive = false;
  // run the polygon test in data space by projecting points to screen space
  const screenPoints = model.snapshot.points.map((p) => {
    const s = toScreen(p, transform);
    return { ...p, x: s.x, y: s.y };
  });
  const result = lassoSelect(screenPoints, lassoPath);
  model = applySelection(model, result, event.shiftKey);
  badge.textContent = result.excluded > 0
    ? `${result.excluded} already-labeled point(s) skipped`
    : "";
  lassoPath = [];
  renderCounts();
  redraw();
});

// -- tooltip with cached thumbnails -------------------------------------------

const thumbnailCache = new Map<number, string | null>();

async function thumbnailFor(id: number): Promise<string | null> {
  if (thumbnailCache.has(id)) return thumbnailCache.get(id)!;
  let url: string | null = null;
  if (model.snapshot?.thumbnails) {
    const response = await fetch(client.thumbnailUrl(id));
    if (response.ok) {
      url = URL.createObjectURL(await response.blob());
    }
  }
  thumbnailCache.set(id, url);
  return url;
}

async function handleHover(event: MouseEvent): Promise<void> {
  if (!index) return;
  const at = canvasPoint(event);
  const point = index.nearest(at.x, at.y, 8);
  if (!point) {
    tooltip.classList.remove("visible");
    return;
  }
  const conf = point.confidence === null ? "" : `, c = ${point.confidence.toFixed(2)}`;
  const label = point.label === null ? "unlabeled" : `label ${point.label}`;
  let html = `<div>#${point.id}: ${point.state}, ${label}${conf}</div>`;
  const thumb = await thumbnailFor(point.id);
  if (thumb) {
    html = `<img src="${thumb}" alt="sample ${point.id}">` + html;
  }
  tooltip.innerHTML = html;
  tooltip.style.left = `${event.clientX + 14}px`;
  tooltip.style.top = `${event.clientY + 14}px`;
  tooltip.classList.add("visible");
}

canvas.addEventListener("mouseleave", () => tooltip.classList.remove("visible"));

// -- mutations ----------------------------------------------------------------

assignButton.addEventListener("click", async () => {
  const batch = stageAssignments(model);
  if (batch.length === 0) {
    showToast("nothing selected");
    return;
  }
  model = { ...model, pending: batch };
  try {
    await client.postLabels(batch);
    await refresh();   // drains pending, recolors acked points
  } catch (error) {
    // selection is kept so the user can retry
    model = { ...model, pending: [] };
    showToast(error instanceof ApiError ? error.message : String(error));
  }
});

undoButton.addEventListener("click", async () => {
  try {
    await client.undo();
    await refresh();
  } catch (error) {
    showToast(error instanceof ApiError ? error.message : String(error));
  }
});

finalizeButton.addEventListener("click", async () => {
  try {
    const report = await client.finalize();
    const acc = report.propagation_accuracy === null
      ? "-" : report.propagation_accuracy.toFixed(4);
    reportBox.textContent =
      `finalized: kappa ${report.kappa.toFixed(4)}, propagation accuracy ${acc} ` +
      `(|S| ${report.counts.supervised}, auto ${report.counts.auto}, ` +
      `manual ${report.counts.manual}, |T| ${report.counts.test})`;
    await refresh();
  } catch (error) {
    showToast(error instanceof ApiError ? error.message : String(error));
  }
});

refresh().catch((error) => showToast(`failed to load session: ${error}`));
