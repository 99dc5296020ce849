/**
 * Browser wiring: site input form, mode toolbar, canvas rendering of the
 * satellite image with grid/prompt/polygon overlays, and a console panel
 * echoing background job logs. All geometry comes from the server via the
 * session modules; this file only draws and forwards events.
 */

import { ApiError, SiteApi } from "./api.js";
import { GridSelection } from "./gridSelect.js";
import { PointMarking } from "./pointMark.js";
import { QualityCheckEditor } from "./qualityCheck.js";
import { UiSession } from "./session.js";
import { rectPolygon } from "./shapes.js";
import { CELL_SIZE, GRID_CELLS, IMAGE_SIZE, type ElementKind } from "./types.js";
import { Viewport } from "./viewport.js";

const api = new SiteApi("");

const state = {
  session: null as UiSession | null,
  grid: new GridSelection(),
  points: null as PointMarking | null,
  qc: null as QualityCheckEditor | null,
  image: null as HTMLImageElement | null,
  viewport: null as Viewport | null,
  drawTool: "rect" as "rect" | "select",
  drawType: "subspace" as ElementKind,
  dragStart: null as [number, number] | null,
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function log(line: string): void {
  const consoleBox = el<HTMLPreElement>("console");
  consoleBox.textContent += line + "\n";
  consoleBox.scrollTop = consoleBox.scrollHeight;
}

function canvas(): HTMLCanvasElement {
  return el<HTMLCanvasElement>("canvas");
}

function redraw(): void {
  const cv = canvas();
  const ctx = cv.getContext("2d");
  const vp = state.viewport;
  if (!ctx || !vp) return;
  ctx.clearRect(0, 0, cv.width, cv.height);
  if (state.image) {
    ctx.save();
    ctx.setTransform(vp.scale, 0, 0, vp.scale, vp.offsetX, vp.offsetY);
    ctx.drawImage(state.image, 0, 0);
    ctx.restore();
  }
  const mode = state.session?.mode;
  if (mode === "grid_select" || mode === "point_mark") drawGrid(ctx, vp);
  if (mode === "point_mark") drawPoints(ctx, vp);
  if (mode === "quality_check") drawElements(ctx, vp);
}

function drawGrid(ctx: CanvasRenderingContext2D, vp: Viewport): void {
  ctx.strokeStyle = "rgba(255,255,255,0.6)";
  ctx.lineWidth = 1;
  for (let i = 0; i <= GRID_CELLS; i++) {
    const [x0, y0] = vp.imageToScreen(i * CELL_SIZE, 0);
    const [x1, y1] = vp.imageToScreen(i * CELL_SIZE, IMAGE_SIZE);
    ctx.beginPath();
    ctx.moveTo(x0, y0);
    ctx.lineTo(x1, y1);
    ctx.stroke();
    const [hx0, hy0] = vp.imageToScreen(0, i * CELL_SIZE);
    const [hx1, hy1] = vp.imageToScreen(IMAGE_SIZE, i * CELL_SIZE);
    ctx.beginPath();
    ctx.moveTo(hx0, hy0);
    ctx.lineTo(hx1, hy1);
    ctx.stroke();
  }
  ctx.fillStyle = "rgba(80, 220, 100, 0.25)";
  for (let r = 0; r < GRID_CELLS; r++) {
    for (let c = 0; c < GRID_CELLS; c++) {
      if (!state.grid.isSelected(r, c)) continue;
      const [sx, sy] = vp.imageToScreen(c * CELL_SIZE, r * CELL_SIZE);
      ctx.fillRect(sx, sy, CELL_SIZE * vp.scale, CELL_SIZE * vp.scale);
    }
  }
}

function drawPoints(ctx: CanvasRenderingContext2D, vp: Viewport): void {
  if (!state.points) return;
  ctx.fillStyle = "red";
  for (const box of state.grid.draftBoxes()) {
    for (const p of state.points.pointsIn(box)) {
      const [sx, sy] = vp.imageToScreen(p.x, p.y);
      ctx.beginPath();
      ctx.arc(sx, sy, 4, 0, 2 * Math.PI);
      ctx.fill();
    }
  }
}

const TYPE_COLORS: Record<string, string> = {
  site_bounds: "#f5f5f5",
  perimeter: "#58a6ff",
  subspace: "#7ee787",
  exclusion_zone: "#ff7b72",
  linear_constraint: "#ffa657",
};

function drawElements(ctx: CanvasRenderingContext2D, vp: Viewport): void {
  if (!state.qc) return;
  for (const e of state.qc.list()) {
    ctx.strokeStyle = TYPE_COLORS[e.type] ?? "white";
    ctx.lineWidth = state.qc.selection.has(e.id) ? 3 : 1.5;
    ctx.beginPath();
    e.vertices.forEach(([x, y], i) => {
      const [sx, sy] = vp.imageToScreen(x, y);
      if (i === 0) ctx.moveTo(sx, sy);
      else ctx.lineTo(sx, sy);
    });
    ctx.closePath();
    ctx.stroke();
  }
}

async function createSite(): Promise<void> {
  const name = el<HTMLInputElement>("site-name").value;
  const lat = parseFloat(el<HTMLInputElement>("lat").value);
  const lon = parseFloat(el<HTMLInputElement>("lon").value);
  const zoom = parseInt(el<HTMLInputElement>("zoom").value, 10);
  log(`extracting satellite image for ${name} (${lat}, ${lon}) zoom ${zoom}...`);
  try {
    const { site, job } = await api.createSite({ name, lat, lon, zoom });
    job.message.forEach(log);
    state.session = new UiSession(site.id);
    state.grid = new GridSelection();
    state.qc = new QualityCheckEditor(api, site.id);
    await loadImage(site.id);
    redraw();
  } catch (err) {
    log(`error: ${err instanceof ApiError ? err.message : err}`);
  }
}

function loadImage(siteId: string): Promise<void> {
  return new Promise((resolve, reject) => {
    const img = new Image();
    img.onload = () => {
      state.image = img;
      const cv = canvas();
      state.viewport = new Viewport(cv.width, cv.height);
      state.viewport.fit(IMAGE_SIZE);
      resolve();
    };
    img.onerror = reject;
    img.src = api.imageUrl(siteId);
  });
}

async function savePrompts(): Promise<void> {
  const s = state.session;
  if (!s || !state.points) return;
  if (!state.points.canSave()) {
    log("every box needs at least one point before saving");
    return;
  }
  const violations = await api.putPrompts(s.siteId, state.points.body());
  if (violations.length) violations.forEach((v) => log(`violation: ${v}`));
  else {
    log("prompts saved");
    s.markSaved();
  }
}

async function runExtract(): Promise<void> {
  const s = state.session;
  if (!s || !state.qc) return;
  log("invoking the segmentation backend...");
  try {
    const { job } = await api.extract(s.siteId);
    job.message.forEach(log);
    await state.qc.load();
    s.enter("quality_check");
    redraw();
  } catch (err) {
    log(`error: ${err instanceof ApiError ? err.message : err}`);
  }
}

function onCanvasClick(ev: MouseEvent): void {
  const vp = state.viewport;
  const s = state.session;
  if (!vp || !s) return;
  const rect = canvas().getBoundingClientRect();
  const [ix, iy] = vp.screenToImage(ev.clientX - rect.left, ev.clientY - rect.top);
  if (s.mode === "grid_select") {
    state.grid.toggleAtPixel(ix, iy);
    s.markDirty();
  } else if (s.mode === "point_mark" && state.points) {
    const res = state.points.click(ix, iy);
    if (!res.accepted) log(res.reason);
    else s.markDirty();
  } else if (s.mode === "quality_check" && state.qc) {
    if (state.drawTool === "rect") {
      if (!state.dragStart) {
        state.dragStart = [ix, iy];
        return;
      }
      const [x0, y0] = state.dragStart;
      state.dragStart = null;
      state.qc
        .create(state.drawType, rectPolygon(x0, y0, ix, iy))
        .then(() => redraw())
        .catch((err) => log(`error: ${err.message}`));
    }
  }
  redraw();
}

function wire(): void {
  el<HTMLButtonElement>("btn-extract-image").onclick = createSite;
  el<HTMLButtonElement>("btn-to-points").onclick = () => {
    const s = state.session;
    if (!s) return;
    if (!state.grid.canSave()) {
      log("select at least one box first");
      return;
    }
    state.points = new PointMarking(state.grid.draftBoxes());
    s.enter("point_mark");
    redraw();
  };
  el<HTMLButtonElement>("btn-save-prompts").onclick = savePrompts;
  el<HTMLButtonElement>("btn-extract").onclick = runExtract;
  el<HTMLButtonElement>("btn-export").onclick = async () => {
    if (!state.qc) return;
    try {
      const { files } = await state.qc.export();
      Object.entries(files).forEach(([name, hash]) => log(`${name} sha256=${hash}`));
    } catch (err) {
      log(`error: ${err instanceof ApiError ? err.message : err}`);
    }
  };
  document.addEventListener("keydown", (ev) => {
    if (ev.key === "Escape") state.points?.cancel();
  });
  canvas().addEventListener("click", onCanvasClick);
  canvas().addEventListener("wheel", (ev) => {
    ev.preventDefault();
    const vp = state.viewport;
    if (!vp) return;
    const rect = canvas().getBoundingClientRect();
    vp.zoomAt(ev.clientX - rect.left, ev.clientY - rect.top, ev.deltaY < 0 ? 1.2 : 1 / 1.2);
    redraw();
  });
}

if (typeof document !== "undefined") {
  wire();
}
