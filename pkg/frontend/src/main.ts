/**
 * Planning console entry point: wires the DOM to the API client and the
 * pure view-model. All probabilities displayed are server-computed.
 */

import { ApiError, PlanningClient } from "./api.js";
import type { GridResponse } from "./api.js";
import {
  canvasToLatLon,
  polygonGeoJson,
  projectToCanvas,
  tracklinesGeoJson,
  validateBudget,
  validatePolygon,
  validateTrackline,
  type Viewport,
} from "./geometry.js";
import { grayToRgba, gridToGray, legendStops } from "./render.js";
import {
  addVertex,
  applyAllocation,
  applyChain,
  beginMutation,
  canSubmit,
  failMutation,
  finishLine,
  initialState,
  selectSnapshot,
  setDrawMode,
  type ViewState,
} from "./state.js";

const API_BASE = (window as { DRIFTSEARCH_API?: string }).DRIFTSEARCH_API ?? "";
const client = new PlanningClient(API_BASE);

let state: ViewState = initialState();
let grid: GridResponse | null = null;
let disk: { center_lat: number; center_lon: number; radius_m: number } | null = null;

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const canvas = $("map") as unknown as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;

function viewport(): Viewport {
  const g = grid;
  const spanM = g ? g.extent_m[2] - g.extent_m[0] : 160_000;
  return {
    origin: g ? g.origin : { lat: 0, lon: 0 },
    spanM,
    widthPx: canvas.width,
    heightPx: canvas.height,
  };
}

function setState(next: ViewState): void {
  state = next;
  redraw();
}

function showError(message: string | null): void {
  const box = $("error");
  box.textContent = message ?? "";
  box.style.display = message ? "block" : "none";
}

async function refreshGrid(): Promise<void> {
  if (!state.sessionId) return;
  grid = await client.grid(state.sessionId, state.activeSnapshot);
}

function redraw(): void {
  showError(state.error);
  $("submit-sweep").toggleAttribute("disabled", !canSubmit(state));
  $("submit-acoustic").toggleAttribute("disabled", !canSubmit(state));
  $("undo").toggleAttribute("disabled", !canSubmit(state) || state.chain.length < 2);
  drawChain();
  drawMap();
  drawLegend();
  drawAllocationReadout();
}

function drawMap(): void {
  ctx.fillStyle = "#ffffff";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  if (!grid) return;
  const gray = gridToGray(grid);
  const img = new ImageData(grid.nx, grid.ny);
  img.data.set(grayToRgba(gray));
  // draw the grid raster scaled to the canvas through an offscreen canvas
  const off = document.createElement("canvas");
  off.width = grid.nx;
  off.height = grid.ny;
  off.getContext("2d")!.putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(off, 0, 0, canvas.width, canvas.height);
  const vp = viewport();
  // containment circle and loss-point marker (server-supplied geometry)
  if (disk) {
    const centerPx = projectToCanvas({ lat: disk.center_lat, lon: disk.center_lon }, vp);
    const radiusPx = (disk.radius_m / vp.spanM) * canvas.width;
    ctx.strokeStyle = "#0f766e";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ctx.arc(centerPx.x, centerPx.y, radiusPx, 0, 2 * Math.PI);
    ctx.stroke();
    ctx.fillStyle = "#b91c1c";
    ctx.beginPath();
    ctx.arc(centerPx.x, centerPx.y, 3, 0, 2 * Math.PI);
    ctx.fill();
  }
  drawBuffer(vp);
  drawAllocationOverlay(vp);
}

function drawBuffer(vp: Viewport): void {
  const paths = [...state.finishedLines, state.buffer].filter((p) => p.length > 0);
  ctx.strokeStyle = state.drawMode === "sweep" ? "#b45309" : "#1d4ed8";
  ctx.lineWidth = 2;
  for (const path of paths) {
    ctx.beginPath();
    path.forEach((p, i) => {
      const { x, y } = projectToCanvas(p, vp);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    if (state.drawMode === "sweep" && path === state.buffer && path.length > 2) {
      const first = projectToCanvas(path[0]!, vp);
      ctx.lineTo(first.x, first.y);
    }
    ctx.stroke();
  }
}

function drawAllocationOverlay(vp: Viewport): void {
  if (!state.allocation) return;
  const alloc = state.allocation;
  const maxEffort = Math.max(...alloc.cells.map((c) => c.effort_hours), 1e-12);
  const cellPx = (alloc.cell_size_m / vp.spanM) * canvas.width;
  for (const cell of alloc.cells) {
    const { x, y } = projectToCanvas({ lat: cell.lat, lon: cell.lon }, vp);
    const intensity = cell.effort_hours / maxEffort;
    ctx.fillStyle = `rgba(15, 118, 110, ${0.15 + 0.5 * intensity})`;
    ctx.fillRect(x - cellPx / 2, y - cellPx / 2, cellPx, cellPx);
  }
}

function drawChain(): void {
  const list = $("chain");
  list.innerHTML = "";
  state.chain.forEach((snap, i) => {
    const li = document.createElement("li");
    const active = i === state.activeSnapshot ? " (shown)" : "";
    li.textContent =
      `${snap.index}: ${snap.label}${active} — ess ${snap.effective_sample_size.toFixed(0)}, ` +
      `peak cell p ${snap.top_cell.probability.toExponential(2)}`;
    li.onclick = () => {
      void (async () => {
        setState(selectSnapshot(state, i));
        await refreshGrid();
        redraw();
      })();
    };
    list.appendChild(li);
  });
}

function drawLegend(): void {
  const el = $("legend");
  if (!grid) {
    el.textContent = "";
    return;
  }
  const stops = legendStops(grid.max_value)
    .map((s) => `${s.value.toExponential(1)}→${s.gray}`)
    .join("  ");
  el.textContent = `cell probability → gray: ${stops}; off-grid mass ${grid.off_extent_mass.toExponential(2)}`;
}

function drawAllocationReadout(): void {
  const el = $("allocation-readout");
  if (!state.allocation) {
    el.textContent = "";
    return;
  }
  const a = state.allocation;
  el.textContent =
    `allocation: P(detect) = ${a.achieved_detection_probability.toFixed(4)} ` +
    `spending ${a.spent_hours.toFixed(1)} of ${a.budget_hours} h over ${a.cells.length} cells`;
}

async function mutateChain(fn: () => Promise<unknown>): Promise<void> {
  try {
    setState(beginMutation(state));
    await fn();
    const chain = await client.chain(state.sessionId!);
    setState(applyChain(state, chain.chain));
    await refreshGrid();
    redraw();
  } catch (err) {
    const msg = err instanceof ApiError ? err.detail : String(err);
    setState(failMutation(state, msg));
  }
}

function wireControls(): void {
  canvas.addEventListener("click", (ev) => {
    const rect = canvas.getBoundingClientRect();
    const x = ((ev.clientX - rect.left) / rect.width) * canvas.width;
    const y = ((ev.clientY - rect.top) / rect.height) * canvas.height;
    setState(addVertex(state, canvasToLatLon(x, y, viewport())));
  });
  $("mode-sweep").onclick = () => setState(setDrawMode(state, "sweep"));
  $("mode-trackline").onclick = () => setState(setDrawMode(state, "trackline"));
  $("finish-line").onclick = () => setState(finishLine(state));
  $("clear-drawing").onclick = () => setState(setDrawMode(state, state.drawMode));

  $("submit-sweep").onclick = () => {
    const check = validatePolygon(state.buffer);
    if (!check.ok) {
      setState(failMutation(state, check.error!));
      return;
    }
    const label = ($("label-input") as HTMLInputElement).value || `sweep-${state.chain.length}`;
    const p = parseFloat(($("p-inside") as HTMLInputElement).value || "0.9");
    const spec = {
      label,
      type: "sweep",
      regions: polygonGeoJson(state.buffer),
      p_inside: p,
    };
    void mutateChain(() => client.submitIncrement(state.sessionId!, spec));
  };

  $("submit-acoustic").onclick = () => {
    const lines = state.buffer.length >= 2 ? [...state.finishedLines, state.buffer] : state.finishedLines;
    if (lines.length === 0) {
      setState(failMutation(state, "draw at least one trackline"));
      return;
    }
    for (const line of lines) {
      const check = validateTrackline(line);
      if (!check.ok) {
        setState(failMutation(state, check.error!));
        return;
      }
    }
    const label = ($("label-input") as HTMLInputElement).value || `acoustic-${state.chain.length}`;
    const spec = {
      label,
      type: "acoustic",
      tracklines: tracklinesGeoJson(lines),
    };
    void mutateChain(() => client.submitIncrement(state.sessionId!, spec));
  };

  $("undo").onclick = () => {
    const target = state.chain.length - 2;
    void mutateChain(() => client.undo(state.sessionId!, target));
  };

  $("what-if").onclick = () => {
    const budget = parseFloat(($("budget") as HTMLInputElement).value);
    const check = validateBudget(budget);
    if (!check.ok) {
      setState(failMutation(state, check.error!));
      return;
    }
    void (async () => {
      try {
        const alloc = await client.allocation(state.sessionId!, budget);
        setState(applyAllocation(state, alloc));
      } catch (err) {
        const msg = err instanceof ApiError ? err.detail : String(err);
        setState(failMutation(state, msg));
      }
    })();
  };
}

async function boot(): Promise<void> {
  wireControls();
  try {
    const session = await client.createSession();
    disk = session.disk;
    state = applyChain({ ...state, sessionId: session.session_id }, session.chain);
    await refreshGrid();
    redraw();
  } catch (err) {
    // onboarding state: no server default config or server down
    showError(
      err instanceof ApiError
        ? `no session: ${err.detail}`
        : `planning service unreachable at ${API_BASE || "this origin"}`,
    );
  }
}

void boot();
