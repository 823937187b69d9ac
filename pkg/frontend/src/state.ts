/**
 * Session view-model: chain, drawing buffer, allocation overlay.
 *
 * Invariants the tests pin down:
 *  - view state derives from server responses plus the local drawing buffer;
 *  - one mutation in flight at a time (submit disabled while pending);
 *  - what-if allocation overlays are ephemeral and clear on any chain change.
 */

import type { AllocationResponse, SnapshotSummary } from "./api.js";
import type { LatLon } from "./geometry.js";

export type DrawMode = "none" | "sweep" | "trackline";

export interface ViewState {
  sessionId: string | null;
  chain: SnapshotSummary[];
  activeSnapshot: number;
  drawMode: DrawMode;
  buffer: LatLon[];
  finishedLines: LatLon[][];
  allocation: AllocationResponse | null;
  pending: boolean;
  error: string | null;
}

export function initialState(): ViewState {
  return {
    sessionId: null,
    chain: [],
    activeSnapshot: 0,
    drawMode: "none",
    buffer: [],
    finishedLines: [],
    allocation: null,
    pending: false,
    error: null,
  };
}

export function canSubmit(state: ViewState): boolean {
  return state.sessionId !== null && !state.pending;
}

export function beginMutation(state: ViewState): ViewState {
  if (state.pending) throw new Error("a mutation is already in flight");
  return { ...state, pending: true, error: null };
}

export function failMutation(state: ViewState, error: string): ViewState {
  return { ...state, pending: false, error };
}

/** Any chain change lands here: allocation overlays are stale by definition. */
export function applyChain(state: ViewState, chain: SnapshotSummary[]): ViewState {
  return {
    ...state,
    chain,
    activeSnapshot: chain.length - 1,
    allocation: null,
    pending: false,
    error: null,
    buffer: [],
    finishedLines: [],
  };
}

export function selectSnapshot(state: ViewState, index: number): ViewState {
  if (index < 0 || index >= state.chain.length) {
    throw new Error(`no snapshot ${index}`);
  }
  return { ...state, activeSnapshot: index };
}

export function setDrawMode(state: ViewState, mode: DrawMode): ViewState {
  return { ...state, drawMode: mode, buffer: [], finishedLines: [] };
}

export function addVertex(state: ViewState, p: LatLon): ViewState {
  if (state.drawMode === "none") return state;
  return { ...state, buffer: [...state.buffer, p] };
}

export function finishLine(state: ViewState): ViewState {
  if (state.drawMode !== "trackline" || state.buffer.length < 2) return state;
  return { ...state, finishedLines: [...state.finishedLines, state.buffer], buffer: [] };
}

export function applyAllocation(state: ViewState, alloc: AllocationResponse): ViewState {
  return { ...state, allocation: alloc, pending: false, error: null };
}

export function chainLabels(state: ViewState): string[] {
  return state.chain.map((c) => c.label);
}
