/**
 * Heatmap rendering math, kept pure so unit tests can pin it against the
 * server's raster convention: black = highest-probability cell, white = 0,
 * north at the top.
 */

import type { GridResponse } from "./api.js";

/** Server grayscale rule: round(255 * (1 - v / vmax)); all-white when empty. */
export function grayLevel(value: number, maxValue: number): number {
  if (maxValue <= 0) return 255;
  return Math.round(255 * (1 - value / maxValue));
}

/**
 * Grid JSON to an 8-bit grayscale raster, row 0 = northernmost.
 * Matches the server PNG/PGM pixel for pixel at the same grid.
 */
export function gridToGray(grid: Pick<GridResponse, "values" | "max_value">): Uint8Array {
  const rows = grid.values.length;
  const cols = rows > 0 ? grid.values[0]!.length : 0;
  const out = new Uint8Array(rows * cols);
  for (let j = 0; j < rows; j++) {
    const src = grid.values[rows - 1 - j]!; // grid rows are south->north
    for (let i = 0; i < cols; i++) {
      out[j * cols + i] = grayLevel(src[i]!, grid.max_value);
    }
  }
  return out;
}

/** Expand grayscale to RGBA for a canvas ImageData buffer. */
export function grayToRgba(gray: Uint8Array): Uint8ClampedArray {
  const out = new Uint8ClampedArray(gray.length * 4);
  for (let k = 0; k < gray.length; k++) {
    const g = gray[k]!;
    out[4 * k] = g;
    out[4 * k + 1] = g;
    out[4 * k + 2] = g;
    out[4 * k + 3] = 255;
  }
  return out;
}

/** Legend breakpoints: cell probability at a few gray levels. */
export function legendStops(maxValue: number, count = 5): { gray: number; value: number }[] {
  const stops = [];
  for (let k = 0; k < count; k++) {
    const frac = k / (count - 1);
    stops.push({ gray: grayLevel(frac * maxValue, maxValue), value: frac * maxValue });
  }
  return stops;
}

/** Parse a binary P5 PGM (the server's alternate raster) to gray bytes. */
export function parsePgm(data: Uint8Array): { width: number; height: number; gray: Uint8Array } {
  const text = new TextDecoder("latin1").decode(data);
  const m = /^P5\s+(\d+)\s+(\d+)\s+255\n/.exec(text);
  if (!m) throw new Error("not a P5 PGM with maxval 255");
  const width = parseInt(m[1]!, 10);
  const height = parseInt(m[2]!, 10);
  const offset = m[0]!.length;
  const gray = data.slice(offset, offset + width * height);
  if (gray.length !== width * height) throw new Error("truncated PGM raster");
  return { width, height, gray };
}
