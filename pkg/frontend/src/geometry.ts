/**
 * Drawing-buffer geometry: lat/lon <-> canvas transforms and the client-side
 * validation that mirrors the server's rules, so bad geometry is rejected
 * inline without a round trip.
 */

export interface LatLon {
  lat: number;
  lon: number;
}

export interface Viewport {
  /** frame origin (the containment-disk center) */
  origin: LatLon;
  /** meters shown across the canvas width */
  spanM: number;
  widthPx: number;
  heightPx: number;
}

const METERS_PER_DEG = (6371000 * Math.PI) / 180;

export function projectToCanvas(p: LatLon, vp: Viewport): { x: number; y: number } {
  const cos0 = Math.cos((vp.origin.lat * Math.PI) / 180);
  const mx = (p.lon - vp.origin.lon) * METERS_PER_DEG * cos0;
  const my = (p.lat - vp.origin.lat) * METERS_PER_DEG;
  const scale = vp.widthPx / vp.spanM;
  return {
    x: vp.widthPx / 2 + mx * scale,
    y: vp.heightPx / 2 - my * scale, // north up
  };
}

export function canvasToLatLon(x: number, y: number, vp: Viewport): LatLon {
  const cos0 = Math.cos((vp.origin.lat * Math.PI) / 180);
  const scale = vp.spanM / vp.widthPx;
  const mx = (x - vp.widthPx / 2) * scale;
  const my = (vp.heightPx / 2 - y) * scale;
  return {
    lat: vp.origin.lat + my / METERS_PER_DEG,
    lon: vp.origin.lon + mx / (METERS_PER_DEG * cos0),
  };
}

function orient(a: LatLon, b: LatLon, c: LatLon): number {
  return (b.lon - a.lon) * (c.lat - a.lat) - (b.lat - a.lat) * (c.lon - a.lon);
}

function segmentsIntersect(a: LatLon, b: LatLon, c: LatLon, d: LatLon): boolean {
  const d1 = orient(c, d, a);
  const d2 = orient(c, d, b);
  const d3 = orient(a, b, c);
  const d4 = orient(a, b, d);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

export function ringArea(ring: LatLon[]): number {
  let area = 0;
  for (let i = 0; i < ring.length; i++) {
    const a = ring[i]!;
    const b = ring[(i + 1) % ring.length]!;
    area += a.lon * b.lat - b.lon * a.lat;
  }
  return Math.abs(area) / 2;
}

export interface ValidationResult {
  ok: boolean;
  error?: string;
}

/** Mirror of the server's sweep-polygon rules: simple, non-degenerate. */
export function validatePolygon(ring: LatLon[]): ValidationResult {
  if (ring.length < 3) {
    return { ok: false, error: "polygon needs at least 3 vertices" };
  }
  for (let i = 0; i < ring.length; i++) {
    const a = ring[i]!;
    const b = ring[(i + 1) % ring.length]!;
    if (a.lat === b.lat && a.lon === b.lon) {
      return { ok: false, error: "polygon repeats a vertex" };
    }
  }
  const n = ring.length;
  for (let i = 0; i < n; i++) {
    for (let j = i + 1; j < n; j++) {
      // skip edges sharing a vertex
      if (j === i || (j + 1) % n === i || (i + 1) % n === j) continue;
      if (
        segmentsIntersect(ring[i]!, ring[(i + 1) % n]!, ring[j]!, ring[(j + 1) % n]!)
      ) {
        return { ok: false, error: "polygon edges self-intersect" };
      }
    }
  }
  if (ringArea(ring) <= 0) {
    return { ok: false, error: "polygon has zero area" };
  }
  return { ok: true };
}

export function validateTrackline(points: LatLon[]): ValidationResult {
  if (points.length < 2) {
    return { ok: false, error: "trackline needs at least 2 points" };
  }
  for (let i = 1; i < points.length; i++) {
    const a = points[i - 1]!;
    const b = points[i]!;
    if (a.lat === b.lat && a.lon === b.lon) {
      return { ok: false, error: "trackline repeats a point" };
    }
  }
  return { ok: true };
}

export function validateBudget(hours: number): ValidationResult {
  if (!Number.isFinite(hours) || hours <= 0) {
    return { ok: false, error: "budget must be a positive number of hours" };
  }
  return { ok: true };
}

/** GeoJSON builders for increment payloads ([lon, lat] axis order). */
export function polygonGeoJson(ring: LatLon[]): object {
  const coords = ring.map((p) => [p.lon, p.lat]);
  coords.push(coords[0]!);
  return {
    type: "FeatureCollection",
    features: [
      { type: "Feature", geometry: { type: "Polygon", coordinates: [coords] }, properties: {} },
    ],
  };
}

export function tracklinesGeoJson(lines: LatLon[][]): object {
  return {
    type: "FeatureCollection",
    features: lines.map((pts) => ({
      type: "Feature",
      geometry: { type: "LineString", coordinates: pts.map((p) => [p.lon, p.lat]) },
      properties: {},
    })),
  };
}
