import { describe, expect, it } from "vitest";

import {
  canvasToLatLon,
  polygonGeoJson,
  projectToCanvas,
  ringArea,
  tracklinesGeoJson,
  validateBudget,
  validatePolygon,
  validateTrackline,
  type Viewport,
} from "../src/geometry.js";

const vp: Viewport = {
  origin: { lat: 2.98, lon: -30.59 },
  spanM: 160_000,
  widthPx: 640,
  heightPx: 640,
};

describe("canvas transforms", () => {
  it("origin lands at the canvas center", () => {
    const { x, y } = projectToCanvas(vp.origin, vp);
    expect(x).toBeCloseTo(320, 9);
    expect(y).toBeCloseTo(320, 9);
  });

  it("north is up", () => {
    const { y } = projectToCanvas({ lat: 3.2, lon: -30.59 }, vp);
    expect(y).toBeLessThan(320);
  });

  it("round-trips", () => {
    const p = { lat: 3.1, lon: -30.2 };
    const { x, y } = projectToCanvas(p, vp);
    const back = canvasToLatLon(x, y, vp);
    expect(back.lat).toBeCloseTo(p.lat, 9);
    expect(back.lon).toBeCloseTo(p.lon, 9);
  });
});

describe("validatePolygon", () => {
  const square = [
    { lat: 0, lon: 0 },
    { lat: 0, lon: 1 },
    { lat: 1, lon: 1 },
    { lat: 1, lon: 0 },
  ];

  it("accepts a simple square", () => {
    expect(validatePolygon(square).ok).toBe(true);
  });

  it("rejects fewer than 3 vertices", () => {
    expect(validatePolygon(square.slice(0, 2)).error).toMatch(/at least 3/);
  });

  it("rejects self-intersection (bow tie)", () => {
    const bowtie = [
      { lat: 0, lon: 0 },
      { lat: 1, lon: 1 },
      { lat: 0, lon: 1 },
      { lat: 1, lon: 0 },
    ];
    expect(validatePolygon(bowtie).error).toMatch(/self-intersect/);
  });

  it("rejects zero area", () => {
    const line = [
      { lat: 0, lon: 0 },
      { lat: 0.5, lon: 0.5 },
      { lat: 1, lon: 1 },
    ];
    expect(validatePolygon(line).error).toMatch(/zero area/);
  });

  it("rejects repeated vertices", () => {
    const repeated = [...square, { lat: 1, lon: 0 }];
    expect(validatePolygon(repeated).error).toMatch(/repeats/);
  });
});

describe("validateTrackline", () => {
  it("needs two distinct points", () => {
    expect(validateTrackline([{ lat: 0, lon: 0 }]).ok).toBe(false);
    expect(
      validateTrackline([
        { lat: 0, lon: 0 },
        { lat: 0, lon: 1 },
      ]).ok,
    ).toBe(true);
  });
});

describe("validateBudget", () => {
  it("rejects zero, negatives and NaN", () => {
    expect(validateBudget(0).ok).toBe(false);
    expect(validateBudget(-5).ok).toBe(false);
    expect(validateBudget(Number.NaN).ok).toBe(false);
    expect(validateBudget(12).ok).toBe(true);
  });
});

describe("geojson builders", () => {
  it("closes polygon rings in lon,lat order", () => {
    const gj = polygonGeoJson([
      { lat: 1, lon: 2 },
      { lat: 3, lon: 4 },
      { lat: 5, lon: 6 },
    ]) as { features: { geometry: { coordinates: number[][][] } }[] };
    const ring = gj.features[0]!.geometry.coordinates[0]!;
    expect(ring[0]).toEqual([2, 1]);
    expect(ring[ring.length - 1]).toEqual(ring[0]);
    expect(ring.length).toBe(4);
  });

  it("emits one LineString feature per trackline", () => {
    const gj = tracklinesGeoJson([
      [
        { lat: 0, lon: 0 },
        { lat: 1, lon: 1 },
      ],
    ]) as { features: { geometry: { type: string } }[] };
    expect(gj.features).toHaveLength(1);
    expect(gj.features[0]!.geometry.type).toBe("LineString");
  });
});

describe("ringArea", () => {
  it("unit square has area 1 regardless of orientation", () => {
    const ccw = [
      { lat: 0, lon: 0 },
      { lat: 0, lon: 1 },
      { lat: 1, lon: 1 },
      { lat: 1, lon: 0 },
    ];
    expect(ringArea(ccw)).toBeCloseTo(1, 12);
    expect(ringArea([...ccw].reverse())).toBeCloseTo(1, 12);
  });
});
