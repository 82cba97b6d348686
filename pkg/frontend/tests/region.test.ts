import { describe, expect, it } from "vitest";

import {
  clampRegion,
  dragToRect,
  isNegligible,
  pixelToRegion,
  quantizeRegion,
  regionToPixels,
  regionsEqual,
} from "../src/region.js";

describe("drag geometry", () => {
  it("normalizes a backwards drag", () => {
    const rect = dragToRect({ x: 300, y: 200 }, { x: 100, y: 50 });
    expect(rect).toEqual({ left: 100, top: 50, width: 200, height: 150 });
  });

  it("treats tiny drags as accidental clicks", () => {
    expect(isNegligible({ left: 0, top: 0, width: 2, height: 40 })).toBe(true);
    expect(isNegligible({ left: 0, top: 0, width: 40, height: 2 })).toBe(true);
    expect(isNegligible({ left: 0, top: 0, width: 4, height: 4 })).toBe(false);
  });
});

describe("normalized regions", () => {
  it("converts pixels to the unit square", () => {
    const region = pixelToRegion({ left: 160, top: 120, width: 256, height: 144 }, 640, 480);
    expect(region).toEqual({ x: 0.25, y: 0.25, w: 0.4, h: 0.3 });
  });

  it("round-trips exactly for power-of-two view sizes", () => {
    const region = { x: 0.1376953125, y: 0.25, w: 0.5, h: 0.124267578125 };
    const pixels = regionToPixels(region, 1024, 4096);
    const back = pixelToRegion(pixels, 1024, 4096);
    expect(regionsEqual(back, region)).toBe(true);
  });

  it("clamps regions that spill past the edges", () => {
    expect(clampRegion({ x: -0.2, y: 0.5, w: 0.4, h: 0.9 })).toEqual({
      x: 0,
      y: 0.5,
      w: 0.4,
      h: 0.5,
    });
    expect(clampRegion({ x: 0.8, y: 0.8, w: 0.6, h: 0.6 })).toEqual({
      x: 0.8,
      y: 0.8,
      w: 0.19999999999999996,
      h: 0.19999999999999996,
    });
  });

  it("a drag that leaves the canvas still yields a region inside the unit square", () => {
    const rect = dragToRect({ x: 500, y: 400 }, { x: 900, y: 700 });
    const region = pixelToRegion(rect, 640, 480);
    expect(region.x + region.w).toBeLessThanOrEqual(1);
    expect(region.y + region.h).toBeLessThanOrEqual(1);
  });

  it("rejects a degenerate view size", () => {
    expect(() => pixelToRegion({ left: 0, top: 0, width: 1, height: 1 }, 0, 480)).toThrow(
      /view size/,
    );
  });

  it("quantizes to the store's six-decimal precision", () => {
    const raw = pixelToRegion(dragToRect({ x: 123.45, y: 67.8 }, { x: 417.3, y: 308.9 }), 640, 480);
    const snapped = quantizeRegion(raw);
    for (const v of [snapped.x, snapped.y, snapped.w, snapped.h]) {
      expect(v).toBe(Number(v.toFixed(6)));
    }
    // idempotent: snapping an already-snapped region changes nothing
    expect(quantizeRegion(snapped)).toEqual(snapped);
    // and stays close to the raw drag
    expect(Math.abs(snapped.x - raw.x)).toBeLessThan(5e-7);
  });
});
