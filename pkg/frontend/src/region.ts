import type { Region } from "./types.js";

// Annotation rectangles are stored normalized to [0, 1] so they survive any
// display size. All conversions live here; the canvas layer stays dumb.

export interface Point {
  x: number;
  y: number;
}

export interface PixelRect {
  left: number;
  top: number;
  width: number;
  height: number;
}

/** Rectangle spanned by a drag, regardless of direction. */
export function dragToRect(start: Point, end: Point): PixelRect {
  return {
    left: Math.min(start.x, end.x),
    top: Math.min(start.y, end.y),
    width: Math.abs(end.x - start.x),
    height: Math.abs(end.y - start.y),
  };
}

/** Accidental clicks produce no annotation. */
export function isNegligible(rect: PixelRect, minPixels = 3): boolean {
  return rect.width < minPixels || rect.height < minPixels;
}

function clamp01(v: number): number {
  return Math.min(1, Math.max(0, v));
}

/** Clamp a region into the unit square, shrinking it at the edges. */
export function clampRegion(region: Region): Region {
  const x = clamp01(region.x);
  const y = clamp01(region.y);
  return {
    x,
    y,
    w: clamp01(Math.min(region.w, 1 - x)),
    h: clamp01(Math.min(region.h, 1 - y)),
  };
}

export function pixelToRegion(rect: PixelRect, viewWidth: number, viewHeight: number): Region {
  if (viewWidth <= 0 || viewHeight <= 0) {
    throw new Error("view size must be positive");
  }
  return clampRegion({
    x: rect.left / viewWidth,
    y: rect.top / viewHeight,
    w: rect.width / viewWidth,
    h: rect.height / viewHeight,
  });
}

export function regionToPixels(region: Region, viewWidth: number, viewHeight: number): PixelRect {
  return {
    left: region.x * viewWidth,
    top: region.y * viewHeight,
    width: region.w * viewWidth,
    height: region.h * viewHeight,
  };
}

export function regionsEqual(a: Region, b: Region): boolean {
  return a.x === b.x && a.y === b.y && a.w === b.w && a.h === b.h;
}

/**
 * Snap to the store's coordinate precision (6 decimals). Submitting an
 * already-quantized region makes the server round trip exact, so the
 * rectangle drawn never shifts on refresh.
 */
export const COORD_DECIMALS = 6;

export function quantizeRegion(region: Region, decimals = COORD_DECIMALS): Region {
  const snap = (v: number) => Number(v.toFixed(decimals));
  return { x: snap(region.x), y: snap(region.y), w: snap(region.w), h: snap(region.h) };
}
