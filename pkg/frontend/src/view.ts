/** World (task-plane) to canvas transform. Pure math, no DOM. */

export interface Viewport {
  /** plane-coordinate bounds */
  uMin: number;
  uMax: number;
  vMin: number;
  vMax: number;
  /** canvas size in pixels */
  width: number;
  height: number;
}

/** Uniform-scale fit of the plane bounds into the canvas with a margin. */
export function planeScale(vp: Viewport, marginPx = 20): number {
  const su = (vp.width - 2 * marginPx) / (vp.uMax - vp.uMin);
  const sv = (vp.height - 2 * marginPx) / (vp.vMax - vp.vMin);
  return Math.min(su, sv);
}

export function planeToCanvas(
  u: number,
  v: number,
  vp: Viewport,
  marginPx = 20,
): [number, number] {
  const k = planeScale(vp, marginPx);
  const cu = (vp.uMin + vp.uMax) / 2;
  const cv = (vp.vMin + vp.vMax) / 2;
  // v axis points up on screen
  return [vp.width / 2 + (u - cu) * k, vp.height / 2 - (v - cv) * k];
}

export function canvasToPlane(
  px: number,
  py: number,
  vp: Viewport,
  marginPx = 20,
): [number, number] {
  const k = planeScale(vp, marginPx);
  const cu = (vp.uMin + vp.uMax) / 2;
  const cv = (vp.vMin + vp.vMax) / 2;
  return [cu + (px - vp.width / 2) / k, cv - (py - vp.height / 2) / k];
}

/** Clamp a plane point into the viewport bounds (out-of-canvas drags). */
export function clampToViewport(
  u: number,
  v: number,
  vp: Viewport,
): [number, number] {
  return [
    Math.min(Math.max(u, vp.uMin), vp.uMax),
    Math.min(Math.max(v, vp.vMin), vp.vMax),
  ];
}
