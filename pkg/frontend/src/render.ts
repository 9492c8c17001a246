/** Canvas rendering of the scene: iso-distance field, curve, markers.
 *
 * Everything drawn here comes from service data (field replies and state
 * broadcasts); the client computes coordinate transforms only.
 */

import { FieldMsg, StateMsg, toPlane } from "./protocol.js";
import { Viewport, planeToCanvas } from "./view.js";

export interface Scene {
  field: FieldMsg | null;
  state: StateMsg | null;
  viewport: Viewport;
}

export function viewportFromField(
  field: FieldMsg,
  width: number,
  height: number,
): Viewport {
  return {
    uMin: field.u[0],
    uMax: field.u[field.u.length - 1],
    vMin: field.v[0],
    vMax: field.v[field.v.length - 1],
    width,
    height,
  };
}

const ISO_BANDS = 12;

export function renderScene(ctx: CanvasRenderingContext2D, scene: Scene): void {
  const { field, state, viewport } = scene;
  ctx.clearRect(0, 0, viewport.width, viewport.height);
  ctx.fillStyle = "#11151c";
  ctx.fillRect(0, 0, viewport.width, viewport.height);
  if (!field) {
    ctx.fillStyle = "#8899aa";
    ctx.font = "14px system-ui";
    ctx.fillText("waiting for field data...", 20, 30);
    return;
  }
  drawField(ctx, field, viewport);
  drawCurve(ctx, field, viewport);
  if (state) drawState(ctx, field, state, viewport);
}

function drawField(
  ctx: CanvasRenderingContext2D,
  field: FieldMsg,
  vp: Viewport,
): void {
  const n = field.grid;
  let dMax = 0;
  for (const d of field.distance) if (d > dMax) dMax = d;
  if (dMax <= 0) dMax = 1;
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) {
      const idx = i * n + j;
      const [x0, y0] = planeToCanvas(field.u[i], field.v[j], vp);
      const [x1, y1] = planeToCanvas(
        field.u[Math.min(i + 1, n - 1)],
        field.v[Math.min(j + 1, n - 1)],
        vp,
      );
      const w = Math.max(Math.abs(x1 - x0), 1.5);
      const h = Math.max(Math.abs(y1 - y0), 1.5);
      if (field.is_eds[idx]) {
        ctx.fillStyle = "rgba(220, 60, 60, 0.85)";   // singular locus
      } else {
        const band = Math.floor((field.distance[idx] / dMax) * ISO_BANDS);
        const shade = 26 + band * 9;
        ctx.fillStyle = `rgb(${shade}, ${shade + 6}, ${shade + 14})`;
      }
      ctx.fillRect(Math.min(x0, x1), Math.min(y0, y1), w, h);
    }
  }
}

function drawCurve(
  ctx: CanvasRenderingContext2D,
  field: FieldMsg,
  vp: Viewport,
): void {
  ctx.strokeStyle = "#f5f7fa";
  ctx.lineWidth = 2;
  ctx.beginPath();
  for (let k = 0; k < field.curve_u.length; k++) {
    const [px, py] = planeToCanvas(field.curve_u[k], field.curve_v[k], vp);
    if (k === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  }
  ctx.stroke();
}

function drawState(
  ctx: CanvasRenderingContext2D,
  field: FieldMsg,
  state: StateMsg,
  vp: Viewport,
): void {
  const { origin, e1, e2 } = field;

  // osculating circle at the current phase
  if (state.osc_center && state.osc_radius && isFinite(state.osc_radius)) {
    const [cu, cv] = toPlane(state.osc_center, origin, e1, e2);
    const [cx, cy] = planeToCanvas(cu, cv, vp);
    const [ru] = planeToCanvas(cu + state.osc_radius, cv, vp);
    ctx.strokeStyle = state.is_eds_near ? "#e06666" : "#5a768f";
    ctx.setLineDash([5, 4]);
    ctx.lineWidth = 1;
    ctx.beginPath();
    ctx.arc(cx, cy, Math.abs(ru - cx), 0, 2 * Math.PI);
    ctx.stroke();
    ctx.setLineDash([]);
    ctx.fillStyle = ctx.strokeStyle;
    ctx.beginPath();
    ctx.arc(cx, cy, 2.5, 0, 2 * Math.PI);
    ctx.fill();
  }

  // reference point on the curve
  const [mu, mv] = toPlane(state.m, origin, e1, e2);
  const [mx, my] = planeToCanvas(mu, mv, vp);
  ctx.fillStyle = "#ffd166";
  ctx.beginPath();
  ctx.arc(mx, my, 6, 0, 2 * Math.PI);
  ctx.fill();

  // end effector + error segment
  const [xu, xv] = toPlane(state.x, origin, e1, e2);
  const [ex, ey] = planeToCanvas(xu, xv, vp);
  ctx.strokeStyle = "#88a0b8";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(mx, my);
  ctx.lineTo(ex, ey);
  ctx.stroke();
  ctx.fillStyle = "#4fc3f7";
  ctx.beginPath();
  ctx.arc(ex, ey, 7, 0, 2 * Math.PI);
  ctx.fill();
}
