/** Message types of the stepping-service protocol (see docs/protocol.md). */

export type Vec3 = [number, number, number];

export interface StateMsg {
  type: "state";
  t: number;
  tick: number;
  algorithm: string;
  mode: string;
  running: boolean;
  x: Vec3;
  F: Vec3;
  s: number;
  s_dot: number;
  s_ddot: number;
  m: Vec3;
  e: Vec3;
  is_eds_near: boolean;
  osc_center: Vec3 | null;
  osc_radius: number | null;
}

export interface FieldMsg {
  type: "field";
  grid: number;
  u: number[];
  v: number[];
  origin: Vec3;
  e1: Vec3;
  e2: Vec3;
  distance: number[];
  is_eds: number[];
  curve_u: number[];
  curve_v: number[];
}

export interface HelloMsg {
  type: "hello";
  protocol: number;
  session: string;
  transport: string;
}

export interface ErrorMsg {
  type: "error";
  code: string;
  message: string;
}

export type ServerMsg =
  | StateMsg
  | FieldMsg
  | HelloMsg
  | ErrorMsg
  | { type: "ack"; what: string; [k: string]: unknown }
  | { type: "heartbeat"; t: number }
  | { type: "pong" };

export function parseServerMessage(text: string): ServerMsg {
  const doc = JSON.parse(text);
  if (typeof doc !== "object" || doc === null || typeof doc.type !== "string") {
    throw new Error("malformed server message");
  }
  return doc as ServerMsg;
}

export function isState(msg: ServerMsg): msg is StateMsg {
  return msg.type === "state";
}

/** Project a world-space point into the task-plane coordinates of a field. */
export function toPlane(
  p: Vec3,
  origin: Vec3,
  e1: Vec3,
  e2: Vec3,
): [number, number] {
  const d: Vec3 = [p[0] - origin[0], p[1] - origin[1], p[2] - origin[2]];
  return [
    d[0] * e1[0] + d[1] * e1[1] + d[2] * e1[2],
    d[0] * e2[0] + d[1] * e2[1] + d[2] * e2[2],
  ];
}

/** Lift task-plane coordinates back to a world-space point. */
export function fromPlane(
  u: number,
  v: number,
  origin: Vec3,
  e1: Vec3,
  e2: Vec3,
): Vec3 {
  return [
    origin[0] + u * e1[0] + v * e2[0],
    origin[1] + u * e1[1] + v * e2[1],
    origin[2] + u * e1[2] + v * e2[2],
  ];
}

/** TCP framing used by the headless test client: ASCII length, newline, JSON. */
export function frameMessage(doc: unknown): Uint8Array {
  const payload = new TextEncoder().encode(JSON.stringify(doc));
  const header = new TextEncoder().encode(String(payload.length) + "\n");
  const out = new Uint8Array(header.length + payload.length);
  out.set(header, 0);
  out.set(payload, header.length);
  return out;
}

/** Incremental parser for the length-prefixed TCP framing. */
export class FrameDecoder {
  private buffer = new Uint8Array(0);

  push(chunk: Uint8Array): string[] {
    const joined = new Uint8Array(this.buffer.length + chunk.length);
    joined.set(this.buffer, 0);
    joined.set(chunk, this.buffer.length);
    this.buffer = joined;
    const out: string[] = [];
    for (;;) {
      const nl = this.buffer.indexOf(0x0a);
      if (nl < 0) break;
      const header = new TextDecoder().decode(this.buffer.subarray(0, nl));
      const length = parseInt(header, 10);
      if (!Number.isFinite(length) || length < 0) {
        throw new Error(`bad frame header: ${JSON.stringify(header)}`);
      }
      if (this.buffer.length < nl + 1 + length) break;
      const payload = this.buffer.subarray(nl + 1, nl + 1 + length);
      out.push(new TextDecoder().decode(payload));
      this.buffer = this.buffer.subarray(nl + 1 + length);
    }
    return out;
  }
}
