/** Strip charts for the live phase and force readouts. */

import { RingBuffer } from "./ringbuffer.js";
import { StateMsg } from "./protocol.js";

export class StripCharts {
  readonly s = new RingBuffer(600);
  readonly sDot = new RingBuffer(600);
  readonly errNorm = new RingBuffer(600);
  readonly forceAngle = new RingBuffer(600);
  private lastAngle: number | null = null;

  /** All displayed quantities come straight from a broadcast state. */
  ingest(state: StateMsg): void {
    this.s.push(state.s);
    this.sDot.push(state.s_dot);
    const e = state.e;
    this.errNorm.push(Math.hypot(e[0], e[1], e[2]) * 100);
    let angle = Math.atan2(state.F[1], state.F[0]);
    if (this.lastAngle !== null) {
      // unwrap for a continuous trace
      while (angle - this.lastAngle > Math.PI) angle -= 2 * Math.PI;
      while (angle - this.lastAngle < -Math.PI) angle += 2 * Math.PI;
    }
    this.lastAngle = angle;
    this.forceAngle.push(angle);
  }

  clear(): void {
    for (const buf of [this.s, this.sDot, this.errNorm, this.forceAngle]) {
      buf.clear();
    }
    this.lastAngle = null;
  }

  draw(ctx: CanvasRenderingContext2D, width: number, height: number): void {
    ctx.clearRect(0, 0, width, height);
    ctx.fillStyle = "#11151c";
    ctx.fillRect(0, 0, width, height);
    const rows: Array<[string, RingBuffer, string]> = [
      ["s [m]", this.s, "#ffd166"],
      ["s_dot [m/s]", this.sDot, "#4fc3f7"],
      ["|e| [cm]", this.errNorm, "#9ccc65"],
      ["angle F [rad]", this.forceAngle, "#ef9a9a"],
    ];
    const rowH = height / rows.length;
    rows.forEach(([label, buf, color], r) => {
      const top = r * rowH;
      ctx.strokeStyle = "#2a3442";
      ctx.strokeRect(0.5, top + 0.5, width - 1, rowH - 1);
      ctx.fillStyle = "#8899aa";
      ctx.font = "11px system-ui";
      ctx.fillText(label, 6, top + 14);
      const vals = buf.values();
      if (vals.length < 2) return;
      const [lo, hi] = buf.range();
      ctx.strokeStyle = color;
      ctx.lineWidth = 1.2;
      ctx.beginPath();
      vals.forEach((v, i) => {
        const px = (i / (buf.capacity - 1)) * (width - 8) + 4;
        const py = top + rowH - 6 - ((v - lo) / (hi - lo)) * (rowH - 24);
        if (i === 0) ctx.moveTo(px, py);
        else ctx.lineTo(px, py);
      });
      ctx.stroke();
      const last = buf.last();
      if (last !== undefined) {
        ctx.fillStyle = color;
        ctx.fillText(last.toFixed(3), width - 64, top + 14);
      }
    });
  }
}
