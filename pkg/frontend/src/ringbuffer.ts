/** Fixed-capacity ring buffer backing the live strip charts. */

export class RingBuffer {
  private data: Float64Array;
  private head = 0;
  private count = 0;

  constructor(readonly capacity: number) {
    if (capacity < 1) throw new Error("capacity must be >= 1");
    this.data = new Float64Array(capacity);
  }

  push(value: number): void {
    this.data[this.head] = value;
    this.head = (this.head + 1) % this.capacity;
    if (this.count < this.capacity) this.count += 1;
  }

  get length(): number {
    return this.count;
  }

  /** Oldest-to-newest copy of the stored values. */
  values(): number[] {
    const out: number[] = new Array(this.count);
    const start = (this.head - this.count + this.capacity) % this.capacity;
    for (let i = 0; i < this.count; i++) {
      out[i] = this.data[(start + i) % this.capacity];
    }
    return out;
  }

  last(): number | undefined {
    if (this.count === 0) return undefined;
    return this.data[(this.head - 1 + this.capacity) % this.capacity];
  }

  clear(): void {
    this.head = 0;
    this.count = 0;
  }

  /** Min/max over the stored values (for chart autoscaling). */
  range(): [number, number] {
    if (this.count === 0) return [0, 1];
    let lo = Infinity;
    let hi = -Infinity;
    for (const v of this.values()) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
    if (lo === hi) {
      lo -= 0.5;
      hi += 0.5;
    }
    return [lo, hi];
  }
}
