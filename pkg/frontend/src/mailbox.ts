/** Conflating one-slot mailbox and a send-rate limiter.
 *
 * The render loop reads only the newest snapshot; pointer moves emit at a
 * bounded rate with the newest position winning.
 */

export class Mailbox<T> {
  private slot: T | null = null;

  put(value: T): void {
    this.slot = value;     // conflation: newest wins
  }

  take(): T | null {
    const v = this.slot;
    this.slot = null;
    return v;
  }

  peek(): T | null {
    return this.slot;
  }
}

export class RateLimiter<T> {
  private pending: T | null = null;
  private lastSent = -Infinity;

  constructor(
    private readonly minIntervalMs: number,
    private readonly send: (value: T) => void,
    private readonly clock: () => number = () => performance.now(),
  ) {}

  /** Offer a value; sends immediately if the interval allows, else keeps the
   * newest value for the next flush. */
  offer(value: T): void {
    const now = this.clock();
    if (now - this.lastSent >= this.minIntervalMs) {
      this.lastSent = now;
      this.pending = null;
      this.send(value);
    } else {
      this.pending = value;
    }
  }

  /** Flush a conflated pending value once the interval has elapsed. */
  flush(): void {
    if (this.pending === null) return;
    const now = this.clock();
    if (now - this.lastSent >= this.minIntervalMs) {
      const v = this.pending;
      this.pending = null;
      this.lastSent = now;
      this.send(v);
    }
  }

  get hasPending(): boolean {
    return this.pending !== null;
  }
}
