// Latest-wins rate limiter for drag previews: emits immediately when the
// rate budget allows, otherwise remembers only the newest value and emits it
// on the trailing edge. Guarantees at most maxPerSecond emissions and that
// the last pushed value is always (eventually) emitted.

export interface ThrottleClock {
  now(): number;
  setTimeout(fn: () => void, ms: number): unknown;
  clearTimeout(id: unknown): void;
}

const realClock: ThrottleClock = {
  now: () => Date.now(),
  setTimeout: (fn, ms) => setTimeout(fn, ms),
  clearTimeout: (id) => clearTimeout(id as ReturnType<typeof setTimeout>),
};

export class LatestWinsThrottle<T> {
  private lastEmit = -Infinity;
  private pending: T | undefined;
  private hasPending = false;
  private timer: unknown = null;

  constructor(
    private readonly emit: (value: T) => void,
    private readonly maxPerSecond = 30,
    private readonly clock: ThrottleClock = realClock,
  ) {
    if (maxPerSecond <= 0) throw new Error('maxPerSecond must be positive');
  }

  private get intervalMs(): number {
    return 1000 / this.maxPerSecond;
  }

  push(value: T): void {
    const t = this.clock.now();
    if (this.timer === null && t - this.lastEmit >= this.intervalMs) {
      this.lastEmit = t;
      this.emit(value);
      return;
    }
    this.pending = value;
    this.hasPending = true;
    if (this.timer === null) {
      const wait = Math.max(0, this.lastEmit + this.intervalMs - t);
      this.timer = this.clock.setTimeout(() => this.fire(), wait);
    }
  }

  private fire(): void {
    this.timer = null;
    if (!this.hasPending) return;
    const value = this.pending as T;
    this.pending = undefined;
    this.hasPending = false;
    this.lastEmit = this.clock.now();
    this.emit(value);
  }

  /** Drop any scheduled trailing emission (e.g. on drag end the caller sends
   * a final unthrottled request instead). */
  cancel(): void {
    if (this.timer !== null) {
      this.clock.clearTimeout(this.timer);
      this.timer = null;
    }
    this.pending = undefined;
    this.hasPending = false;
  }
}
