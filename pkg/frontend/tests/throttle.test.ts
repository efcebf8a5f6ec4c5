import { describe, expect, it } from 'vitest';

import { LatestWinsThrottle } from '../src/throttle.js';
import { FakeClock } from './fakes.js';

describe('LatestWinsThrottle', () => {
  it('emits the first value immediately', () => {
    const clock = new FakeClock();
    const emitted: number[] = [];
    const throttle = new LatestWinsThrottle<number>((v) => emitted.push(v), 30, clock);
    throttle.push(1);
    expect(emitted).toEqual([1]);
  });

  it('caps a rapid 100-event burst at 30 requests per second', () => {
    const clock = new FakeClock();
    const emitted: number[] = [];
    const throttle = new LatestWinsThrottle<number>((v) => emitted.push(v), 30, clock);
    for (let i = 0; i < 100; i++) {
      throttle.push(i);
      clock.advance(10); // 100 events over one second
    }
    expect(emitted.length).toBeLessThanOrEqual(30);
    expect(emitted.length).toBeGreaterThan(25); // throttled, not starved
  });

  it('always delivers the newest value on the trailing edge', () => {
    const clock = new FakeClock();
    const emitted: number[] = [];
    const throttle = new LatestWinsThrottle<number>((v) => emitted.push(v), 30, clock);
    throttle.push(1);
    throttle.push(2);
    throttle.push(3); // within the same interval: only the latest survives
    clock.advance(1000);
    expect(emitted).toEqual([1, 3]);
  });

  it('intermediate values inside one interval are dropped, order preserved', () => {
    const clock = new FakeClock();
    const emitted: number[] = [];
    const throttle = new LatestWinsThrottle<number>((v) => emitted.push(v), 10, clock);
    for (let i = 0; i < 50; i++) {
      throttle.push(i);
      clock.advance(5);
    }
    clock.advance(1000);
    expect(emitted[0]).toBe(0);
    expect(emitted[emitted.length - 1]).toBe(49);
    for (let i = 1; i < emitted.length; i++) {
      expect(emitted[i]).toBeGreaterThan(emitted[i - 1]);
    }
  });

  it('sustained stream keeps the long-run rate at the cap', () => {
    const clock = new FakeClock();
    let count = 0;
    const throttle = new LatestWinsThrottle<number>(() => count++, 30, clock);
    for (let i = 0; i < 1000; i++) {
      throttle.push(i);
      clock.advance(2); // 2 seconds of 500 Hz input
    }
    expect(count).toBeLessThanOrEqual(61); // 30/s over 2s plus the leading edge
  });

  it('cancel drops the pending trailing emission', () => {
    const clock = new FakeClock();
    const emitted: number[] = [];
    const throttle = new LatestWinsThrottle<number>((v) => emitted.push(v), 30, clock);
    throttle.push(1);
    throttle.push(2);
    throttle.cancel();
    clock.advance(1000);
    expect(emitted).toEqual([1]);
  });

  it('rejects a non-positive rate', () => {
    expect(() => new LatestWinsThrottle<number>(() => {}, 0)).toThrow();
  });
});
