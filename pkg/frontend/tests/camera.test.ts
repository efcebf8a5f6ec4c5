import { describe, expect, it } from 'vitest';

import { OrbitCamera } from '../src/camera.js';
import type { Vec3 } from '../src/protocol.js';

const viewport = { width: 800, height: 600 };

describe('OrbitCamera', () => {
  it('projects the orbit center to the viewport center', () => {
    const camera = new OrbitCamera(viewport);
    const p = camera.project(camera.center)!;
    expect(p.x).toBeCloseTo(400, 6);
    expect(p.y).toBeCloseTo(300, 6);
    expect(p.depth).toBeCloseTo(camera.distance, 6);
  });

  it('returns null for points behind the eye', () => {
    const camera = new OrbitCamera(viewport);
    camera.yaw = 0;
    camera.pitch = 0;
    const eye = camera.eye();
    const behind: Vec3 = [eye[0], eye[1], eye[2] + 1];
    expect(camera.project(behind)).toBeNull();
  });

  it('zero pixel delta maps to the zero world vector', () => {
    const camera = new OrbitCamera(viewport);
    expect(camera.dragPlaneDelta([0.2, 1.1, -0.3], 0, 0)).toEqual([0, 0, 0]);
  });

  it('drag plane mapping is consistent with projection', () => {
    // moving a point by dragPlaneDelta(dx, dy) must move its projection by
    // approximately (dx, dy) pixels, for many camera placements
    for (let trial = 0; trial < 50; trial++) {
      const camera = new OrbitCamera(viewport);
      camera.yaw = (trial * 0.37) % (2 * Math.PI);
      camera.pitch = -1.2 + ((trial * 0.11) % 2.4);
      camera.distance = 1.5 + (trial % 5);
      const target: Vec3 = [
        0.4 * Math.sin(trial),
        0.9 + 0.3 * Math.cos(trial * 2),
        0.4 * Math.cos(trial),
      ];
      const before = camera.project(target);
      if (before === null) continue;
      const dx = 25;
      const dy = -12;
      const delta = camera.dragPlaneDelta(target, dx, dy);
      const moved: Vec3 = [target[0] + delta[0], target[1] + delta[1], target[2] + delta[2]];
      const after = camera.project(moved)!;
      expect(after.x - before.x).toBeCloseTo(dx, 0);
      expect(after.y - before.y).toBeCloseTo(dy, 0);
      // the plane is camera-facing: depth is unchanged
      expect(after.depth).toBeCloseTo(before.depth, 6);
    }
  });

  it('pitch is clamped away from the poles', () => {
    const camera = new OrbitCamera(viewport);
    camera.orbit(0, 100);
    expect(camera.pitch).toBeLessThan(Math.PI / 2);
    camera.orbit(0, -200);
    expect(camera.pitch).toBeGreaterThan(-Math.PI / 2);
  });

  it('zoom is clamped to a sane range', () => {
    const camera = new OrbitCamera(viewport);
    for (let i = 0; i < 100; i++) camera.zoom(0.5);
    expect(camera.distance).toBeGreaterThanOrEqual(0.5);
    for (let i = 0; i < 100; i++) camera.zoom(2);
    expect(camera.distance).toBeLessThanOrEqual(20);
  });
});
