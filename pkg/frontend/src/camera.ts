// Perspective orbit camera over a Y-up scene, plus the screen-to-world
// mapping used while dragging: pixel deltas are unprojected onto the
// camera-facing plane through the dragged target, so a drag moves the target
// exactly under the cursor at its current depth.

import type { Vec3 } from './protocol.js';

export interface Viewport {
  width: number;
  height: number;
}

const clamp = (v: number, lo: number, hi: number) => Math.min(hi, Math.max(lo, v));

function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export class OrbitCamera {
  yaw = 0.5; // radians around Y
  pitch = 0.25; // radians above the horizon
  distance = 3.5;
  center: Vec3 = [0, 0.9, 0];
  fovY = Math.PI / 4;

  constructor(public viewport: Viewport) {}

  orbit(dYaw: number, dPitch: number): void {
    this.yaw += dYaw;
    this.pitch = clamp(this.pitch + dPitch, -1.45, 1.45);
  }

  zoom(factor: number): void {
    this.distance = clamp(this.distance * factor, 0.5, 20);
  }

  eye(): Vec3 {
    const cp = Math.cos(this.pitch);
    return [
      this.center[0] + this.distance * cp * Math.sin(this.yaw),
      this.center[1] + this.distance * Math.sin(this.pitch),
      this.center[2] + this.distance * cp * Math.cos(this.yaw),
    ];
  }

  /** Orthonormal view basis: right/up in screen terms, forward toward the
   * scene center. */
  basis(): { right: Vec3; up: Vec3; forward: Vec3 } {
    const eye = this.eye();
    let f = sub(this.center, eye);
    const fl = Math.hypot(f[0], f[1], f[2]);
    f = [f[0] / fl, f[1] / fl, f[2] / fl];
    // right = forward x worldUp
    let r: Vec3 = [f[2], 0, -f[0]];
    const rl = Math.hypot(r[0], r[1], r[2]) || 1;
    r = [r[0] / rl, r[1] / rl, r[2] / rl];
    const u: Vec3 = [
      r[1] * f[2] - r[2] * f[1],
      r[2] * f[0] - r[0] * f[2],
      r[0] * f[1] - r[1] * f[0],
    ];
    return { right: r, up: u, forward: f };
  }

  /** World point -> pixel coordinates plus view-space depth. Points behind
   * the eye return null. */
  project(p: Vec3): { x: number; y: number; depth: number } | null {
    const { right, up, forward } = this.basis();
    const v = sub(p, this.eye());
    const depth = dot(v, forward);
    if (depth <= 1e-6) return null;
    const halfH = Math.tan(this.fovY / 2);
    const sx = dot(v, right) / (depth * halfH * (this.viewport.width / this.viewport.height));
    const sy = dot(v, up) / (depth * halfH);
    return {
      x: (sx * 0.5 + 0.5) * this.viewport.width,
      y: (0.5 - sy * 0.5) * this.viewport.height,
      depth,
    };
  }

  /** Pixel delta -> world delta on the camera-facing plane through `target`.
   * A zero pixel delta maps to the zero vector exactly. */
  dragPlaneDelta(target: Vec3, dxPixels: number, dyPixels: number): Vec3 {
    if (dxPixels === 0 && dyPixels === 0) return [0, 0, 0];
    const projected = this.project(target);
    if (projected === null) return [0, 0, 0];
    const { right, up } = this.basis();
    const worldPerPixel =
      (2 * projected.depth * Math.tan(this.fovY / 2)) / this.viewport.height;
    const dx = dxPixels * worldPerPixel;
    const dy = -dyPixels * worldPerPixel; // screen y grows downward
    return [
      dx * right[0] + dy * up[0],
      dx * right[1] + dy * up[1],
      dx * right[2] + dy * up[2],
    ];
  }
}
