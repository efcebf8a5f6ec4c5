// Canvas 2D scene rendering: bones as line segments per the topology's
// parent indices, joints as small discs, drag targets in red, the starting
// pose as a reduced-opacity ghost. "both" mode draws the labelled skeletons
// side by side. Returns draw statistics so tests can assert structure
// without a real canvas.

import { OrbitCamera } from './camera.js';
import { posePoints } from './protocol.js';
import type { Topology, Vec3 } from './protocol.js';

/** The subset of CanvasRenderingContext2D the renderer touches. */
export interface Ctx2D {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  globalAlpha: number;
  lineWidth: number;
  font: string;
}

export interface SceneTarget {
  joint: number;
  position: Vec3;
}

export interface Scene {
  /** Poses keyed by label ("neural", "fabrik"); one entry except in "both"
   * mode. */
  poses: Record<string, number[]>;
  ghost?: number[];
  targets: SceneTarget[];
}

export interface DrawStats {
  segments: number;
  joints: number;
  targets: number;
  groups: string[];
  ghostDrawn: boolean;
}

const SKELETON_COLOR = '#3a7bd5';
const FABRIK_COLOR = '#44a06c';
const GHOST_ALPHA = 0.25;
const TARGET_COLOR = '#d53a3a';

function drawSkeleton(
  ctx: Ctx2D,
  camera: OrbitCamera,
  pose: number[],
  topology: Topology,
  offsetX: number,
  color: string,
  alpha: number,
): number {
  const points = posePoints(pose);
  const projected = points.map((p) => camera.project(p));
  ctx.globalAlpha = alpha;
  ctx.strokeStyle = color;
  ctx.fillStyle = color;
  ctx.lineWidth = 2;
  let segments = 0;
  for (let j = 0; j < topology.parent.length; j++) {
    const parent = topology.parent[j];
    if (parent < 0) continue;
    const a = projected[j];
    const b = projected[parent];
    if (a === null || b === null) continue;
    ctx.beginPath();
    ctx.moveTo(a.x + offsetX, a.y);
    ctx.lineTo(b.x + offsetX, b.y);
    ctx.stroke();
    segments += 1;
  }
  for (const p of projected) {
    if (p === null) continue;
    ctx.beginPath();
    ctx.arc(p.x + offsetX, p.y, 3, 0, 2 * Math.PI);
    ctx.fill();
  }
  ctx.globalAlpha = 1;
  return segments;
}

export function renderScene(
  ctx: Ctx2D,
  camera: OrbitCamera,
  scene: Scene,
  topology: Topology,
): DrawStats {
  const { width, height } = camera.viewport;
  ctx.clearRect(0, 0, width, height);
  const labels = Object.keys(scene.poses);
  const sideBySide = labels.length > 1;
  const stats: DrawStats = {
    segments: 0,
    joints: 0,
    targets: 0,
    groups: [],
    ghostDrawn: false,
  };
  labels.forEach((label, i) => {
    const offsetX = sideBySide ? (i - (labels.length - 1) / 2) * (width / labels.length / 1.5) : 0;
    if (scene.ghost) {
      drawSkeleton(ctx, camera, scene.ghost, topology, offsetX, SKELETON_COLOR, GHOST_ALPHA);
      stats.ghostDrawn = true;
    }
    const color = label === 'fabrik' ? FABRIK_COLOR : SKELETON_COLOR;
    stats.segments += drawSkeleton(ctx, camera, scene.poses[label], topology, offsetX, color, 1);
    stats.joints += topology.parent.length;
    stats.groups.push(label);
    if (sideBySide) {
      ctx.fillStyle = color;
      ctx.font = '13px sans-serif';
      ctx.fillText(label, width / 2 + offsetX - 20, 20);
    }
    ctx.fillStyle = TARGET_COLOR;
    for (const target of scene.targets) {
      const p = camera.project(target.position);
      if (p === null) continue;
      ctx.beginPath();
      ctx.arc(p.x + offsetX, p.y, 5, 0, 2 * Math.PI);
      ctx.fill();
      stats.targets += 1;
    }
  });
  return stats;
}
