// Drag interaction: picking a joint from the announced solver catalog starts
// a drag; pointer deltas move the target on a camera-facing plane and stream
// throttled solve previews. Joints outside the catalog are ignored with a
// hint. A multi-joint solver (e.g. both hands) always receives a full spec:
// the dragged joint moves, its siblings stay pinned at their current
// positions.

import { OrbitCamera } from './camera.js';
import { PoseConnection } from './connection.js';
import { posePoints } from './protocol.js';
import type { SolveMode, TargetSpecWire, Vec3 } from './protocol.js';
import { LatestWinsThrottle, ThrottleClock } from './throttle.js';

interface ActiveDrag {
  joint: number;
  catalogEntry: number[];
  positions: Map<number, Vec3>;
}

export interface DragOptions {
  camera: OrbitCamera;
  connection: PoseConnection;
  catalog: number[][];
  sessionId: string;
  maxRequestsPerSecond?: number;
  clock?: ThrottleClock;
  onHint?: (message: string) => void;
  onTargetsChanged?: (targets: { joint: number; position: Vec3 }[]) => void;
}

export class DragController {
  mode: SolveMode = 'neural';
  postProcess = false;

  private active: ActiveDrag | null = null;
  private readonly throttle: LatestWinsThrottle<TargetSpecWire[]>;

  constructor(private readonly opts: DragOptions) {
    this.throttle = new LatestWinsThrottle(
      (specs) =>
        this.opts.connection.sendPreview(
          this.opts.sessionId,
          specs,
          this.mode,
          this.postProcess,
        ),
      opts.maxRequestsPerSecond ?? 30,
      opts.clock,
    );
  }

  get dragging(): boolean {
    return this.active !== null;
  }

  /** Start dragging `joint` from the given pose. Returns false (with a UI
   * hint) when no solver covers the joint. */
  begin(joint: number, currentPose: number[]): boolean {
    const entry = this.opts.catalog.find((joints) => joints.includes(joint));
    if (!entry) {
      this.opts.onHint?.(`no solver for joint ${joint}`);
      return false;
    }
    const points = posePoints(currentPose);
    const positions = new Map<number, Vec3>();
    for (const j of entry) positions.set(j, [...points[j]] as Vec3);
    this.active = { joint, catalogEntry: entry, positions };
    this.emitTargets();
    return true;
  }

  /** Apply a pointer delta in pixels. Zero deltas change nothing and send
   * nothing. */
  move(dxPixels: number, dyPixels: number): void {
    if (!this.active) return;
    if (dxPixels === 0 && dyPixels === 0) return;
    const position = this.active.positions.get(this.active.joint)!;
    const delta = this.opts.camera.dragPlaneDelta(position, dxPixels, dyPixels);
    const moved: Vec3 = [
      position[0] + delta[0],
      position[1] + delta[1],
      position[2] + delta[2],
    ];
    this.active.positions.set(this.active.joint, moved);
    this.emitTargets();
    this.throttle.push([this.currentSpec()]);
  }

  /** Finish the drag: drop any pending throttled request and send one final
   * unthrottled preview at the exact release position. */
  end(): TargetSpecWire | null {
    if (!this.active) return null;
    this.throttle.cancel();
    const spec = this.currentSpec();
    this.opts.connection.sendPreview(
      this.opts.sessionId,
      [spec],
      this.mode,
      this.postProcess,
    );
    this.active = null;
    return spec;
  }

  currentSpec(): TargetSpecWire {
    if (!this.active) throw new Error('no active drag');
    const joints = [...this.active.catalogEntry];
    return {
      joints,
      positions: joints.map((j) => [...this.active!.positions.get(j)!]),
    };
  }

  private emitTargets(): void {
    if (!this.active || !this.opts.onTargetsChanged) return;
    this.opts.onTargetsChanged(
      [...this.active.positions.entries()].map(([joint, position]) => ({
        joint,
        position,
      })),
    );
  }
}
