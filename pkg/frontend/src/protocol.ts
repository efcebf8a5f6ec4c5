// Wire protocol of the pose solve service: JSON messages over a persistent
// WebSocket. Poses are flat 63-number arrays (21 joints x XYZ, meters,
// root-relative, Y-up); the hello/session replies carry the topology so the
// client never hardcodes the skeleton.

export const NUM_JOINTS = 21;
export const POSE_DIM = 63;

export type Vec3 = [number, number, number];

export interface Topology {
  joint_names: string[];
  parent: number[];
  reference_bone_lengths: number[];
}

export interface TargetSpecWire {
  joints: number[];
  positions: number[][];
}

export type SolveMode = 'neural' | 'fabrik' | 'both';

// --- client -> server -------------------------------------------------------

export interface HelloRequest {
  type: 'hello';
  correlation_id?: number;
}

export interface CreateSessionRequest {
  type: 'create_session';
  initial_pose?: number[];
  correlation_id?: number;
}

export interface SolveRequest {
  type: 'solve';
  session_id: string;
  specs: TargetSpecWire[];
  mode?: SolveMode;
  post_process?: boolean;
  correlation_id?: number;
}

export interface CommitRequest {
  type: 'commit';
  session_id: string;
  pose: number[];
  correlation_id?: number;
}

export interface UndoRequest {
  type: 'undo';
  session_id: string;
  correlation_id?: number;
}

export type ClientMessage =
  | HelloRequest
  | CreateSessionRequest
  | SolveRequest
  | CommitRequest
  | UndoRequest;

// --- server -> client -------------------------------------------------------

export interface HelloReply {
  type: 'hello';
  topology: Topology;
  solver_catalog: number[][];
  correlation_id?: number;
}

export interface SessionReply {
  type: 'session';
  session_id: string;
  pose: number[];
  topology: Topology;
  correlation_id?: number;
}

export interface ResidualEntry {
  joint: number;
  distance: number;
}

export interface SolvedReply {
  type: 'solved';
  poses: Record<string, number[]>;
  residuals: Record<string, ResidualEntry[]>;
  solve_time_ms: number;
  correlation_id?: number;
}

export interface CommittedReply {
  type: 'committed';
  pose: number[];
  correlation_id?: number;
}

export interface PoseReply {
  type: 'pose';
  pose: number[];
  correlation_id?: number;
}

export interface ErrorReply {
  type: 'error';
  message: string;
  correlation_id?: number;
}

export type ServerMessage =
  | HelloReply
  | SessionReply
  | SolvedReply
  | CommittedReply
  | PoseReply
  | ErrorReply;

// --- helpers ----------------------------------------------------------------

export function posePoints(pose: number[]): Vec3[] {
  if (pose.length !== POSE_DIM) {
    throw new Error(`pose must have ${POSE_DIM} values, got ${pose.length}`);
  }
  const points: Vec3[] = [];
  for (let j = 0; j < NUM_JOINTS; j++) {
    points.push([pose[3 * j], pose[3 * j + 1], pose[3 * j + 2]]);
  }
  return points;
}

/** Euclidean distance between a solved joint and its target; used to verify
 * the service-reported residuals client-side. */
export function residualOf(pose: number[], joint: number, target: Vec3): number {
  const p = posePoints(pose)[joint];
  const dx = p[0] - target[0];
  const dy = p[1] - target[1];
  const dz = p[2] - target[2];
  return Math.sqrt(dx * dx + dy * dy + dz * dz);
}
