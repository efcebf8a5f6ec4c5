// Browser entry point: owns the canvas, the socket, and the UI state loop.
// All pose data comes from service responses; the only thing edited locally
// is target positions while dragging.

import { OrbitCamera } from './camera.js';
import { PoseConnection, Transport } from './connection.js';
import { DragController } from './drag.js';
import { renderScene, Scene } from './renderer.js';
import type {
  HelloReply,
  SessionReply,
  SolveMode,
  Topology,
} from './protocol.js';
import { posePoints } from './protocol.js';

interface AppState {
  topology: Topology;
  catalog: number[][];
  sessionId: string;
  initialPose: number[];
  committedPose: number[];
  /** Poses currently displayed; falls back to the committed pose when a
   * preview response is missing or late. */
  scene: Scene;
  mode: SolveMode;
  postProcess: boolean;
}

function toast(message: string): void {
  const el = document.createElement('div');
  el.className = 'toast';
  el.textContent = message;
  document.body.appendChild(el);
  setTimeout(() => el.remove(), 2500);
}

function browserTransport(url: string, onText: (text: string) => void): Promise<Transport> {
  return new Promise((resolve, reject) => {
    const socket = new WebSocket(url);
    socket.onmessage = (event) => onText(String(event.data));
    socket.onopen = () =>
      resolve({ send: (text) => socket.send(text), close: () => socket.close() });
    socket.onerror = () => reject(new Error(`cannot connect to ${url}`));
  });
}

function pickJoint(
  camera: OrbitCamera,
  pose: number[],
  x: number,
  y: number,
): number | null {
  let best: number | null = null;
  let bestDist = 14; // pixels
  posePoints(pose).forEach((p, j) => {
    const projected = camera.project(p);
    if (projected === null) return;
    const d = Math.hypot(projected.x - x, projected.y - y);
    if (d < bestDist) {
      bestDist = d;
      best = j;
    }
  });
  return best;
}

export async function startApp(): Promise<void> {
  const params = new URLSearchParams(location.search);
  const url = params.get('service') ?? 'ws://127.0.0.1:8765/ws';

  const canvas = document.getElementById('scene') as HTMLCanvasElement;
  const ctx = canvas.getContext('2d')!;
  const camera = new OrbitCamera({ width: canvas.width, height: canvas.height });

  let connection!: PoseConnection;
  const transport = await browserTransport(url, (text) => connection.handleText(text));
  connection = new PoseConnection(transport);

  const hello = (await connection.request({ type: 'hello' })) as HelloReply;
  const session = (await connection.request({
    type: 'create_session',
  })) as SessionReply;

  const state: AppState = {
    topology: hello.topology,
    catalog: hello.solver_catalog,
    sessionId: session.session_id,
    initialPose: session.pose,
    committedPose: session.pose,
    scene: { poses: { neural: session.pose }, targets: [] },
    mode: 'neural',
    postProcess: false,
  };

  const draw = () =>
    renderScene(ctx, camera, { ...state.scene, ghost: state.committedPose }, state.topology);

  connection.onPreview = (reply) => {
    state.scene.poses = reply.poses;
    draw();
  };
  connection.onError = (reply) => toast(reply.message);

  const drag = new DragController({
    camera,
    connection,
    catalog: state.catalog,
    sessionId: state.sessionId,
    onHint: toast,
    onTargetsChanged: (targets) => {
      state.scene.targets = targets;
      draw();
    },
  });

  // --- pointer handling -----------------------------------------------------
  let orbiting = false;
  let lastX = 0;
  let lastY = 0;

  canvas.addEventListener('pointerdown', (event) => {
    const rect = canvas.getBoundingClientRect();
    const x = event.clientX - rect.left;
    const y = event.clientY - rect.top;
    lastX = x;
    lastY = y;
    if (event.button === 0) {
      const joint = pickJoint(camera, displayedPose(), x, y);
      if (joint === null || !drag.begin(joint, displayedPose())) orbiting = true;
    } else {
      orbiting = true;
    }
    canvas.setPointerCapture(event.pointerId);
  });

  canvas.addEventListener('pointermove', (event) => {
    const rect = canvas.getBoundingClientRect();
    const x = event.clientX - rect.left;
    const y = event.clientY - rect.top;
    const dx = x - lastX;
    const dy = y - lastY;
    lastX = x;
    lastY = y;
    if (drag.dragging) {
      drag.move(dx, dy);
    } else if (orbiting) {
      camera.orbit(-dx * 0.008, dy * 0.008);
      draw();
    }
  });

  canvas.addEventListener('pointerup', () => {
    drag.end();
    orbiting = false;
  });

  canvas.addEventListener('wheel', (event) => {
    event.preventDefault();
    camera.zoom(event.deltaY > 0 ? 1.1 : 1 / 1.1);
    draw();
  });

  // --- session controls -----------------------------------------------------
  function displayedPose(): number[] {
    return state.scene.poses.neural ?? state.scene.poses.fabrik ?? state.committedPose;
  }

  async function commitPose(pose: number[]): Promise<void> {
    const reply = await connection.request({
      type: 'commit',
      session_id: state.sessionId,
      pose,
    });
    if (reply.type === 'committed') {
      state.committedPose = reply.pose;
      state.scene = { poses: { neural: reply.pose }, targets: [] };
      draw();
    } else if (reply.type === 'error') {
      toast(reply.message);
    }
  }

  document.getElementById('commit')?.addEventListener('click', () => {
    void commitPose(displayedPose());
  });

  document.getElementById('undo')?.addEventListener('click', async () => {
    const reply = await connection.request({ type: 'undo', session_id: state.sessionId });
    if (reply.type === 'pose') {
      state.committedPose = reply.pose;
      state.scene = { poses: { neural: reply.pose }, targets: [] };
      draw();
    } else if (reply.type === 'error') {
      toast(reply.message);
    }
  });

  document.getElementById('reset')?.addEventListener('click', () => {
    void commitPose(state.initialPose);
  });

  const modeSelect = document.getElementById('mode') as HTMLSelectElement | null;
  modeSelect?.addEventListener('change', () => {
    state.mode = modeSelect.value as SolveMode;
    drag.mode = state.mode;
  });

  const postToggle = document.getElementById('post') as HTMLInputElement | null;
  postToggle?.addEventListener('change', () => {
    state.postProcess = postToggle.checked;
    drag.postProcess = state.postProcess;
  });

  const residuals = document.getElementById('residuals');
  const basePreview = connection.onPreview;
  connection.onPreview = (reply) => {
    basePreview?.(reply);
    if (residuals) {
      const rows = Object.entries(reply.residuals).flatMap(([label, entries]) =>
        entries.map((r) => `${label} joint ${r.joint}: ${r.distance.toFixed(3)} m`),
      );
      residuals.textContent = rows.join('\n');
    }
  };

  draw();
  toast(`connected; solvers: ${state.catalog.map((c) => c.join('+')).join(', ')}`);
}

if (typeof document !== 'undefined' && document.getElementById('scene')) {
  startApp().catch((err) => toast(String(err)));
}

// Targets for future work, kept out of scope deliberately: timeline editing,
// multi-character scenes, sketch/VR input.
export {};
