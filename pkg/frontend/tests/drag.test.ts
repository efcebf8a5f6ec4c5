import { describe, expect, it } from 'vitest';

import { OrbitCamera } from '../src/camera.js';
import { PoseConnection } from '../src/connection.js';
import { DragController } from '../src/drag.js';
import { NUM_JOINTS } from '../src/protocol.js';
import { FakeClock, FakeTransport } from './fakes.js';

const CATALOG = [[8, 12], [15, 19], [4]];

function samplePose(): number[] {
  const pose: number[] = [];
  for (let j = 0; j < NUM_JOINTS; j++) {
    pose.push(0.1 * j - 1, 0.9 + 0.02 * j, 0.05 * j);
  }
  return pose;
}

function setup(maxPerSecond = 30) {
  const transport = new FakeTransport();
  const connection = new PoseConnection(transport);
  const clock = new FakeClock();
  const hints: string[] = [];
  const drag = new DragController({
    camera: new OrbitCamera({ width: 800, height: 600 }),
    connection,
    catalog: CATALOG,
    sessionId: 's1',
    maxRequestsPerSecond: maxPerSecond,
    clock,
    onHint: (m) => hints.push(m),
  });
  return { transport, connection, clock, drag, hints };
}

describe('DragController', () => {
  it('rejects joints outside the solver catalog with a hint', () => {
    const { drag, hints, transport } = setup();
    expect(drag.begin(6, samplePose())).toBe(false);
    expect(drag.dragging).toBe(false);
    expect(hints).toHaveLength(1);
    expect(transport.sent).toHaveLength(0);
  });

  it('zero delta changes nothing and sends nothing', () => {
    const { drag, transport } = setup();
    drag.begin(8, samplePose());
    const before = drag.currentSpec();
    drag.move(0, 0);
    expect(drag.currentSpec()).toEqual(before);
    expect(transport.sent).toHaveLength(0);
  });

  it('sends the full catalog entry with siblings pinned at pose positions', () => {
    const { drag, transport } = setup();
    const pose = samplePose();
    drag.begin(8, pose);
    drag.move(30, -10);
    const msg = transport.lastMessage();
    expect(msg.type).toBe('solve');
    expect(msg.specs).toHaveLength(1);
    expect(msg.specs[0].joints).toEqual([8, 12]);
    // the dragged joint moved, its sibling stayed where the pose has it
    const sibling = msg.specs[0].positions[1];
    expect(sibling).toEqual([pose[36], pose[37], pose[38]]);
    const dragged = msg.specs[0].positions[0];
    expect(dragged).not.toEqual([pose[24], pose[25], pose[26]]);
  });

  it('throttles a rapid 100-event drag to at most 30 requests per second', () => {
    const { drag, transport, clock } = setup();
    drag.begin(8, samplePose());
    for (let i = 0; i < 100; i++) {
      drag.move(1, 1);
      clock.advance(10); // one second of 100 Hz pointer events
    }
    expect(transport.sent.length).toBeLessThanOrEqual(30);
    expect(transport.sent.length).toBeGreaterThan(20);
  });

  it('drag end sends one final request at the exact release position', () => {
    const { drag, transport, clock } = setup();
    drag.begin(4, samplePose());
    drag.move(5, 5);
    drag.move(5, 5); // second move is pending in the throttle
    const spec = drag.end();
    clock.advance(1000); // pending trailing emission was cancelled
    const solves = transport.sentMessages().filter((m) => m.type === 'solve');
    expect(solves).toHaveLength(2); // leading edge + final on release
    expect(solves[solves.length - 1].specs[0]).toEqual(spec);
    expect(drag.dragging).toBe(false);
  });

  it('carries mode and post-process flags on requests', () => {
    const { drag, transport } = setup();
    drag.mode = 'both';
    drag.postProcess = true;
    drag.begin(8, samplePose());
    drag.move(10, 0);
    const msg = transport.lastMessage();
    expect(msg.mode).toBe('both');
    expect(msg.post_process).toBe(true);
  });
});
