// Service connection: correlation-id bookkeeping over any text transport.
//
// Two traffic classes share one socket:
//  - RPCs (hello / create_session / commit / undo) resolve a promise when the
//    reply with the matching correlation id arrives.
//  - Solve previews are fire-and-forget; replies may arrive out of order and
//    only the newest (highest correlation id not older than the last applied
//    one) reaches the preview callback. Stale replies are counted and dropped.

import type {
  ClientMessage,
  ErrorReply,
  ServerMessage,
  SolveMode,
  SolvedReply,
  TargetSpecWire,
} from './protocol.js';

export interface Transport {
  send(text: string): void;
  close(): void;
}

type Resolver = {
  resolve: (reply: ServerMessage) => void;
  reject: (err: Error) => void;
};

export class PoseConnection {
  private nextCorrelation = 1;
  private rpcWaiters = new Map<number, Resolver>();
  private previewIds = new Set<number>();
  private lastAppliedPreview = 0;
  discardedPreviews = 0;

  onPreview: ((reply: SolvedReply) => void) | null = null;
  onError: ((reply: ErrorReply) => void) | null = null;

  constructor(private readonly transport: Transport) {}

  /** Feed one raw text frame from the socket. */
  handleText(text: string): void {
    let msg: ServerMessage;
    try {
      msg = JSON.parse(text) as ServerMessage;
    } catch {
      return; // unparseable frame: ignore rather than freeze the UI loop
    }
    const cid = msg.correlation_id;
    if (cid !== undefined && this.previewIds.has(cid)) {
      this.previewIds.delete(cid);
      if (msg.type === 'error') {
        this.onError?.(msg);
        return;
      }
      if (cid > this.lastAppliedPreview && msg.type === 'solved') {
        this.lastAppliedPreview = cid;
        this.onPreview?.(msg);
      } else {
        this.discardedPreviews += 1;
      }
      return;
    }
    if (cid !== undefined && this.rpcWaiters.has(cid)) {
      const waiter = this.rpcWaiters.get(cid)!;
      this.rpcWaiters.delete(cid);
      waiter.resolve(msg);
      return;
    }
    if (msg.type === 'error') this.onError?.(msg);
  }

  request(msg: ClientMessage): Promise<ServerMessage> {
    const cid = this.nextCorrelation++;
    const framed = { ...msg, correlation_id: cid };
    return new Promise((resolve, reject) => {
      this.rpcWaiters.set(cid, { resolve, reject });
      this.transport.send(JSON.stringify(framed));
    });
  }

  /** Send a stateless solve preview; returns its correlation id. */
  sendPreview(
    sessionId: string,
    specs: TargetSpecWire[],
    mode: SolveMode = 'neural',
    postProcess = false,
  ): number {
    const cid = this.nextCorrelation++;
    this.previewIds.add(cid);
    this.transport.send(
      JSON.stringify({
        type: 'solve',
        session_id: sessionId,
        specs,
        mode,
        post_process: postProcess,
        correlation_id: cid,
      }),
    );
    return cid;
  }

  close(): void {
    const pending = [...this.rpcWaiters.values()];
    this.rpcWaiters.clear();
    for (const waiter of pending) waiter.reject(new Error('connection closed'));
    this.transport.close();
  }
}
