"""Interactive solve service: WebSocket endpoint with per-session pose state.

Messages are JSON texts over a persistent socket. Sessions hold the
committed pose and an undo stack; solve requests are stateless previews
and never mutate the session. Every response echoes the request's
correlation_id when present.

Message types (client -> server): hello, create_session, solve, commit,
undo. Server replies: hello, session, solved, committed, pose, error.
All coordinates are meters, root-relative, Y-up; poses are flat 63-float
arrays in canonical joint order.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from posekit.dataset import denormalize
from posekit.fabrik import FabrikConfig, fabrik_solve_fullbody
from posekit.skeleton import POSE_DIM
from posekit.solver import SolverSystem, TargetSpec

UNDO_DEPTH = 32


class ProtocolError(ValueError):
    pass


def _require_pose(values) -> np.ndarray:
    pose = np.asarray(values, dtype=np.float64)
    if pose.shape != (POSE_DIM,):
        raise ProtocolError(f"pose must be a flat list of {POSE_DIM} numbers")
    if not np.all(np.isfinite(pose)):
        raise ProtocolError("pose values must be finite")
    return pose


def _parse_specs(raw) -> list[TargetSpec]:
    specs = []
    for entry in raw:
        joints = tuple(int(j) for j in entry["joints"])
        positions = np.asarray(entry["positions"], dtype=np.float64)
        if not np.all(np.isfinite(positions)):
            raise ProtocolError("target positions must be finite")
        specs.append(TargetSpec(joint_indices=joints, positions=positions))
    return specs


@dataclass
class Session:
    session_id: str
    pose: np.ndarray
    undo_stack: list[np.ndarray] = field(default_factory=list)

    def commit(self, pose: np.ndarray) -> None:
        self.undo_stack.append(self.pose)
        if len(self.undo_stack) > UNDO_DEPTH:
            self.undo_stack.pop(0)
        self.pose = pose

    def undo(self) -> np.ndarray:
        if not self.undo_stack:
            raise ProtocolError("nothing to undo")
        self.pose = self.undo_stack.pop()
        return self.pose


class PoseService:
    """Holds one model set and the session table."""

    def __init__(self, system: SolverSystem, fabrik_config: FabrikConfig | None = None):
        self.system = system
        self.fabrik_config = fabrik_config or FabrikConfig()
        self.sessions: dict[str, Session] = {}
        self._ids = itertools.count(1)

    # -- message handlers -------------------------------------------------
    def _topology_payload(self) -> dict:
        topo = self.system.topology
        return {
            "joint_names": list(topo.joint_names),
            "parent": list(topo.parent),
            "reference_bone_lengths": [float(v) for v in topo.reference_bone_lengths],
        }

    def hello(self) -> dict:
        return {
            "type": "hello",
            "topology": self._topology_payload(),
            "solver_catalog": [list(key) for key in self.system.catalog()],
        }

    def create_session(self, msg: dict) -> dict:
        if "initial_pose" in msg and msg["initial_pose"] is not None:
            pose = _require_pose(msg["initial_pose"])
        else:
            # The dataset mean: the denormalized all-zero vector.
            pose = denormalize(np.zeros(POSE_DIM), self.system.stats).astype(np.float64)
        session = Session(session_id=f"s{next(self._ids)}", pose=pose)
        self.sessions[session.session_id] = session
        return {
            "type": "session",
            "session_id": session.session_id,
            "pose": pose.tolist(),
            "topology": self._topology_payload(),
        }

    def _session(self, msg: dict) -> Session:
        sid = msg.get("session_id")
        if sid not in self.sessions:
            raise ProtocolError(f"unknown session {sid!r}")
        return self.sessions[sid]

    def _residuals(self, pose: np.ndarray, specs: list[TargetSpec]) -> list[dict]:
        pts = pose.reshape(21, 3)
        out = []
        for spec in specs:
            for slot, j in enumerate(spec.joint_indices):
                out.append(
                    {
                        "joint": int(j),
                        "distance": float(
                            np.linalg.norm(pts[j] - spec.positions[slot])
                        ),
                    }
                )
        return out

    def solve(self, msg: dict) -> dict:
        session = self._session(msg)
        specs = _parse_specs(msg.get("specs", []))
        mode = msg.get("mode", "neural")
        if mode not in ("neural", "fabrik", "both"):
            raise ProtocolError(f"unknown mode {mode!r}")
        post_process = bool(msg.get("post_process", False))
        start = time.perf_counter()
        poses: dict[str, np.ndarray] = {}
        if not specs:
            poses["neural" if mode != "fabrik" else "fabrik"] = session.pose
        else:
            if mode in ("neural", "both"):
                poses["neural"] = self.system.solve(
                    session.pose, specs, post_process=post_process
                ).astype(np.float64)
            if mode in ("fabrik", "both"):
                targets = {
                    int(j): spec.positions[slot]
                    for spec in specs
                    for slot, j in enumerate(spec.joint_indices)
                }
                poses["fabrik"] = fabrik_solve_fullbody(
                    session.pose, self.system.topology, targets, self.fabrik_config
                ).astype(np.float64)
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        return {
            "type": "solved",
            "poses": {k: v.tolist() for k, v in poses.items()},
            "residuals": {k: self._residuals(v, specs) for k, v in poses.items()},
            "solve_time_ms": elapsed_ms,
        }

    def commit(self, msg: dict) -> dict:
        session = self._session(msg)
        pose = _require_pose(msg.get("pose"))
        session.commit(pose)
        return {"type": "committed", "pose": pose.tolist()}

    def undo(self, msg: dict) -> dict:
        session = self._session(msg)
        pose = session.undo()
        return {"type": "pose", "pose": pose.tolist()}

    def handle(self, msg: dict) -> dict:
        """Dispatch one message; always returns a reply carrying the
        request's correlation_id."""
        correlation_id = msg.get("correlation_id")
        try:
            kind = msg.get("type")
            if kind == "hello":
                reply = self.hello()
            elif kind == "create_session":
                reply = self.create_session(msg)
            elif kind == "solve":
                reply = self.solve(msg)
            elif kind == "commit":
                reply = self.commit(msg)
            elif kind == "undo":
                reply = self.undo(msg)
            else:
                raise ProtocolError(f"unknown message type {kind!r}")
        except (ProtocolError, ValueError, KeyError) as exc:
            reply = {"type": "error", "message": str(exc)}
        if correlation_id is not None:
            reply["correlation_id"] = correlation_id
        return reply


def create_app(service: PoseService) -> FastAPI:
    app = FastAPI(title="posekit solve service")
    app.state.service = service

    @app.websocket("/ws")
    async def websocket_endpoint(ws: WebSocket):
        await ws.accept()
        try:
            while True:
                msg = await ws.receive_json()
                await ws.send_json(service.handle(msg))
        except WebSocketDisconnect:
            pass

    @app.get("/health")
    async def health():
        return {"status": "ok", "solvers": len(service.system.solvers)}

    return app


def serve(system: SolverSystem, bind: str = "127.0.0.1", port: int = 8765) -> None:
    import uvicorn

    app = create_app(PoseService(system))
    uvicorn.run(app, host=bind, port=port, log_level="warning")
