"""FABRIK chain and full-body solving, plus the bone-length post-process.

The chain solver is the classic forward-and-backward reaching iteration.
The full-body solver decomposes the skeleton into five limb chains with
sub-base reconciliation and applies no joint orientation constraints.
The post-process is a single root-outward backward step restoring
reference bone lengths.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from posekit.skeleton import (
    NUM_JOINTS,
    POSE_DIM,
    SkeletonTopology,
    pose_to_points,
    reference_pose,
)


@dataclass
class FabrikConfig:
    tolerance: float = 1e-3  # meters
    max_iterations: int = 20

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class KinematicChain:
    """Ordered joint positions from base to end effector with fixed
    segment lengths."""

    positions: np.ndarray  # (n, 3)
    lengths: np.ndarray = field(default=None)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64)
        if self.positions.ndim != 2 or self.positions.shape[0] < 2:
            raise ValueError("chain needs at least 2 joints")
        measured = np.linalg.norm(np.diff(self.positions, axis=0), axis=1)
        if self.lengths is None:
            self.lengths = measured
        else:
            self.lengths = np.asarray(self.lengths, dtype=np.float64)
            if np.any(np.abs(self.lengths - measured) > 1e-6):
                raise ValueError("segment lengths disagree with joint positions")
        if np.any(self.lengths <= 0):
            raise ValueError("segment lengths must be positive")

    @property
    def reach(self) -> float:
        return float(self.lengths.sum())


def _place(origin: np.ndarray, toward: np.ndarray, length: float) -> np.ndarray:
    direction = toward - origin
    norm = np.linalg.norm(direction)
    if norm < 1e-12:
        direction = np.array([1.0, 0.0, 0.0])
        norm = 1.0
    return origin + direction * (length / norm)


def _backward_pass(points: np.ndarray, lengths: np.ndarray, target: np.ndarray) -> None:
    points[-1] = target
    for i in range(len(points) - 2, -1, -1):
        points[i] = _place(points[i + 1], points[i], lengths[i])


def _forward_pass(points: np.ndarray, lengths: np.ndarray, base: np.ndarray) -> None:
    points[0] = base
    for i in range(1, len(points)):
        points[i] = _place(points[i - 1], points[i], lengths[i - 1])


def _two_arm_fallback(
    points: np.ndarray, lengths: np.ndarray, target: np.ndarray
) -> np.ndarray | None:
    """Analytic rescue for fold targets FABRIK creeps toward: split the
    chain into two straight arms meeting at an elbow on the intersection
    of the spheres around base and target. Exact lengths, end effector
    exactly on target. Returns None when no split admits an elbow."""
    base = points[0]
    span = target - base
    dist = np.linalg.norm(span)
    if dist < 1e-9:
        target = target + np.array([1e-9, 0.0, 0.0])
        span = target - base
        dist = np.linalg.norm(span)
    u = span / dist
    # perpendicular direction, biased toward the chain's current bend
    mid = points[len(points) // 2] - base
    v = mid - (mid @ u) * u
    if np.linalg.norm(v) < 1e-9:
        v = np.array([0.0, 1.0, 0.0]) - u[1] * u
    v /= np.linalg.norm(v)
    n = len(lengths)
    splits = sorted(range(1, n), key=lambda k: abs(lengths[:k].sum() - lengths[k:].sum()))
    for k in splits:
        a_len = lengths[:k].sum()
        b_len = lengths[k:].sum()
        if not abs(a_len - b_len) <= dist <= a_len + b_len:
            continue
        along = (a_len**2 - b_len**2 + dist**2) / (2 * dist)
        height = np.sqrt(max(a_len**2 - along**2, 0.0))
        elbow = base + along * u + height * v
        out = points.copy()
        arm1 = (elbow - base) / a_len
        cursor = base
        for i in range(k):
            cursor = cursor + arm1 * lengths[i]
            out[i + 1] = cursor
        arm2 = (target - elbow) / b_len
        for i in range(k, n):
            cursor = cursor + arm2 * lengths[i]
            out[i + 1] = cursor
        return out
    return None


def fabrik_solve_chain(
    chain: KinematicChain, target: np.ndarray, config: FabrikConfig | None = None
) -> tuple[KinematicChain, int]:
    """Solve one chain toward a 3D target. The base never moves and all
    segment lengths are preserved. An unreachable target is a defined
    outcome: the chain extends straight toward it."""
    config = config or FabrikConfig()
    target = np.asarray(target, dtype=np.float64)
    points = chain.positions.copy()
    lengths = chain.lengths
    base = points[0].copy()
    if np.linalg.norm(target - base) > chain.reach:
        for i in range(1, len(points)):
            points[i] = _place(points[i - 1], target, lengths[i - 1])
        return KinematicChain(positions=points, lengths=lengths), 1
    iterations = 0
    while (
        np.linalg.norm(points[-1] - target) > config.tolerance
        and iterations < config.max_iterations
    ):
        _backward_pass(points, lengths, target)
        _forward_pass(points, lengths, base)
        iterations += 1
    if np.linalg.norm(points[-1] - target) > config.tolerance:
        rescued = _two_arm_fallback(points, lengths, target)
        if rescued is not None:
            points = rescued
    return KinematicChain(positions=points, lengths=lengths), iterations


# Full-body chain decomposition: joint index paths. Arms hang off Spine1
# (index 2), legs off Hips (0), the spine carries the head target.
_SPINE_TO_SUBBASE = [0, 1, 2]  # Hips -> Spine -> Spine1
_HEAD_CHAIN = [2, 3, 4]  # Spine1 -> Neck -> Head
_LEFT_ARM = [2, 5, 6, 7, 8]
_RIGHT_ARM = [2, 9, 10, 11, 12]
_LEFT_LEG = [0, 13, 14, 15]
_RIGHT_LEG = [0, 17, 18, 19]
_TOE_OF_FOOT = {15: 16, 19: 20}

_END_EFFECTOR_CHAINS = {
    4: _HEAD_CHAIN,
    8: _LEFT_ARM,
    12: _RIGHT_ARM,
    15: _LEFT_LEG,
    19: _RIGHT_LEG,
}


def _chain_lengths(points: np.ndarray, path: list[int]) -> np.ndarray:
    return np.linalg.norm(np.diff(points[path], axis=0), axis=1)


def fabrik_solve_fullbody(
    pose: np.ndarray,
    topo: SkeletonTopology,
    targets: dict[int, np.ndarray],
    config: FabrikConfig | None = None,
) -> np.ndarray:
    """Full-body solve: targets keyed by end-effector joint index
    (hands, feet, head). The root stays put; the Spine1 sub-base is
    reconciled by averaging the positions the targeted upper chains pull
    it toward. Bone lengths are restored exactly afterwards."""
    config = config or FabrikConfig()
    points = pose_to_points(pose)
    for joint in targets:
        if joint not in _END_EFFECTOR_CHAINS:
            raise ValueError(
                f"joint {joint} is not an end effector covered by the chain "
                "decomposition (head, hands, feet)"
            )
    upper = {
        j: t for j, t in targets.items() if _END_EFFECTOR_CHAINS[j][0] == 2
    }
    lower = {j: t for j, t in targets.items() if j not in upper}
    spine_lengths = _chain_lengths(points, _SPINE_TO_SUBBASE)
    chain_len = {j: _chain_lengths(points, _END_EFFECTOR_CHAINS[j]) for j in targets}
    rel_inner = FabrikConfig(tolerance=config.tolerance, max_iterations=2)

    for _ in range(config.max_iterations):
        if upper:
            # Backward pass of each targeted upper chain suggests where
            # Spine1 should sit; average the suggestions.
            suggestions = []
            for j, t in upper.items():
                path = _END_EFFECTOR_CHAINS[j]
                sub = points[path].copy()
                _backward_pass(sub, chain_len[j], np.asarray(t, dtype=np.float64))
                suggestions.append(sub[0])
            wanted = np.mean(suggestions, axis=0)
            spine = KinematicChain(
                positions=points[_SPINE_TO_SUBBASE], lengths=spine_lengths
            )
            solved_spine, _ = fabrik_solve_chain(spine, wanted, rel_inner)
            delta = solved_spine.positions - points[_SPINE_TO_SUBBASE]
            # Untargeted upper-body joints ride along with the sub-base.
            for path in (_HEAD_CHAIN, _LEFT_ARM, _RIGHT_ARM):
                points[path[1:]] += delta[-1]
            points[_SPINE_TO_SUBBASE] = solved_spine.positions
            for j, t in upper.items():
                path = _END_EFFECTOR_CHAINS[j]
                chain = KinematicChain(positions=points[path], lengths=chain_len[j])
                solved, _ = fabrik_solve_chain(chain, np.asarray(t), rel_inner)
                points[path] = solved.positions
        for j, t in lower.items():
            path = _END_EFFECTOR_CHAINS[j]
            foot = path[-1]
            toe_offset = points[_TOE_OF_FOOT[foot]] - points[foot]
            chain = KinematicChain(positions=points[path], lengths=chain_len[j])
            solved, _ = fabrik_solve_chain(chain, np.asarray(t), rel_inner)
            points[path] = solved.positions
            points[_TOE_OF_FOOT[foot]] = points[foot] + toe_offset
        done = all(
            np.linalg.norm(points[j] - np.asarray(t)) <= config.tolerance
            for j, t in targets.items()
        )
        if done:
            break

    input_lengths = _pose_bone_lengths(pose_to_points(pose), topo)
    return bone_length_postprocess(
        points.reshape(POSE_DIM), input_lengths, topo
    )


def _pose_bone_lengths(points: np.ndarray, topo: SkeletonTopology) -> np.ndarray:
    parents = np.array(topo.parent[1:])
    return np.linalg.norm(points[1:] - points[parents], axis=1)


def bone_length_postprocess(
    generated: np.ndarray,
    reference_lengths: np.ndarray,
    topo: SkeletonTopology,
) -> np.ndarray:
    """Single root-outward backward step: each joint is pulled to exactly
    its reference distance from its (already fixed) parent, along the
    direction from that parent to the joint's generated position. The root
    never moves. Coincident parent/child falls back to the T-pose bone
    direction."""
    points = pose_to_points(generated).copy()
    reference_lengths = np.asarray(reference_lengths, dtype=np.float64)
    if reference_lengths.shape != (NUM_JOINTS - 1,):
        raise ValueError(f"need {NUM_JOINTS - 1} reference lengths")
    ref_pose = reference_pose()
    out = points.copy()
    for i in range(1, NUM_JOINTS):
        p = topo.parent[i]
        direction = points[i] - out[p]
        norm = np.linalg.norm(direction)
        if norm < 1e-12:
            direction = ref_pose[i] - ref_pose[p]
            norm = np.linalg.norm(direction)
        out[i] = out[p] + direction * (reference_lengths[i - 1] / norm)
    return out.reshape(POSE_DIM)
