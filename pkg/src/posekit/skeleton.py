"""Canonical 21-joint skeleton, retargeting, and root-relative poses.

A pose is 21 joint positions in meters, flattened to 63 floats in
canonical joint order, expressed relative to the pelvis projected onto
the floor plane (Y-up).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from posekit.bvh import BvhClip, forward_kinematics

NUM_JOINTS = 21
POSE_DIM = 3 * NUM_JOINTS

_JOINT_NAMES = (
    "Hips",
    "Spine",
    "Spine1",
    "Neck",
    "Head",
    "LeftShoulder",
    "LeftArm",
    "LeftForeArm",
    "LeftHand",
    "RightShoulder",
    "RightArm",
    "RightForeArm",
    "RightHand",
    "LeftUpLeg",
    "LeftLeg",
    "LeftFoot",
    "LeftToeBase",
    "RightUpLeg",
    "RightLeg",
    "RightFoot",
    "RightToeBase",
)

_PARENTS = (-1, 0, 1, 2, 3, 2, 5, 6, 7, 2, 9, 10, 11, 0, 13, 14, 15, 0, 17, 18, 19)

# T-pose joint offsets from parent, meters, for a ~1.7 m figure.
_REFERENCE_OFFSETS = np.array(
    [
        [0.00, 0.95, 0.00],  # Hips (world position of the root)
        [0.00, 0.13, 0.00],  # Spine
        [0.00, 0.16, 0.00],  # Spine1
        [0.00, 0.14, 0.00],  # Neck
        [0.00, 0.16, 0.00],  # Head
        [0.09, 0.10, 0.00],  # LeftShoulder
        [0.12, 0.00, 0.00],  # LeftArm
        [0.28, 0.00, 0.00],  # LeftForeArm
        [0.26, 0.00, 0.00],  # LeftHand
        [-0.09, 0.10, 0.00],  # RightShoulder
        [-0.12, 0.00, 0.00],  # RightArm
        [-0.28, 0.00, 0.00],  # RightForeArm
        [-0.26, 0.00, 0.00],  # RightHand
        [0.10, -0.05, 0.00],  # LeftUpLeg
        [0.00, -0.42, 0.00],  # LeftLeg
        [0.00, -0.42, 0.00],  # LeftFoot
        [0.00, -0.06, 0.13],  # LeftToeBase
        [-0.10, -0.05, 0.00],  # RightUpLeg
        [0.00, -0.42, 0.00],  # RightLeg
        [0.00, -0.42, 0.00],  # RightFoot
        [0.00, -0.06, 0.13],  # RightToeBase
    ]
)


@dataclass(frozen=True)
class SkeletonTopology:
    joint_names: tuple[str, ...]
    parent: tuple[int, ...]  # root = -1
    reference_bone_lengths: np.ndarray  # (20,) meters, edge i = joint i+1 -> parent

    def __post_init__(self):
        if len(self.joint_names) != NUM_JOINTS or len(self.parent) != NUM_JOINTS:
            raise ValueError(f"topology must have exactly {NUM_JOINTS} joints")
        if self.parent[0] != -1 or any(
            not 0 <= p < i for i, p in enumerate(self.parent[1:], start=1)
        ):
            raise ValueError("parent indices must form a tree with parents first")
        if np.any(self.reference_bone_lengths <= 0):
            raise ValueError("bone lengths must be positive")

    def joint_index(self, name: str) -> int:
        return self.joint_names.index(name)


def reference_pose() -> np.ndarray:
    """Root-relative T-pose positions, (21, 3) meters."""
    pos = np.zeros((NUM_JOINTS, 3))
    for i in range(NUM_JOINTS):
        p = _PARENTS[i]
        pos[i] = _REFERENCE_OFFSETS[i] + (pos[p] if p >= 0 else 0.0)
    return pos


def canonical_topology() -> SkeletonTopology:
    """The fixed 21-joint skeleton, identical on every call."""
    pose = reference_pose()
    lengths = np.array(
        [np.linalg.norm(pose[i] - pose[_PARENTS[i]]) for i in range(1, NUM_JOINTS)]
    )
    return SkeletonTopology(
        joint_names=_JOINT_NAMES, parent=_PARENTS, reference_bone_lengths=lengths
    )


def to_root_relative(world_positions: np.ndarray, up_axis: str = "Y") -> np.ndarray:
    """Root-relative pose vector from 21 world positions.

    Subtracts the pelvis projected onto the floor plane from every joint,
    so horizontal translation is removed and height is preserved.
    """
    pos = np.asarray(world_positions, dtype=np.float64).reshape(NUM_JOINTS, 3)
    if not np.all(np.isfinite(pos)):
        raise ValueError("world positions must be finite")
    if up_axis not in ("Y", "Z"):
        raise ValueError(f"unsupported up axis {up_axis!r}")
    up = 1 if up_axis == "Y" else 2
    root = pos[0].copy()
    root[up] = 0.0
    return (pos - root).reshape(POSE_DIM).astype(np.float32)


def pose_to_points(pose: np.ndarray) -> np.ndarray:
    """View a 63-float pose vector as (21, 3) joint positions."""
    pose = np.asarray(pose)
    if pose.size != POSE_DIM:
        raise ValueError(f"pose must have {POSE_DIM} values, got {pose.size}")
    return pose.reshape(NUM_JOINTS, 3).astype(np.float64)


def bone_lengths(pose: np.ndarray, topo: SkeletonTopology) -> np.ndarray:
    """Euclidean child-to-parent distance for all 20 bones, canonical order."""
    pts = pose_to_points(pose)
    parents = np.array(topo.parent[1:])
    return np.linalg.norm(pts[1:] - pts[parents], axis=1)


@dataclass(frozen=True)
class JointMapping:
    """Maps canonical joint names to source skeleton names.

    Loaded from plain-text files: one `canonical = source` line per joint,
    plus `unit_scale = <float>` and `up_axis = Y|Z` headers.
    """

    names: dict[str, str]
    unit_scale: float
    up_axis: str = "Y"

    @classmethod
    def identity(cls, unit_scale: float = 1.0) -> "JointMapping":
        return cls(names={n: n for n in _JOINT_NAMES}, unit_scale=unit_scale)

    @classmethod
    def parse(cls, text: str) -> "JointMapping":
        names: dict[str, str] = {}
        unit_scale = 1.0
        up_axis = "Y"
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"mapping line {lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key == "unit_scale":
                unit_scale = float(value)
                if unit_scale <= 0:
                    raise ValueError("unit_scale must be positive")
            elif key == "up_axis":
                if value not in ("Y", "Z"):
                    raise ValueError(f"up_axis must be Y or Z, got {value!r}")
                up_axis = value
            else:
                names[key] = value
        return cls(names=names, unit_scale=unit_scale, up_axis=up_axis)


class MappingError(ValueError):
    pass


@dataclass(frozen=True)
class CanonicalClip:
    poses: np.ndarray  # (n_frames, 63) float32, root-relative, meters
    source_id: str
    frame_time: float

    def __post_init__(self):
        if self.poses.ndim != 2 or self.poses.shape[1] != POSE_DIM:
            raise ValueError(f"poses must be (n, {POSE_DIM})")
        if self.poses.shape[0] == 0:
            raise ValueError("clip must contain at least one pose")


def retarget(
    clip: BvhClip,
    mapping: JointMapping,
    unit_scale: float | None = None,
    source_id: str = "",
) -> CanonicalClip:
    """Map a parsed BVH clip onto the canonical skeleton.

    FK world positions of mapped joints are scaled to meters and made
    root-relative; unmapped source joints are dropped. Z-up sources are
    rotated to Y-up before root-relativization.
    """
    scale = mapping.unit_scale if unit_scale is None else unit_scale
    missing = [n for n in _JOINT_NAMES if n not in mapping.names]
    if missing:
        raise MappingError(f"mapping missing canonical joints: {', '.join(missing)}")
    try:
        source_index = [clip.joint_index(mapping.names[n]) for n in _JOINT_NAMES]
    except KeyError as exc:
        raise MappingError(f"mapped joint {exc.args[0]!r} not found in clip") from None

    poses = np.empty((clip.n_frames, POSE_DIM), dtype=np.float32)
    for f in range(clip.n_frames):
        world = forward_kinematics(clip, f)[source_index] * scale
        if mapping.up_axis == "Z":
            # rotate Z-up to Y-up: (x, y, z) -> (x, z, -y)
            world = world[:, [0, 2, 1]] * np.array([1.0, 1.0, -1.0])
        poses[f] = to_root_relative(world)
    return CanonicalClip(poses=poses, source_id=source_id, frame_time=clip.frame_time)
