"""Training dataset: normalization stats, splits, pair sampling, NPK1 file I/O.

Normalization is per-feature (subtract mean, divide by std) with stats
computed over the training split only. Training pairs for the solvers are
two distinct frames of the same clip.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from posekit.skeleton import CanonicalClip, POSE_DIM

STD_FLOOR = 1e-6
MAGIC = b"NPK1"
# Clips whose worst per-frame joint displacement exceeds this are dropped
# as jittery (automatic proxy for a manual cleanup pass).
JITTER_THRESHOLD_M = 0.3


@dataclass(frozen=True)
class NormStats:
    mean: np.ndarray  # (63,) float32
    std: np.ndarray  # (63,) float32, floored at STD_FLOOR

    def __post_init__(self):
        if self.mean.shape != (POSE_DIM,) or self.std.shape != (POSE_DIM,):
            raise ValueError(f"stats must have {POSE_DIM} features")
        if np.any(self.std <= 0):
            raise ValueError("std must be positive")


def compute_stats(poses: np.ndarray) -> NormStats:
    """Per-feature mean and population std over an (n, 63) pose block."""
    poses = np.asarray(poses, dtype=np.float64)
    if poses.ndim != 2 or poses.shape[0] < 2:
        raise ValueError("need at least 2 poses to compute stats")
    mean = poses.mean(axis=0)
    std = np.maximum(poses.std(axis=0), STD_FLOOR)
    return NormStats(mean=mean.astype(np.float32), std=std.astype(np.float32))


def normalize(pose: np.ndarray, stats: NormStats) -> np.ndarray:
    return ((np.asarray(pose) - stats.mean) / stats.std).astype(np.float32)


def denormalize(pose: np.ndarray, stats: NormStats) -> np.ndarray:
    return (np.asarray(pose) * stats.std + stats.mean).astype(np.float32)


def is_jittery(clip: CanonicalClip, threshold: float = JITTER_THRESHOLD_M) -> bool:
    """True if any joint moves more than `threshold` meters between frames."""
    if clip.poses.shape[0] < 2:
        return False
    deltas = np.diff(clip.poses.reshape(clip.poses.shape[0], -1, 3), axis=0)
    return bool(np.linalg.norm(deltas, axis=2).max() > threshold)


@dataclass
class PoseDataset:
    """Immutable after build; stats come from train-tagged clips only."""

    clips: list[CanonicalClip]
    train_mask: np.ndarray  # (n_clips,) bool
    stats: NormStats = field(init=False)

    def __post_init__(self):
        if not self.clips:
            raise ValueError("dataset needs at least one clip")
        self.train_mask = np.asarray(self.train_mask, dtype=bool)
        if self.train_mask.shape != (len(self.clips),):
            raise ValueError("train mask length must match clip count")
        if not self.train_mask.any():
            raise ValueError("at least one clip must be tagged train")
        self.stats = compute_stats(self.train_poses())

    @classmethod
    def build(
        cls,
        clips: list[CanonicalClip],
        validation_fraction: float = 0.05,
        seed: int = 0,
    ) -> "PoseDataset":
        """Whole-clip train/validation split, seeded; frame-level splits
        would leak near-duplicate poses."""
        n = len(clips)
        rng = np.random.default_rng(seed)
        order = rng.permutation(n)
        n_val = min(int(round(n * validation_fraction)), n - 1)
        mask = np.ones(n, dtype=bool)
        mask[order[:n_val]] = False
        return cls(clips=clips, train_mask=mask)

    def _poses(self, train: bool) -> np.ndarray:
        blocks = [
            c.poses
            for c, m in zip(self.clips, self.train_mask)
            if bool(m) == train
        ]
        if not blocks:
            return np.empty((0, POSE_DIM), dtype=np.float32)
        return np.concatenate(blocks, axis=0)

    def train_poses(self) -> np.ndarray:
        return self._poses(train=True)

    def validation_poses(self) -> np.ndarray:
        return self._poses(train=False)

    @property
    def n_poses(self) -> int:
        return sum(c.poses.shape[0] for c in self.clips)

    def sample_training_pair(
        self, rng: np.random.Generator
    ) -> tuple[np.ndarray, np.ndarray, int]:
        """One (x, x') pair from the same train clip, distinct frames."""
        x, x_prime, clip_ids = self.sample_training_pairs(rng, 1)
        return x[0], x_prime[0], int(clip_ids[0])

    def sample_training_pairs(
        self, rng: np.random.Generator, count: int
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Vectorized batch of same-clip pairs: clips uniform, then a
        uniform ordered frame pair with distinct indices. Single-pose
        clips are skipped."""
        eligible = [
            i
            for i, (c, m) in enumerate(zip(self.clips, self.train_mask))
            if m and c.poses.shape[0] >= 2
        ]
        if not eligible:
            raise ValueError("no train clip has at least 2 poses")
        clip_ids = np.array(eligible)[rng.integers(0, len(eligible), size=count)]
        x = np.empty((count, POSE_DIM), dtype=np.float32)
        x_prime = np.empty((count, POSE_DIM), dtype=np.float32)
        for k, ci in enumerate(clip_ids):
            n = self.clips[ci].poses.shape[0]
            i = int(rng.integers(0, n))
            j = int(rng.integers(0, n - 1))
            if j >= i:
                j += 1
            x[k] = self.clips[ci].poses[i]
            x_prime[k] = self.clips[ci].poses[j]
        return x, x_prime, clip_ids


def save_dataset(dataset: PoseDataset, path: str) -> None:
    """NPK1 binary layout, little-endian:

    magic "NPK1" | u32 pose count | u32 feature count | mean+std (2x63 f32)
    | u32 clip count | per clip: u32 offset, u32 length, u8 train flag
    | contiguous f32 pose block.
    """
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", dataset.n_poses, POSE_DIM))
        f.write(dataset.stats.mean.astype("<f4").tobytes())
        f.write(dataset.stats.std.astype("<f4").tobytes())
        f.write(struct.pack("<I", len(dataset.clips)))
        offset = 0
        for clip, train in zip(dataset.clips, dataset.train_mask):
            n = clip.poses.shape[0]
            f.write(struct.pack("<IIB", offset, n, int(train)))
            offset += n
        for clip in dataset.clips:
            f.write(clip.poses.astype("<f4").tobytes())


def load_dataset(path: str) -> PoseDataset:
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] != MAGIC:
        raise ValueError(f"not an NPK1 dataset file: {path}")
    pos = 4
    n_poses, n_feat = struct.unpack_from("<II", data, pos)
    pos += 8
    if n_feat != POSE_DIM:
        raise ValueError(f"unexpected feature count {n_feat}")
    mean = np.frombuffer(data, dtype="<f4", count=POSE_DIM, offset=pos).copy()
    pos += 4 * POSE_DIM
    std = np.frombuffer(data, dtype="<f4", count=POSE_DIM, offset=pos).copy()
    pos += 4 * POSE_DIM
    (n_clips,) = struct.unpack_from("<I", data, pos)
    pos += 4
    index = []
    for _ in range(n_clips):
        index.append(struct.unpack_from("<IIB", data, pos))
        pos += 9
    block = np.frombuffer(
        data, dtype="<f4", count=n_poses * POSE_DIM, offset=pos
    ).reshape(n_poses, POSE_DIM)
    clips = []
    mask = np.empty(n_clips, dtype=bool)
    for i, (off, length, train) in enumerate(index):
        clips.append(
            CanonicalClip(
                poses=block[off : off + length].copy(),
                source_id=f"clip{i:04d}",
                frame_time=1 / 60,
            )
        )
        mask[i] = bool(train)
    ds = PoseDataset(clips=clips, train_mask=mask)
    # Stats recomputed from train clips must match what was stored.
    if not (
        np.allclose(ds.stats.mean, mean, atol=1e-4)
        and np.allclose(ds.stats.std, std, atol=1e-4)
    ):
        raise ValueError("stored stats disagree with train-split recomputation")
    return ds
