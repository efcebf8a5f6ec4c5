"""Procedural BVH clip generation for demos and desk-scale training.

Emits BVH text for the canonical 21-joint hierarchy with smooth,
band-limited random joint rotations (sums of low-frequency sinusoids), so
generated clips pass the jitter filter and span a learnable pose manifold.
"""

from __future__ import annotations

import io

import numpy as np

from posekit.skeleton import _JOINT_NAMES, _PARENTS, _REFERENCE_OFFSETS

# Per-joint rotation amplitude caps (degrees); loosely anatomical.
_AMPLITUDE = {
    "Hips": 25.0,
    "Spine": 15.0,
    "Spine1": 15.0,
    "Neck": 20.0,
    "Head": 20.0,
    "LeftShoulder": 10.0,
    "LeftArm": 55.0,
    "LeftForeArm": 55.0,
    "LeftHand": 20.0,
    "RightShoulder": 10.0,
    "RightArm": 55.0,
    "RightForeArm": 55.0,
    "RightHand": 20.0,
    "LeftUpLeg": 40.0,
    "LeftLeg": 45.0,
    "LeftFoot": 20.0,
    "LeftToeBase": 10.0,
    "RightUpLeg": 40.0,
    "RightLeg": 45.0,
    "RightFoot": 20.0,
    "RightToeBase": 10.0,
}

_END_SITES = {
    "Head": (0.0, 0.10, 0.0),
    "LeftHand": (0.08, 0.0, 0.0),
    "RightHand": (-0.08, 0.0, 0.0),
    "LeftToeBase": (0.0, 0.0, 0.05),
    "RightToeBase": (0.0, 0.0, 0.05),
}

_FPS = 60.0


def _children(index: int) -> list[int]:
    return [i for i, p in enumerate(_PARENTS) if p == index]


def _write_joint(out: io.StringIO, index: int, depth: int, scale: float) -> None:
    name = _JOINT_NAMES[index]
    pad = "  " * depth
    keyword = "ROOT" if index == 0 else "JOINT"
    out.write(f"{pad}{keyword} {name}\n{pad}{{\n")
    ox, oy, oz = _REFERENCE_OFFSETS[index] / scale
    out.write(f"{pad}  OFFSET {ox:.6f} {oy:.6f} {oz:.6f}\n")
    if index == 0:
        out.write(
            f"{pad}  CHANNELS 6 Xposition Yposition Zposition "
            "Zrotation Xrotation Yrotation\n"
        )
    else:
        out.write(f"{pad}  CHANNELS 3 Zrotation Xrotation Yrotation\n")
    kids = _children(index)
    if kids:
        for child in kids:
            _write_joint(out, child, depth + 1, scale)
    else:
        ex, ey, ez = (v / scale for v in _END_SITES.get(name, (0.0, 0.05, 0.0)))
        out.write(f"{pad}  End Site\n{pad}  {{\n")
        out.write(f"{pad}    OFFSET {ex:.6f} {ey:.6f} {ez:.6f}\n")
        out.write(f"{pad}  }}\n")
    out.write(f"{pad}}}\n")


def _smooth_signal(
    rng: np.random.Generator, t: np.ndarray, amplitude: float, n_waves: int = 2
) -> np.ndarray:
    """Sum of random low-frequency sinusoids, bounded by `amplitude`."""
    signal = np.zeros_like(t)
    for _ in range(n_waves):
        freq = rng.uniform(0.1, 0.9)
        phase = rng.uniform(0, 2 * np.pi)
        signal += rng.uniform(0.3, 1.0) * np.sin(2 * np.pi * freq * t + phase)
    peak = np.abs(signal).max()
    if peak > 0:
        signal *= amplitude * rng.uniform(0.3, 1.0) / peak
    return signal


def generate_clip(
    seed: int,
    n_frames: int = 400,
    unit_scale: float = 1.0,
) -> str:
    """One BVH document. `unit_scale` is the meters-per-file-unit factor a
    consumer would apply; offsets and translations are written in file
    units (divide meters by it)."""
    rng = np.random.default_rng(seed)
    out = io.StringIO()
    out.write("HIERARCHY\n")
    _write_joint(out, 0, 0, unit_scale)
    out.write(f"MOTION\nFrames: {n_frames}\nFrame Time: {1.0 / _FPS:.7f}\n")

    t = np.arange(n_frames) / _FPS
    columns: list[np.ndarray] = []
    # Root translation: gentle horizontal wander, slight vertical bob.
    columns.append(_smooth_signal(rng, t, 1.5) / unit_scale)
    columns.append((_smooth_signal(rng, t, 0.06)) / unit_scale)
    columns.append(_smooth_signal(rng, t, 1.5) / unit_scale)
    for index, name in enumerate(_JOINT_NAMES):
        amp = _AMPLITUDE[name]
        for _axis in range(3):
            columns.append(_smooth_signal(rng, t, amp))
    motion = np.column_stack(columns)
    for row in motion:
        out.write(" ".join(f"{v:.5f}" for v in row) + "\n")
    return out.getvalue()


def generate_corpus(
    directory: str, n_clips: int, n_frames: int = 400, seed: int = 0
) -> list[str]:
    """Write `n_clips` BVH files into `directory`; returns the file paths."""
    import os

    os.makedirs(directory, exist_ok=True)
    paths = []
    for i in range(n_clips):
        path = os.path.join(directory, f"clip_{i:03d}.bvh")
        with open(path, "w") as f:
            f.write(generate_clip(seed=seed * 100003 + i, n_frames=n_frames))
        paths.append(path)
    return paths
