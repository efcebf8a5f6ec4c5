"""BVH motion-capture parsing and forward kinematics.

Parses the HIERARCHY/MOTION text format and evaluates joint world
positions per frame. Rotations are Euler angles in degrees, applied in
the channel order each joint declares. Offsets stay in file units.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CHANNEL_NAMES = frozenset(
    ["Xposition", "Yposition", "Zposition", "Xrotation", "Yrotation", "Zrotation"]
)


class BvhError(ValueError):
    """Malformed BVH input. Carries the line number where parsing failed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class BvhJoint:
    name: str
    parent: int | None  # index into the joint list; None for the root
    offset: np.ndarray  # (3,) float64, file units
    channels: tuple[str, ...]  # (), 3 or 6 entries from CHANNEL_NAMES


@dataclass(frozen=True)
class BvhClip:
    joints: tuple[BvhJoint, ...]
    frame_time: float
    frames: np.ndarray  # (n_frames, total_channels) float64
    channel_offsets: tuple[int, ...] = field(default=())  # per-joint column start

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    def joint_index(self, name: str) -> int:
        for i, j in enumerate(self.joints):
            if j.name == name:
                return i
        raise KeyError(name)


class _Tokens:
    """Token stream that remembers line numbers for error reporting."""

    def __init__(self, text: str):
        self.items: list[tuple[str, int]] = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            for tok in line.split():
                self.items.append((tok, lineno))
        self.pos = 0

    def peek(self) -> str | None:
        return self.items[self.pos][0] if self.pos < len(self.items) else None

    @property
    def line(self) -> int:
        if self.pos < len(self.items):
            return self.items[self.pos][1]
        return self.items[-1][1] if self.items else 0

    def next(self) -> str:
        if self.pos >= len(self.items):
            raise BvhError("unexpected end of file", self.line)
        tok, _ = self.items[self.pos]
        self.pos += 1
        return tok

    def expect(self, want: str) -> None:
        tok = self.next()
        if tok != want:
            raise BvhError(f"expected '{want}', got '{tok}'", self.line)

    def number(self) -> float:
        tok = self.next()
        try:
            return float(tok)
        except ValueError:
            raise BvhError(f"expected a number, got '{tok}'", self.line) from None

    def integer(self) -> int:
        tok = self.next()
        try:
            return int(tok)
        except ValueError:
            raise BvhError(f"expected an integer, got '{tok}'", self.line) from None


def _parse_joint(tok: _Tokens, parent: int | None, joints: list[BvhJoint]) -> None:
    kind = tok.next()
    if kind not in ("ROOT", "JOINT", "End"):
        raise BvhError(f"expected ROOT/JOINT/End, got '{kind}'", tok.line)
    if kind == "End":
        site_tok = tok.next()  # "Site"
        name = joints[parent].name + "_End" if parent is not None else "End"
        if site_tok != "Site":
            raise BvhError(f"expected 'Site' after 'End', got '{site_tok}'", tok.line)
    else:
        name = tok.next()
    tok.expect("{")
    tok.expect("OFFSET")
    offset = np.array([tok.number(), tok.number(), tok.number()])
    channels: tuple[str, ...] = ()
    if kind != "End":
        tok.expect("CHANNELS")
        n = tok.integer()
        if n not in (3, 6):
            raise BvhError(f"channel count must be 3 or 6, got {n}", tok.line)
        chans = []
        for _ in range(n):
            c = tok.next()
            if c not in CHANNEL_NAMES:
                raise BvhError(f"unknown channel name '{c}'", tok.line)
            chans.append(c)
        channels = tuple(chans)
    index = len(joints)
    joints.append(BvhJoint(name=name, parent=parent, offset=offset, channels=channels))
    while tok.peek() != "}":
        if tok.peek() is None:
            raise BvhError("unterminated joint block", tok.line)
        _parse_joint(tok, index, joints)
    tok.expect("}")


def parse_bvh(source: str) -> BvhClip:
    """Parse a complete BVH document (HIERARCHY + MOTION sections).

    End Site blocks become channel-less leaf joints. Raises BvhError with
    the offending line on malformed input or a channel-count mismatch
    between the header and the motion rows.
    """
    tok = _Tokens(source)
    tok.expect("HIERARCHY")
    joints: list[BvhJoint] = []
    _parse_joint(tok, None, joints)
    tok.expect("MOTION")
    tok.expect("Frames:")
    n_frames = tok.integer()
    if n_frames < 1:
        raise BvhError("clip must contain at least one frame", tok.line)
    tok.expect("Frame")
    tok.expect("Time:")
    frame_time = tok.number()
    if frame_time <= 0:
        raise BvhError("frame time must be positive", tok.line)

    total_channels = sum(len(j.channels) for j in joints)
    values = np.empty((n_frames, total_channels))
    for r in range(n_frames):
        for c in range(total_channels):
            if tok.peek() is None:
                raise BvhError(
                    f"motion row {r} has fewer values than the {total_channels} "
                    "declared channels",
                    tok.line,
                )
            values[r, c] = tok.number()
    if tok.peek() is not None:
        raise BvhError(
            f"trailing motion data beyond {n_frames} frames x {total_channels} channels",
            tok.line,
        )

    offsets = []
    acc = 0
    for j in joints:
        offsets.append(acc)
        acc += len(j.channels)
    return BvhClip(
        joints=tuple(joints),
        frame_time=frame_time,
        frames=values,
        channel_offsets=tuple(offsets),
    )


def _rotation_matrix(axis: str, degrees: float) -> np.ndarray:
    a = np.radians(degrees)
    c, s = np.cos(a), np.sin(a)
    if axis == "X":
        return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])
    if axis == "Y":
        return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


def forward_kinematics(clip: BvhClip, frame: int) -> np.ndarray:
    """World positions of every joint at `frame`, as an (n_joints, 3) array.

    Composes parent transforms root-to-leaf; rotation channels are applied
    in their declared order, translations in file units.
    """
    if not 0 <= frame < clip.n_frames:
        raise IndexError(f"frame {frame} out of range (clip has {clip.n_frames})")
    row = clip.frames[frame]
    n = len(clip.joints)
    positions = np.zeros((n, 3))
    rotations = [np.eye(3) for _ in range(n)]
    for i, joint in enumerate(clip.joints):
        translation = joint.offset.copy()
        local_rot = np.eye(3)
        base = clip.channel_offsets[i]
        for k, chan in enumerate(joint.channels):
            value = row[base + k]
            axis, kind = chan[0], chan[1:]
            if kind == "position":
                translation["XYZ".index(axis)] += value
            else:
                local_rot = local_rot @ _rotation_matrix(axis, value)
        if joint.parent is None:
            positions[i] = translation
            rotations[i] = local_rot
        else:
            p = joint.parent
            positions[i] = positions[p] + rotations[p] @ translation
            rotations[i] = rotations[p] @ local_rot
    return positions


def format_hierarchy(clip: BvhClip) -> str:
    """Debug printer: indented joint tree with offsets and channel lists."""
    children: dict[int | None, list[int]] = {}
    for i, j in enumerate(clip.joints):
        children.setdefault(j.parent, []).append(i)
    lines: list[str] = []

    def walk(index: int, depth: int) -> None:
        j = clip.joints[index]
        chan = ",".join(j.channels) if j.channels else "-"
        off = " ".join(f"{v:g}" for v in j.offset)
        lines.append(f"{'  ' * depth}{j.name} [{off}] ({chan})")
        for c in children.get(index, []):
            walk(c, depth + 1)

    for root in children.get(None, []):
        walk(root, 0)
    return "\n".join(lines)
