"""Rigid-body poses and transforms shared by every other module.

Conventions: right-handed frames, ZYX Euler angles (yaw about z, then
pitch about y, then roll about x), angles in radians normalized to
(-pi, pi].  Positive pitch tilts the body nose-down, so a robot climbing
a slope that rises along its forward axis has negative pitch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    r = math.remainder(a, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    return r


def wrap_angles(a: np.ndarray) -> np.ndarray:
    """Vectorized wrap_angle."""
    r = np.remainder(np.asarray(a, dtype=float) + math.pi, TWO_PI) - math.pi
    # remainder() puts the seam at -pi; move it to +pi
    return np.where(r <= -math.pi, r + TWO_PI, r)


def angle_diff(a: float, b: float) -> float:
    """Signed smallest difference a - b, in (-pi, pi]."""
    return wrap_angle(a - b)


@dataclass(frozen=True)
class Pose6D:
    """6-DoF pose: position in meters, roll/pitch/yaw in radians."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0

    def __post_init__(self):
        vals = (self.x, self.y, self.z, self.roll, self.pitch, self.yaw)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("pose fields must be finite")
        object.__setattr__(self, "roll", wrap_angle(self.roll))
        object.__setattr__(self, "pitch", wrap_angle(self.pitch))
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.roll, self.pitch, self.yaw])

    @classmethod
    def from_array(cls, a) -> "Pose6D":
        x, y, z, roll, pitch, yaw = (float(v) for v in a)
        return cls(x, y, z, roll, pitch, yaw)

    def to_transform(self) -> "RigidTransform":
        return RigidTransform(
            rotation_from_rpy(self.roll, self.pitch, self.yaw),
            np.array([self.x, self.y, self.z]),
        )


def rotation_from_rpy(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """3x3 rotation matrix R = Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def rpy_from_rotation(rot: np.ndarray) -> tuple[float, float, float]:
    """Inverse of rotation_from_rpy.  At the pitch=+-pi/2 singularity roll
    is set to 0 and yaw absorbs the remaining rotation."""
    sp = -rot[2, 0]
    sp = min(1.0, max(-1.0, sp))
    pitch = math.asin(sp)
    if abs(sp) > 1.0 - 1e-12:
        roll = 0.0
        yaw = math.atan2(-rot[0, 1], rot[1, 1])
    else:
        roll = math.atan2(rot[2, 1], rot[2, 2])
        yaw = math.atan2(rot[1, 0], rot[0, 0])
    return roll, pitch, yaw


class RigidTransform:
    """SE(3) transform: proper rotation (3x3) plus translation (3,)."""

    __slots__ = ("rotation", "translation")

    def __init__(self, rotation=None, translation=None):
        rot = np.eye(3) if rotation is None else np.asarray(rotation, dtype=float)
        t = np.zeros(3) if translation is None else np.asarray(translation, dtype=float)
        if rot.shape != (3, 3) or t.shape != (3,):
            raise ValueError("rotation must be 3x3 and translation length 3")
        err = np.abs(rot @ rot.T - np.eye(3)).max()
        if err > 1e-9 or abs(np.linalg.det(rot) - 1.0) > 1e-9:
            raise ValueError("rotation is not a proper rotation matrix")
        self.rotation = rot
        self.translation = t

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls()

    @classmethod
    def from_pose(cls, pose: Pose6D) -> "RigidTransform":
        return pose.to_transform()

    @classmethod
    def from_xyzrpy(cls, x, y, z, roll, pitch, yaw) -> "RigidTransform":
        return cls(rotation_from_rpy(roll, pitch, yaw), np.array([x, y, z], dtype=float))

    def to_pose(self) -> Pose6D:
        roll, pitch, yaw = rpy_from_rotation(self.rotation)
        x, y, z = (float(v) for v in self.translation)
        return Pose6D(x, y, z, roll, pitch, yaw)

    def apply(self, point) -> np.ndarray:
        """Transform a point (3,) or batch of points (N, 3)."""
        p = np.asarray(point, dtype=float)
        if p.ndim == 1:
            return self.rotation @ p + self.translation
        return p @ self.rotation.T + self.translation

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def __repr__(self):
        x, y, z = self.translation
        roll, pitch, yaw = rpy_from_rotation(self.rotation)
        return (f"RigidTransform(x={x:.4f}, y={y:.4f}, z={z:.4f}, "
                f"roll={roll:.4f}, pitch={pitch:.4f}, yaw={yaw:.4f})")


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """a then b in a's frame: applying the result equals applying b, then a."""
    return RigidTransform(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def inverse(t: RigidTransform) -> RigidTransform:
    rt = t.rotation.T
    return RigidTransform(rt, -(rt @ t.translation))


def relative_motion(prev: RigidTransform, curr: RigidTransform) -> RigidTransform:
    """Body-frame displacement from prev to curr: inverse(prev) o curr."""
    return compose(inverse(prev), curr)


def rotation_angle(t: RigidTransform) -> float:
    """Magnitude of the rotation in radians (axis-angle)."""
    c = (np.trace(t.rotation) - 1.0) / 2.0
    return math.acos(min(1.0, max(-1.0, c)))


class Covariance6(np.ndarray):
    """6x6 covariance over (x, y, z, roll, pitch, yaw); symmetric, PSD diagonal."""

    def __new__(cls, data):
        m = np.asarray(data, dtype=float).view(cls)
        if m.shape != (6, 6):
            raise ValueError("covariance must be 6x6")
        if np.abs(m - m.T).max() > 1e-9:
            raise ValueError("covariance must be symmetric")
        if np.any(np.diag(m) < -1e-12):
            raise ValueError("covariance diagonal must be non-negative")
        return m

    @property
    def diagonal_sum(self) -> float:
        return float(np.trace(self))

    @property
    def diagonal_product(self) -> float:
        return float(np.prod(np.diag(self)))


def pose_statistics(poses, weights) -> tuple[Pose6D, Covariance6]:
    """Weighted mean pose (angles via circular mean) and weighted covariance.

    weights must be normalized to sum 1.  Covariance is computed on the
    small-angle residuals about the mean (angle residuals wrapped).
    """
    arr = np.asarray([p.to_array() if isinstance(p, Pose6D) else p for p in poses], dtype=float)
    w = np.asarray(weights, dtype=float)
    if arr.size == 0 or w.size == 0:
        raise ValueError("empty particle set")
    if arr.shape[0] != w.shape[0]:
        raise ValueError("poses and weights must have the same length")
    if abs(w.sum() - 1.0) > 1e-9:
        raise ValueError("weights must sum to 1")

    mean = np.empty(6)
    mean[:3] = w @ arr[:, :3]
    for k in range(3, 6):
        s = w @ np.sin(arr[:, k])
        c = w @ np.cos(arr[:, k])
        mean[k] = math.atan2(s, c)

    resid = arr - mean
    resid[:, 3:] = wrap_angles(resid[:, 3:])
    cov = (resid * w[:, None]).T @ resid
    cov = 0.5 * (cov + cov.T)
    return Pose6D.from_array(mean), Covariance6(cov)
