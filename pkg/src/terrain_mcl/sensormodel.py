"""Range-sensor abstraction and the per-beam observation model.

Readings are 3D obstacle detections in the sensor frame.  Max-range beams
are kept in the scan as unit direction vectors flagged infinite, so the
expected range at a pose hypothesis can still be ray-cast for them.

Per-beam weight factor: a Gaussian over the difference between measured
and expected range, floored at its own value three sigma out so a single
discordant beam cannot annihilate a particle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import raycast
from .geom import Pose6D, RigidTransform, compose
from .worldmap import INFINITE, OccupancyOctree, cast_ray

# error level (in sigmas) at which the per-beam probability stops decreasing
FLOOR_SIGMAS = 3.0


@dataclass(frozen=True)
class SensorSpec:
    """Static description of one range sensor."""

    sensor_id: str
    extrinsic: RigidTransform = field(default_factory=RigidTransform.identity)
    sigma: float = 0.05
    max_range: float = 10.0
    decimation: int = 1
    pattern: str = "lidar2d"  # beam pattern used by the simulator
    enabled: bool = True

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.max_range <= 0:
            raise ValueError("max_range must be positive")
        if self.decimation < 1:
            raise ValueError("decimation must be >= 1")

    def hit_threshold(self, override=None) -> float:
        return float(override) if override is not None else 2.0 * self.sigma

    def log_floor(self) -> float:
        return _log_peak(self.sigma) - 0.5 * FLOOR_SIGMAS ** 2


@dataclass(frozen=True)
class RangeScan:
    """One batch of readings from a single sensor.

    points holds sensor-frame detections; rows flagged in `infinite` hold
    unit beam directions instead (max-range beams).
    """

    sensor_id: str
    timestamp: float
    points: np.ndarray
    infinite: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        inf = np.asarray(self.infinite, dtype=bool).reshape(-1)
        if pts.shape[0] != inf.shape[0]:
            raise ValueError("points and infinite flags must have equal length")
        if not np.isfinite(pts).all():
            raise ValueError("scan points must be finite (max-range beams use flags)")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "infinite", inf)

    def __len__(self):
        return self.points.shape[0]

    def decimated(self, k: int) -> "RangeScan":
        """Every k-th reading, deterministically from the first."""
        if k <= 1:
            return self
        sel = np.arange(0, len(self), k)
        return RangeScan(self.sensor_id, self.timestamp,
                         self.points[sel], self.infinite[sel])


@dataclass(frozen=True)
class BeamEvaluation:
    measured: float
    theoretic: float
    probability: float
    hit: bool


def validate_scan(scan: RangeScan, spec: SensorSpec) -> None:
    """Finite readings must lie within max_range + 3 sigma."""
    finite = ~scan.infinite
    if finite.any():
        norms = np.linalg.norm(scan.points[finite], axis=1)
        limit = spec.max_range + 3.0 * spec.sigma
        if norms.max(initial=0.0) > limit + 1e-9:
            raise ValueError(
                f"scan from {scan.sensor_id!r} has a reading beyond max range")


def measured_distance(reading) -> float:
    """Euclidean norm of a reading; INFINITE passes through."""
    if np.isscalar(reading):
        if math.isinf(reading):
            return INFINITE
        raise ValueError("reading must be a 3-vector or INFINITE")
    return float(np.linalg.norm(np.asarray(reading, dtype=float)))


def measured_distances(scan: RangeScan) -> np.ndarray:
    d = np.linalg.norm(scan.points, axis=1)
    d[scan.infinite] = INFINITE
    return d


def theoretic_distance(particle_pose: Pose6D, spec: SensorSpec, reading,
                       oc: OccupancyOctree, infinite: bool = False) -> float:
    """Expected range: ray-cast from the hypothetical sensor origin through
    the transformed reading, capped at max_range."""
    sensor = compose(particle_pose.to_transform(), spec.extrinsic)
    origin = sensor.translation
    r = np.asarray(reading, dtype=float)
    if infinite:
        target = origin + sensor.rotation @ r
    else:
        if np.linalg.norm(r) < 1e-12:
            # degenerate zero-range reading: aim along the sensor x axis
            target = origin + sensor.rotation @ np.array([1.0, 0.0, 0.0])
        else:
            target = sensor.apply(r)
    return cast_ray(oc, origin, target, spec.max_range)


def _log_peak(sigma: float) -> float:
    return -math.log(sigma * math.sqrt(2.0 * math.pi))


def beam_probability(error: float, sigma: float) -> float:
    """Gaussian density of the range error (not normalized over beams)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if error < 0:
        raise ValueError("error must be non-negative")
    return math.exp(_log_peak(sigma) - 0.5 * (error / sigma) ** 2)


def evaluate_beam(particle_pose: Pose6D, spec: SensorSpec, reading,
                  oc: OccupancyOctree, hit_threshold: float | None = None,
                  infinite: bool = False) -> BeamEvaluation:
    """Single-beam evaluation.

    Both ranges infinite: probability exactly 1 (weight unchanged), hit.
    One infinite: error is the gap between max_range and the shorter range,
    floored like any other beam; never a hit.
    Both finite: Gaussian of |measured - theoretic| (floored at the 3-sigma
    value), hit when the error is under the threshold (2 sigma by default).
    """
    thr = spec.hit_threshold(hit_threshold)
    measured = INFINITE if infinite else measured_distance(reading)
    theoretic = theoretic_distance(particle_pose, spec, reading, oc, infinite=infinite)
    floor = beam_probability(FLOOR_SIGMAS * spec.sigma, spec.sigma)
    m_inf = math.isinf(measured)
    t_inf = math.isinf(theoretic)
    if m_inf and t_inf:
        return BeamEvaluation(measured, theoretic, 1.0, True)
    if m_inf or t_inf:
        error = spec.max_range - min(measured, theoretic, spec.max_range)
        prob = max(beam_probability(error, spec.sigma), floor)
        return BeamEvaluation(measured, theoretic, prob, False)
    error = abs(measured - theoretic)
    prob = max(beam_probability(error, spec.sigma), floor)
    return BeamEvaluation(measured, theoretic, prob, error < thr)


def scan_log_update(poses: np.ndarray, spec: SensorSpec, scan: RangeScan,
                    oc: OccupancyOctree, hit_threshold: float | None = None):
    """Batched evaluate_beam over all particles for one (decimated) scan.

    Returns (dlogw, dhits, dpossible) arrays, one entry per particle row.
    Semantics match evaluate_beam beam-for-beam (see raycast kernel).
    """
    sub = scan.decimated(spec.decimation)
    grid, (gx0, gy0, gz0) = oc.dense()
    measured = measured_distances(sub)
    return raycast.beam_update_kernel(
        grid, gx0, gy0, gz0, oc.resolution,
        np.ascontiguousarray(poses, dtype=float),
        np.ascontiguousarray(spec.extrinsic.rotation),
        np.ascontiguousarray(spec.extrinsic.translation),
        np.ascontiguousarray(sub.points),
        np.ascontiguousarray(sub.infinite),
        measured,
        spec.max_range, spec.sigma,
        spec.hit_threshold(hit_threshold),
        _log_peak(spec.sigma), spec.log_floor(),
    )
