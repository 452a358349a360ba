"""Three-phase Monte Carlo localization over the dual terrain map.

Phases run at independent rates (prediction fastest, correction slower,
reseed slowest).  Each phase is a pure function from a particle set to a
new particle set; the multi-rate scheduler serializes them, and only the
correction fan-out (see sensormodel.scan_log_update) runs parallel
per-particle work.

Particle weights are multiplied per beam in log space and converted back
at normalization, since products over hundreds of beams underflow linear
doubles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geom import (Covariance6, Pose6D, RigidTransform, pose_statistics,
                   relative_motion, rotation_angle, rpy_from_rotation,
                   wrap_angles)
from .sensormodel import RangeScan, SensorSpec, scan_log_update, validate_scan
from .worldmap import ElevationGrid, OccupancyOctree, elevation_at, elevation_at_batch

_DEFAULT_NOISE = (0.05, 0.05, 0.05, 0.05, 0.05, 0.05)
_DEFAULT_JITTER = (0.05, 0.05, 0.0, 0.0, 0.0, 0.02)


@dataclass(frozen=True)
class MclConfig:
    """Filter knobs.  Rates are in Hz and translate to per-tick ratios when
    replaying a log (prediction every tick)."""

    min_particles: int = 50
    max_particles: int = 500
    odom_noise: tuple = _DEFAULT_NOISE  # std dev per unit displacement, 6 coords
    winners_pct: float = 0.1
    losers_pct: float = 0.3
    prediction_rate: float = 100.0
    correction_rate: float = 10.0
    reseed_rate: float = 0.3
    hit_threshold: float | None = None  # None -> 2 sigma of each sensor
    use_imu_orientation: bool = False
    grow_threshold: float = 0.5
    shrink_threshold: float = 0.05
    reseed_jitter: tuple = _DEFAULT_JITTER

    def __post_init__(self):
        if self.min_particles < 1 or self.min_particles > self.max_particles:
            raise ValueError("particle bounds must satisfy 1 <= min <= max")
        if not (0.0 <= self.winners_pct and 0.0 <= self.losers_pct
                and self.winners_pct + self.losers_pct <= 1.0):
            raise ValueError("winners_pct + losers_pct must be within [0, 1]")
        if min(self.prediction_rate, self.correction_rate, self.reseed_rate) <= 0:
            raise ValueError("rates must be positive")
        if len(self.odom_noise) != 6 or len(self.reseed_jitter) != 6:
            raise ValueError("odom_noise and reseed_jitter need 6 entries")


@dataclass(frozen=True)
class Particle:
    pose: Pose6D
    weight: float
    hits: int
    possible_hits: int
    off_map: bool = False


class ParticleSet:
    """Column-wise particle storage: poses (N, 6), weights, hit counters."""

    __slots__ = ("poses", "weights", "hits", "possible_hits", "off_map", "generation")

    def __init__(self, poses, weights, hits=None, possible_hits=None,
                 off_map=None, generation=0):
        n = poses.shape[0]
        self.poses = np.asarray(poses, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.hits = np.zeros(n, dtype=np.int64) if hits is None else hits
        self.possible_hits = (np.zeros(n, dtype=np.int64) if possible_hits is None
                              else possible_hits)
        self.off_map = np.zeros(n, dtype=bool) if off_map is None else off_map
        self.generation = generation

    def __len__(self):
        return self.poses.shape[0]

    @property
    def particles(self) -> list[Particle]:
        return [Particle(Pose6D.from_array(self.poses[i]), float(self.weights[i]),
                         int(self.hits[i]), int(self.possible_hits[i]),
                         bool(self.off_map[i]))
                for i in range(len(self))]


def _snap_to_terrain(poses: np.ndarray, off_map: np.ndarray, gr: ElevationGrid,
                     orient: bool, imu_orientation=None) -> None:
    """In-place z snap to the elevation layer; particles over unknown cells
    keep their z and are flagged.  Optionally re-derive roll/pitch from the
    terrain slope under each particle (or the IMU when provided)."""
    z = elevation_at_batch(gr, poses[:, :2])
    known = np.isfinite(z)
    poses[known, 2] = z[known]
    off_map[:] = ~known

    if not orient:
        return
    if imu_orientation is not None:
        poses[:, 3] = imu_orientation[0]
        poses[:, 4] = imu_orientation[1]
        return

    r = gr.resolution
    nx, ny = gr.elevation.shape
    i = np.floor(poses[:, 0] / r + 0.5).astype(np.int64) - gr.ix0
    j = np.floor(poses[:, 1] / r + 0.5).astype(np.int64) - gr.iy0
    ok = (i >= 1) & (i < nx - 1) & (j >= 1) & (j < ny - 1)
    ic = np.clip(i, 1, nx - 2)
    jc = np.clip(j, 1, ny - 2)
    e = gr.elevation
    ex1 = e[ic + 1, jc]
    ex0 = e[ic - 1, jc]
    ey1 = e[ic, jc + 1]
    ey0 = e[ic, jc - 1]
    ok &= np.isfinite(ex1) & np.isfinite(ex0) & np.isfinite(ey1) & np.isfinite(ey0)
    gx = (ex1 - ex0) / (2.0 * r)
    gy = (ey1 - ey0) / (2.0 * r)

    yaw = poses[:, 5]
    cy, sy = np.cos(yaw), np.sin(yaw)
    sx = gx * cy + gy * sy
    # body axes: x tangent along heading, z along the terrain normal
    xn = np.sqrt(1.0 + sx * sx)
    xb = np.stack([cy / xn, sy / xn, sx / xn], axis=1)
    n = np.stack([-gx, -gy, np.ones_like(gx)], axis=1)
    n /= np.linalg.norm(n, axis=1)[:, None]
    yb = np.cross(n, xb)
    pitch = np.arcsin(np.clip(-xb[:, 2], -1.0, 1.0))
    roll = np.arctan2(yb[:, 2], n[:, 2])
    poses[ok, 3] = roll[ok]
    poses[ok, 4] = pitch[ok]


def initialize(config: MclConfig, initial: Pose6D, spread, gr: ElevationGrid,
               rng: np.random.Generator) -> ParticleSet:
    """max_particles Gaussian samples around the initial pose, z snapped to
    the terrain, uniform weights, zero hit counters."""
    if math.isnan(elevation_at(gr, initial.x, initial.y)):
        raise ValueError("seed off map")
    spread = np.asarray(spread, dtype=float)
    if spread.shape != (6,):
        raise ValueError("spread needs 6 entries")
    n = config.max_particles
    poses = initial.to_array()[None, :] + rng.normal(0.0, 1.0, (n, 6)) * spread
    poses[:, 3:] = wrap_angles(poses[:, 3:])
    off_map = np.zeros(n, dtype=bool)
    _snap_to_terrain(poses, off_map, gr, orient=False)
    return ParticleSet(poses, np.full(n, 1.0 / n))


def _batch_rpy_to_rot(rpy: np.ndarray) -> np.ndarray:
    cr, sr = np.cos(rpy[:, 0]), np.sin(rpy[:, 0])
    cp, sp = np.cos(rpy[:, 1]), np.sin(rpy[:, 1])
    cy, sy = np.cos(rpy[:, 2]), np.sin(rpy[:, 2])
    rot = np.empty((rpy.shape[0], 3, 3))
    rot[:, 0, 0] = cy * cp
    rot[:, 0, 1] = cy * sp * sr - sy * cr
    rot[:, 0, 2] = cy * sp * cr + sy * sr
    rot[:, 1, 0] = sy * cp
    rot[:, 1, 1] = sy * sp * sr + cy * cr
    rot[:, 1, 2] = sy * sp * cr - cy * sr
    rot[:, 2, 0] = -sp
    rot[:, 2, 1] = cp * sr
    rot[:, 2, 2] = cp * cr
    return rot


def _batch_rot_to_rpy(rot: np.ndarray) -> np.ndarray:
    sp = np.clip(-rot[:, 2, 0], -1.0, 1.0)
    pitch = np.arcsin(sp)
    singular = np.abs(sp) > 1.0 - 1e-12
    roll = np.where(singular, 0.0, np.arctan2(rot[:, 2, 1], rot[:, 2, 2]))
    yaw = np.where(singular,
                   np.arctan2(-rot[:, 0, 1], rot[:, 1, 1]),
                   np.arctan2(rot[:, 1, 0], rot[:, 0, 0]))
    return np.stack([roll, pitch, yaw], axis=1)


def predict(ps: ParticleSet, odom_prev: RigidTransform, odom_curr: RigidTransform,
            gr: ElevationGrid, config: MclConfig, rng: np.random.Generator,
            imu_orientation=None) -> ParticleSet:
    """Advance every particle by the body-frame odometry displacement plus
    displacement-scaled Gaussian noise, then snap to the terrain."""
    u = relative_motion(odom_prev, odom_curr)
    u_rpy = rpy_from_rotation(u.rotation)
    u6 = np.array([*u.translation, *u_rpy])
    d_trans = float(np.linalg.norm(u.translation))
    d_rot = rotation_angle(u)
    scale = np.asarray(config.odom_noise, dtype=float) * np.array(
        [d_trans, d_trans, d_trans, d_rot, d_rot, d_rot])

    n = len(ps)
    noisy = u6[None, :] + rng.normal(0.0, 1.0, (n, 6)) * scale

    rot_p = _batch_rpy_to_rot(ps.poses[:, 3:])
    rot_u = _batch_rpy_to_rot(noisy[:, 3:])
    rot_new = np.einsum("nij,njk->nik", rot_p, rot_u)
    trans_new = np.einsum("nij,nj->ni", rot_p, noisy[:, :3]) + ps.poses[:, :3]

    poses = np.empty_like(ps.poses)
    poses[:, :3] = trans_new
    poses[:, 3:] = _batch_rot_to_rpy(rot_new)

    off_map = ps.off_map.copy()
    imu = imu_orientation if config.use_imu_orientation else None
    _snap_to_terrain(poses, off_map, gr, orient=True, imu_orientation=imu)
    # particles that left known terrain keep their previous z
    poses[off_map, 2] = ps.poses[off_map, 2]
    poses[:, 3:] = wrap_angles(poses[:, 3:])
    return ParticleSet(poses, ps.weights.copy(), ps.hits.copy(),
                       ps.possible_hits.copy(), off_map, ps.generation)


def correct(ps: ParticleSet, scans: list[RangeScan], specs: dict,
            oc: OccupancyOctree, config: MclConfig) -> ParticleSet:
    """Weight update per Bayes over every decimated beam of every scan;
    weights renormalized to sum 1 afterwards.

    Scans whose sensor is unknown raise; beams with both measured and
    expected range infinite leave weights exactly untouched (and count as
    hits), so a correction with only such beams is weight-neutral.
    """
    n = len(ps)
    dlogw = np.zeros(n)
    hits = ps.hits.copy()
    possible = ps.possible_hits.copy()
    touched = False
    for scan in scans:
        spec = specs.get(scan.sensor_id)
        if spec is None:
            raise ValueError(f"unknown sensor: {scan.sensor_id!r}")
        validate_scan(scan, spec)
        dw, dh, dp = scan_log_update(ps.poses, spec, scan, oc, config.hit_threshold)
        dlogw += dw
        hits += dh
        possible += dp
        if np.any(dw != 0.0):
            touched = True
        if ps.off_map.any():
            dlogw[ps.off_map] += spec.log_floor()
            touched = True

    if not touched:
        # weight-neutral correction: keep weights bitwise identical
        return ParticleSet(ps.poses.copy(), ps.weights.copy(), hits, possible,
                           ps.off_map.copy(), ps.generation)

    with np.errstate(divide="ignore"):
        logw = np.log(ps.weights) + dlogw
    m = logw.max()
    w = np.exp(logw - m)
    w /= w.sum()
    return ParticleSet(ps.poses.copy(), w, hits, possible,
                       ps.off_map.copy(), ps.generation)


def quality(ps: ParticleSet) -> float:
    """Mean fraction of agreeing beams per particle over the current
    perception window; particles that saw no beams contribute 0."""
    if len(ps) == 0:
        raise ValueError("empty particle set")
    ratios = np.where(ps.possible_hits > 0,
                      ps.hits / np.maximum(ps.possible_hits, 1), 0.0)
    return float(ratios.mean())


@dataclass(frozen=True)
class BeliefEstimate:
    mean: Pose6D
    covariance: Covariance6
    quality: float
    uncertainty_scalar: float  # product of the covariance diagonal
    uncertainty_sum: float     # linear-algebra trace, reported alongside

    def __post_init__(self):
        if not (0.0 <= self.quality <= 1.0):
            raise ValueError("quality must be within [0, 1]")


def estimate(ps: ParticleSet) -> BeliefEstimate:
    if len(ps) == 0:
        raise ValueError("empty particle set")
    w = ps.weights / ps.weights.sum()
    mean, cov = pose_statistics(ps.poses, w)
    return BeliefEstimate(mean, cov, quality(ps),
                          cov.diagonal_product, cov.diagonal_sum)


def reseed(ps: ParticleSet, config: MclConfig, uncertainty_scalar: float,
           rng: np.random.Generator) -> ParticleSet:
    """Replace the low-weight tail with jittered clones of the winner pool,
    then adapt the particle count to the uncertainty level.

    Clone source index is |round(g)| with g ~ N(0, winner_count / 2),
    clamped into the winner pool.  Hit counters reset so the quality metric
    reflects the next perception window.
    """
    n = len(ps)
    if n < 1:
        raise ValueError("empty particle set")
    order = np.argsort(-ps.weights, kind="stable")
    n_losers = int(n * config.losers_pct)
    n_winners = max(1, int(n * config.winners_pct))
    keep = order[:n - n_losers]

    jitter = np.asarray(config.reseed_jitter, dtype=float)

    def clone_rows(count: int):
        rows = np.empty((count, 6))
        weights = np.empty(count)
        flags = np.empty(count, dtype=bool)
        for k in range(count):
            g = rng.normal(0.0, n_winners / 2.0)
            wi = min(abs(int(round(g))), n_winners - 1)
            src = order[wi]
            rows[k] = ps.poses[src] + rng.normal(0.0, 1.0, 6) * jitter
            weights[k] = ps.weights[src]
            flags[k] = ps.off_map[src]
        rows[:, 3:] = wrap_angles(rows[:, 3:])
        return rows, weights, flags

    new_rows, new_w, new_f = clone_rows(n_losers)
    poses = np.vstack([ps.poses[keep], new_rows])
    weights = np.concatenate([ps.weights[keep], new_w])
    off_map = np.concatenate([ps.off_map[keep], new_f])

    # adaptive particle count: grow on high uncertainty, shrink on low
    step = max(1, int(round(0.1 * config.max_particles)))
    count = poses.shape[0]
    if uncertainty_scalar > config.grow_threshold and count < config.max_particles:
        extra = min(step, config.max_particles - count)
        rows, w_extra, f_extra = clone_rows(extra)
        poses = np.vstack([poses, rows])
        weights = np.concatenate([weights, w_extra])
        off_map = np.concatenate([off_map, f_extra])
    elif uncertainty_scalar < config.shrink_threshold and count > config.min_particles:
        drop = min(step, count - config.min_particles)
        sel = np.argsort(-weights, kind="stable")[:count - drop]
        poses = poses[sel]
        weights = weights[sel]
        off_map = off_map[sel]

    total = weights.sum()
    if total <= 0.0:
        weights = np.full(poses.shape[0], 1.0 / poses.shape[0])
    else:
        weights = weights / total
    return ParticleSet(poses, weights, off_map=off_map,
                       generation=ps.generation + 1)


class PhaseScheduler:
    """Which phases are due at each log tick.

    Replay semantics: rates translate to per-tick ratios relative to the
    prediction rate (prediction every tick).  The first tick activates all
    phases; non-increasing timestamps are ignored.
    """

    def __init__(self, config: MclConfig):
        self.correct_every = max(1, round(config.prediction_rate / config.correction_rate))
        self.reseed_every = max(1, round(config.prediction_rate / config.reseed_rate))
        self._tick = 0
        self._last_t = None

    def step(self, clock: float) -> set:
        if self._last_t is not None and clock <= self._last_t:
            return set()
        self._last_t = clock
        k = self._tick
        self._tick += 1
        due = {"predict"}
        if k % self.correct_every == 0:
            due.add("correct")
        if k % self.reseed_every == 0:
            due.add("reseed")
        return due


def step_scheduler(scheduler: PhaseScheduler, clock: float) -> set:
    return scheduler.step(clock)
