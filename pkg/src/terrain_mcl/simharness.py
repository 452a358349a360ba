"""Synthetic non-planar worlds, ground-truth runs, and test oracles.

Worlds are built from surface primitives (ground planes, ramps, boxes,
basins) sampled densely into a point cloud.  simulate_run drives a robot
along a waypoint route over the built map, producing per-tick ground
truth, drift-corrupted odometry, and ray-cast range scans — the desk-scale
stand-in for a recorded robot session.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .geom import (Pose6D, RigidTransform, compose, relative_motion,
                   rotation_angle, rpy_from_rotation, wrap_angle)
from .sensormodel import RangeScan, SensorSpec
from .worldmap import (ElevationGrid, OccupancyOctree, PointCloud,
                       elevation_at, gradient_at, terrain_orientation)
from . import raycast


# ---------------------------------------------------------------------------
# world primitives


@dataclass(frozen=True)
class Plane:
    """Horizontal rectangle at a fixed height."""
    x0: float
    y0: float
    x1: float
    y1: float
    z: float = 0.0

    def footprint(self):
        return self.x0, self.y0, self.x1, self.y1

    def height(self, x, y):
        return np.full_like(x, self.z, dtype=float)


@dataclass(frozen=True)
class Ramp:
    """Rectangle rising linearly along +x, -x, +y or -y."""
    x0: float
    y0: float
    x1: float
    y1: float
    z0: float
    grade: float
    axis: str = "+x"

    def footprint(self):
        return self.x0, self.y0, self.x1, self.y1

    def height(self, x, y):
        if self.axis == "+x":
            d = x - self.x0
        elif self.axis == "-x":
            d = self.x1 - x
        elif self.axis == "+y":
            d = y - self.y0
        elif self.axis == "-y":
            d = self.y1 - y
        else:
            raise ValueError(f"bad ramp axis {self.axis!r}")
        return self.z0 + self.grade * d


@dataclass(frozen=True)
class Box:
    """Axis-aligned cuboid obstacle; sides and top are sampled."""
    cx: float
    cy: float
    base_z: float
    w: float
    d: float
    h: float

    def footprint(self):
        return (self.cx - self.w / 2, self.cy - self.d / 2,
                self.cx + self.w / 2, self.cy + self.d / 2)


@dataclass(frozen=True)
class Basin:
    """Shallow depression: flat floor at z0 - depth with a sloped apron of
    the given width running up to the rim at z0.  Cuts the ground plane."""
    x0: float
    y0: float
    x1: float
    y1: float
    z0: float
    depth: float
    apron: float

    def footprint(self):
        return self.x0, self.y0, self.x1, self.y1

    def height(self, x, y):
        d_edge = np.minimum(np.minimum(x - self.x0, self.x1 - x),
                            np.minimum(y - self.y0, self.y1 - y))
        d_edge = np.maximum(d_edge, 0.0)
        return self.z0 - self.depth * np.minimum(1.0, d_edge / self.apron)


@dataclass(frozen=True)
class WorldSpec:
    bounds: tuple  # (x0, y0, x1, y1)
    primitives: tuple
    seed: int = 0
    resolution: float = 0.1

    def __post_init__(self):
        bx0, by0, bx1, by1 = self.bounds
        for p in self.primitives:
            fx0, fy0, fx1, fy1 = p.footprint()
            if fx0 < bx0 - 1e-9 or fy0 < by0 - 1e-9 or fx1 > bx1 + 1e-9 or fy1 > by1 + 1e-9:
                raise ValueError(f"primitive {p} outside world bounds")


def _sample_rect(x0, y0, x1, y1, step, rng, holes=()):
    """Jittered grid sample of a rectangle, skipping hole rectangles."""
    xs = np.arange(x0 + step / 2, x1, step)
    ys = np.arange(y0 + step / 2, y1, step)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    gx = gx.ravel() + rng.uniform(-step / 4, step / 4, gx.size)
    gy = gy.ravel() + rng.uniform(-step / 4, step / 4, gy.size)
    keep = np.ones(gx.size, dtype=bool)
    for hx0, hy0, hx1, hy1 in holes:
        keep &= ~((gx >= hx0) & (gx <= hx1) & (gy >= hy0) & (gy <= hy1))
    return gx[keep], gy[keep]


def _sample_vertical(u0, u1, z0, z1, step, rng):
    us = np.arange(u0 + step / 2, u1, step)
    zs = np.arange(z0 + step / 2, z1, step)
    gu, gz = np.meshgrid(us, zs, indexing="ij")
    gu = gu.ravel() + rng.uniform(-step / 4, step / 4, gu.size)
    gz = gz.ravel() + rng.uniform(-step / 4, step / 4, gz.size)
    return gu, gz


def generate_world(spec: WorldSpec) -> PointCloud:
    """Sample every primitive surface (at least 4 points per resolution^2
    cell) into one cloud; box walls and basin floors included."""
    if not spec.primitives:
        raise ValueError("empty world spec")
    step = spec.resolution / 2.0
    rng = np.random.default_rng(spec.seed)
    holes = [p.footprint() for p in spec.primitives if isinstance(p, Basin)]
    parts = []
    for p in spec.primitives:
        if isinstance(p, (Plane, Ramp)):
            fx0, fy0, fx1, fy1 = p.footprint()
            use_holes = holes if isinstance(p, Plane) else ()
            gx, gy = _sample_rect(fx0, fy0, fx1, fy1, step, rng, use_holes)
            parts.append(np.column_stack([gx, gy, p.height(gx, gy)]))
        elif isinstance(p, Basin):
            fx0, fy0, fx1, fy1 = p.footprint()
            gx, gy = _sample_rect(fx0, fy0, fx1, fy1, step, rng)
            parts.append(np.column_stack([gx, gy, p.height(gx, gy)]))
        elif isinstance(p, Box):
            fx0, fy0, fx1, fy1 = p.footprint()
            z0, z1 = p.base_z, p.base_z + p.h
            gx, gy = _sample_rect(fx0, fy0, fx1, fy1, step, rng)
            parts.append(np.column_stack([gx, gy, np.full(gx.size, z1)]))
            for x_face in (fx0, fx1):
                gu, gz = _sample_vertical(fy0, fy1, z0, z1, step, rng)
                parts.append(np.column_stack([np.full(gu.size, x_face), gu, gz]))
            for y_face in (fy0, fy1):
                gu, gz = _sample_vertical(fx0, fx1, z0, z1, step, rng)
                parts.append(np.column_stack([gu, np.full(gu.size, y_face), gz]))
        else:
            raise ValueError(f"unknown primitive {p!r}")
    return PointCloud(np.vstack(parts))


# ---------------------------------------------------------------------------
# world / trajectory files

_PRIMITIVE_ARITY = {"plane": 5, "ramp": 7, "box": 6, "basin": 7}


def read_world_spec(path) -> WorldSpec:
    """World file: `bounds = x0 y0 x1 y1`, optional `seed =` / `resolution =`,
    then one primitive per line:

        plane z x0 y0 x1 y1
        ramp x0 y0 x1 y1 z0 grade axis(+x|-x|+y|-y)
        box cx cy base_z w d h
        basin x0 y0 x1 y1 z0 depth apron
    """
    bounds = None
    seed = 0
    resolution = 0.1
    prims = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, 1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                if "=" in text:
                    key, value = (s.strip() for s in text.split("=", 1))
                    if key == "bounds":
                        vals = [float(v) for v in value.split()]
                        if len(vals) != 4:
                            raise ValueError("bounds needs 4 numbers")
                        bounds = tuple(vals)
                    elif key == "seed":
                        seed = int(value)
                    elif key == "resolution":
                        resolution = float(value)
                    else:
                        raise ValueError(f"unknown key {key!r}")
                    continue
                parts = text.split()
                kind = parts[0]
                arity = _PRIMITIVE_ARITY.get(kind)
                if arity is None:
                    raise ValueError(f"unknown primitive {kind!r}")
                if len(parts) != arity + 1:
                    raise ValueError(f"{kind} needs {arity} arguments")
                if kind == "plane":
                    z, x0, y0, x1, y1 = (float(v) for v in parts[1:])
                    prims.append(Plane(x0, y0, x1, y1, z))
                elif kind == "ramp":
                    vals = [float(v) for v in parts[1:7]]
                    prims.append(Ramp(*vals, parts[7]))
                elif kind == "box":
                    prims.append(Box(*(float(v) for v in parts[1:])))
                elif kind == "basin":
                    prims.append(Basin(*(float(v) for v in parts[1:])))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if bounds is None:
        raise ValueError(f"{path}: missing 'bounds = x0 y0 x1 y1'")
    if not prims:
        raise ValueError(f"{path}: empty world spec")
    return WorldSpec(bounds, tuple(prims), seed=seed, resolution=resolution)


def write_world_spec(path, spec: WorldSpec) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("bounds = %g %g %g %g\n" % spec.bounds)
        fh.write(f"seed = {spec.seed}\n")
        fh.write(f"resolution = {spec.resolution:g}\n")
        for p in spec.primitives:
            if isinstance(p, Plane):
                fh.write(f"plane {p.z:g} {p.x0:g} {p.y0:g} {p.x1:g} {p.y1:g}\n")
            elif isinstance(p, Ramp):
                fh.write(f"ramp {p.x0:g} {p.y0:g} {p.x1:g} {p.y1:g} "
                         f"{p.z0:g} {p.grade:g} {p.axis}\n")
            elif isinstance(p, Box):
                fh.write(f"box {p.cx:g} {p.cy:g} {p.base_z:g} "
                         f"{p.w:g} {p.d:g} {p.h:g}\n")
            elif isinstance(p, Basin):
                fh.write(f"basin {p.x0:g} {p.y0:g} {p.x1:g} {p.y1:g} "
                         f"{p.z0:g} {p.depth:g} {p.apron:g}\n")


def read_trajectory(path) -> "TrajectorySpec":
    """Trajectory file: `speed = `, `rate = `, optional `teleport = t dx dy`
    and `checkpoint = t` lines, then `wp x y [yaw]` waypoints in order."""
    speed = 0.5
    rate = 5.0
    teleports = []
    checkpoints = []
    wps = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, 1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                if "=" in text:
                    key, value = (s.strip() for s in text.split("=", 1))
                    if key == "speed":
                        speed = float(value)
                    elif key == "rate":
                        rate = float(value)
                    elif key == "teleport":
                        vals = [float(v) for v in value.split()]
                        if len(vals) != 3:
                            raise ValueError("teleport needs 't dx dy'")
                        teleports.append(tuple(vals))
                    elif key == "checkpoint":
                        checkpoints.append(float(value))
                    else:
                        raise ValueError(f"unknown key {key!r}")
                    continue
                parts = text.split()
                if parts[0] != "wp" or len(parts) not in (3, 4):
                    raise ValueError("expected 'wp x y [yaw]'")
                yaw = float(parts[3]) if len(parts) == 4 else math.nan
                wps.append((float(parts[1]), float(parts[2]), yaw))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if len(wps) < 2:
        raise ValueError(f"{path}: need at least two waypoints")
    return TrajectorySpec(np.array(wps), speed=speed, rate=rate,
                          teleports=tuple(teleports),
                          checkpoints=tuple(checkpoints))


def write_trajectory(path, traj: "TrajectorySpec") -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"speed = {traj.speed:g}\n")
        fh.write(f"rate = {traj.rate:g}\n")
        for t, dx, dy in traj.teleports:
            fh.write(f"teleport = {t:g} {dx:g} {dy:g}\n")
        for t in traj.checkpoints:
            fh.write(f"checkpoint = {t:g}\n")
        for x, y, yaw in traj.waypoints:
            if math.isnan(yaw):
                fh.write(f"wp {x:.6f} {y:.6f}\n")
            else:
                fh.write(f"wp {x:.6f} {y:.6f} {yaw:.6f}\n")


# ---------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True)
class TrajectorySpec:
    """Waypoint route driven at constant speed, sampled at a fixed rate.

    Waypoint yaw may be NaN, in which case the heading of the outgoing
    path segment is used.  Teleports are (time, dx, dy) kidnap events: the
    true pose jumps, odometry does not see it.
    """

    waypoints: np.ndarray  # (N, 3): x, y, yaw (NaN = from tangent)
    speed: float = 0.5
    rate: float = 5.0
    teleports: tuple = ()
    checkpoints: tuple = ()  # times at which to drop a checkpoint record

    def __post_init__(self):
        wp = np.asarray(self.waypoints, dtype=float)
        if wp.ndim != 2 or wp.shape[1] != 3 or wp.shape[0] < 2:
            raise ValueError("need at least two waypoints shaped (N, 3)")
        if self.speed <= 0 or self.rate <= 0:
            raise ValueError("speed and rate must be positive")
        object.__setattr__(self, "waypoints", wp)


def _resolve_yaws(wp: np.ndarray) -> np.ndarray:
    yaws = wp[:, 2].copy()
    for i in range(len(wp)):
        if math.isnan(yaws[i]):
            a, b = (i, i + 1) if i + 1 < len(wp) else (i - 1, i)
            yaws[i] = math.atan2(wp[b, 1] - wp[a, 1], wp[b, 0] - wp[a, 0])
    return yaws


def _path_pose(wp: np.ndarray, yaws: np.ndarray, seg_len: np.ndarray, s: float):
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    s = min(s, cum[-1])
    i = int(np.searchsorted(cum, s, side="right")) - 1
    i = min(i, len(seg_len) - 1)
    f = (s - cum[i]) / seg_len[i] if seg_len[i] > 0 else 0.0
    x = wp[i, 0] + f * (wp[i + 1, 0] - wp[i, 0])
    y = wp[i, 1] + f * (wp[i + 1, 1] - wp[i, 1])
    yaw = wrap_angle(yaws[i] + f * wrap_angle(yaws[i + 1] - yaws[i]))
    return x, y, yaw


# ---------------------------------------------------------------------------
# sensor beam patterns


def beam_directions(pattern: str) -> np.ndarray:
    """Unit beam directions in the sensor frame.

    lidar2d: 360 beams at 1 degree in the sensor xy plane.
    lidar3d: 16 rings between -15 and +15 degrees elevation, 90 azimuths,
    ring-major order (so decimation cycles through azimuths).
    """
    if pattern == "lidar2d":
        az = np.deg2rad(np.arange(360.0))
        return np.column_stack([np.cos(az), np.sin(az), np.zeros_like(az)])
    if pattern == "lidar3d":
        elev = np.deg2rad(np.linspace(-15.0, 15.0, 16))
        az = np.deg2rad(np.arange(0.0, 360.0, 4.0))
        e, a = np.meshgrid(elev, az, indexing="ij")
        return np.column_stack([
            (np.cos(e) * np.cos(a)).ravel(),
            (np.cos(e) * np.sin(a)).ravel(),
            np.sin(e).ravel(),
        ])
    raise ValueError(f"unknown beam pattern {pattern!r}")


# ---------------------------------------------------------------------------
# ground-truth simulation


@dataclass(frozen=True)
class TickRecord:
    t: float
    truth: Pose6D
    odom: Pose6D  # accumulated odometry (odom frame -> base)
    scans: tuple = ()


@dataclass(frozen=True)
class GroundTruthLog:
    ticks: tuple
    checkpoints: tuple = ()  # (t, x, y, z)

    def __post_init__(self):
        ts = [tk.t for tk in self.ticks]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("tick timestamps must be strictly increasing")


def _perturb_displacement(u: RigidTransform, noise6, rng) -> RigidTransform:
    """Same noise model the filter's prediction assumes: per-coordinate
    Gaussian on the 6 displacement coords, scaled by displacement size."""
    u_rpy = rpy_from_rotation(u.rotation)
    u6 = np.array([*u.translation, *u_rpy])
    d_trans = float(np.linalg.norm(u.translation))
    d_rot = rotation_angle(u)
    scale = np.asarray(noise6, dtype=float) * np.array(
        [d_trans, d_trans, d_trans, d_rot, d_rot, d_rot])
    noisy = u6 + rng.normal(0.0, 1.0, 6) * scale
    return RigidTransform.from_xyzrpy(*noisy)


def terrain_pose(gr: ElevationGrid, x: float, y: float, yaw: float) -> Pose6D:
    """Pose resting on the terrain at (x, y) with the given heading."""
    z = elevation_at(gr, x, y)
    if math.isnan(z):
        raise ValueError("waypoint off terrain")
    g = gradient_at(gr, x, y)
    roll, pitch = terrain_orientation(g[0], g[1], yaw) if g is not None else (0.0, 0.0)
    return Pose6D(x, y, z, roll, pitch, yaw)


def simulate_scan(oc: OccupancyOctree, sensor_pose: RigidTransform,
                  spec: SensorSpec, t: float, sigma: float,
                  rng=None) -> RangeScan:
    """Cast the sensor's beam pattern from sensor_pose; finite ranges get
    Gaussian noise clipped at 3 sigma, misses become INFINITE beams."""
    dirs = beam_directions(spec.pattern)
    grid, (gx0, gy0, gz0) = oc.dense()
    ranges = raycast.scan_ranges_kernel(
        grid, gx0, gy0, gz0, oc.resolution,
        np.ascontiguousarray(sensor_pose.rotation),
        np.ascontiguousarray(sensor_pose.translation),
        np.ascontiguousarray(dirs), spec.max_range)
    finite = np.isfinite(ranges)
    if sigma > 0.0 and rng is not None and finite.any():
        noise = np.clip(rng.normal(0.0, sigma, int(finite.sum())),
                        -3.0 * sigma, 3.0 * sigma)
        r = ranges[finite] + noise
        ranges[finite] = np.maximum(r, 1e-3)
    points = dirs.copy()
    points[finite] *= ranges[finite][:, None]
    return RangeScan(spec.sensor_id, t, points, ~finite)


def simulate_run(oc: OccupancyOctree, gr: ElevationGrid, traj: TrajectorySpec,
                 specs: list, odom_noise, seed: int, sensor_sigma=None,
                 scan_every: int = 1) -> GroundTruthLog:
    """Drive the route over the map: true pose follows the terrain, scans
    are ray-cast from the true sensor poses, odometry integrates the true
    displacement corrupted by the prediction noise model.

    sensor_sigma overrides the simulated range noise (defaults to each
    sensor's sigma); scan_every emits scans only on every n-th tick.
    """
    rng = np.random.default_rng(seed)
    wp = traj.waypoints
    yaws = _resolve_yaws(wp)
    seg = np.linalg.norm(np.diff(wp[:, :2], axis=0), axis=1)
    total = float(seg.sum())
    if total <= 0:
        raise ValueError("trajectory has zero length")
    n_ticks = int(math.floor(total / traj.speed * traj.rate)) + 1
    dt = 1.0 / traj.rate

    teleports = sorted(traj.teleports)
    checkpoints = sorted(traj.checkpoints)
    specs = [s for s in specs if s.enabled]

    ticks = []
    cp_records = []
    odom = RigidTransform.identity()
    prev_truth = None
    offset = np.zeros(2)
    tele_idx = 0
    cp_idx = 0
    for k in range(n_ticks):
        t = k * dt
        teleported = False
        while tele_idx < len(teleports) and teleports[tele_idx][0] <= t:
            offset = offset + np.asarray(teleports[tele_idx][1:3], dtype=float)
            tele_idx += 1
            teleported = True
        x, y, yaw = _path_pose(wp, yaws, seg, traj.speed * t)
        truth = terrain_pose(gr, x + offset[0], y + offset[1], yaw)

        if prev_truth is None:
            u = RigidTransform.identity()
        elif teleported:
            # kidnap: the robot is carried, wheels see no motion
            u = RigidTransform.identity()
        else:
            u = relative_motion(prev_truth.to_transform(), truth.to_transform())
        odom = compose(odom, _perturb_displacement(u, odom_noise, rng))
        prev_truth = truth

        scans = []
        if k % scan_every == 0:
            for spec in specs:
                sensor_pose = compose(truth.to_transform(), spec.extrinsic)
                sim_sigma = spec.sigma if sensor_sigma is None else sensor_sigma
                scans.append(simulate_scan(oc, sensor_pose, spec, t, sim_sigma, rng))
        ticks.append(TickRecord(t, truth, odom.to_pose(), tuple(scans)))

        while cp_idx < len(checkpoints) and checkpoints[cp_idx] <= t:
            cp_records.append((t, truth.x, truth.y, truth.z))
            cp_idx += 1
    return GroundTruthLog(tuple(ticks), tuple(cp_records))


# ---------------------------------------------------------------------------
# brute-force ray oracle (tests only)


@njit(cache=True)
def _slab_entry(ix, iy, iz, r, ox, oy, oz, dx, dy, dz):
    """Entry/exit distances of the ray through voxel (ix, iy, iz);
    entry > exit means no intersection."""
    tmin = -math.inf
    tmax = math.inf
    for axis in range(3):
        if axis == 0:
            o, d, c = ox, dx, ix
        elif axis == 1:
            o, d, c = oy, dy, iy
        else:
            o, d, c = oz, dz, iz
        lo = (c - 0.5) * r
        hi = (c + 0.5) * r
        if d == 0.0:
            if o < lo or o >= hi:
                return 1.0, -1.0
        else:
            t0 = (lo - o) / d
            t1 = (hi - o) / d
            if t0 > t1:
                t0, t1 = t1, t0
            if t0 > tmin:
                tmin = t0
            if t1 < tmax:
                tmax = t1
    return tmin, tmax


@njit(cache=True)
def _oracle_ray(grid, gx0, gy0, gz0, r, ox, oy, oz, dx, dy, dz, max_range):
    """Fixed-step march at r/10; every step tests the whole swept segment
    (all voxels between consecutive sample points, via slab tests) so no
    corner graze is skipped.  Independent of the incremental traversal."""
    step = r / 10.0
    nx, ny, nz = grid.shape
    n_steps = int(math.ceil(max_range / step))
    t_prev = 0.0
    px = ox
    py = oy
    pz = oz
    ax = int(np.floor(px / r + 0.5))
    ay = int(np.floor(py / r + 0.5))
    az = int(np.floor(pz / r + 0.5))
    for k in range(1, n_steps + 2):
        t_k = k * step
        if t_k > max_range:
            t_k = max_range
        qx = ox + dx * t_k
        qy = oy + dy * t_k
        qz = oz + dz * t_k
        bx = int(np.floor(qx / r + 0.5))
        by = int(np.floor(qy / r + 0.5))
        bz = int(np.floor(qz / r + 0.5))
        lo_x, hi_x = (ax, bx) if ax <= bx else (bx, ax)
        lo_y, hi_y = (ay, by) if ay <= by else (by, ay)
        lo_z, hi_z = (az, bz) if az <= bz else (bz, az)
        best_t = math.inf
        best = (-1, -1, -1)
        for ix in range(lo_x, hi_x + 1):
            jx = ix - gx0
            if jx < 0 or jx >= nx:
                continue
            for iy in range(lo_y, hi_y + 1):
                jy = iy - gy0
                if jy < 0 or jy >= ny:
                    continue
                for iz in range(lo_z, hi_z + 1):
                    jz = iz - gz0
                    if jz < 0 or jz >= nz:
                        continue
                    if not grid[jx, jy, jz]:
                        continue
                    entry, exit_ = _slab_entry(ix, iy, iz, r, ox, oy, oz, dx, dy, dz)
                    if entry > exit_ or exit_ < 0.0:
                        continue
                    if entry < 0.0:
                        entry = 0.0
                    if entry <= max_range and entry < best_t:
                        best_t = entry
                        best = (ix, iy, iz)
        if best_t < math.inf:
            return best_t, best[0], best[1], best[2]
        ax, ay, az = bx, by, bz
        if t_k >= max_range:
            break
    return math.inf, 0, 0, 0


def oracle_cast_ray(oc: OccupancyOctree, origin, target, max_range: float) -> float:
    """Brute-force reference for cast_ray; used only in tests."""
    t, _, _, _ = oracle_cast_ray_voxel(oc, origin, target, max_range)
    return t


def oracle_cast_ray_voxel(oc: OccupancyOctree, origin, target, max_range: float):
    o = np.asarray(origin, dtype=float)
    d = np.asarray(target, dtype=float) - o
    norm = float(np.linalg.norm(d))
    if norm < 1e-12:
        if oc.is_occupied(o):
            idx = oc.world_to_index(o)
            return 0.0, int(idx[0]), int(idx[1]), int(idx[2])
        return math.inf, 0, 0, 0
    d /= norm
    grid, (gx0, gy0, gz0) = oc.dense()
    return _oracle_ray(grid, gx0, gy0, gz0, oc.resolution,
                       o[0], o[1], o[2], d[0], d[1], d[2], max_range)


# ---------------------------------------------------------------------------
# the standard desk-scale setup


def standard_world() -> WorldSpec:
    """Flat arena with pillar landmarks, a 10% ramp up to an elevated
    platform with a matching ramp back down, and a shallow basin."""
    walls = [
        Box(10.0, 0.2, 0.0, 19.6, 0.3, 1.6),
        Box(10.0, 13.8, 0.0, 19.6, 0.3, 1.6),
        Box(0.2, 7.0, 0.0, 0.3, 13.6, 1.6),
        Box(19.8, 7.0, 0.0, 0.3, 13.6, 1.6),
    ]
    pillars = [
        Box(5.0, 3.0, 0.0, 0.5, 0.5, 1.4),
        Box(8.5, 9.5, 0.0, 0.6, 0.6, 1.4),
        Box(2.5, 9.0, 0.0, 0.4, 0.4, 1.4),
        Box(12.0, 2.5, 0.0, 0.5, 0.5, 1.4),
        Box(11.0, 11.5, 0.0, 0.6, 0.6, 1.4),
        Box(17.5, 2.5, 0.0, 0.5, 0.5, 1.4),
    ]
    terrain = [
        Plane(0.0, 0.0, 20.0, 14.0, 0.0),
        Ramp(12.0, 5.0, 15.0, 8.0, 0.0, 0.1, "+x"),
        Plane(15.0, 5.0, 17.5, 8.0, 0.3),
        Ramp(15.0, 8.0, 17.5, 11.0, 0.0, 0.1, "-y"),
        Basin(3.0, 11.0, 6.0, 13.0, 0.0, 0.18, 0.9),
    ]
    return WorldSpec((0.0, 0.0, 20.0, 14.0), tuple(terrain + walls + pillars), seed=7)


def standard_route(rate: float = 5.0, speed: float = 0.5,
                   teleports=(), checkpoints=()) -> TrajectorySpec:
    """Figure-eight over the flat area, east leg up the ramp, across the
    platform, down the far ramp and back to the start (~120 s at 0.5 m/s)."""
    nan = math.nan
    pts = []

    def circle(cx, cy, radius, start_deg, stop_deg, n, direction=1.0):
        angles = np.deg2rad(np.linspace(start_deg, stop_deg, n))
        for a in angles:
            pts.append((cx + radius * math.cos(direction * a),
                        cy + radius * math.sin(direction * a)))

    pts.append((4.0, 6.5))
    # south loop (clockwise) then north loop (counter-clockwise): figure 8
    circle(5.0, 4.6, 1.9, 105.0, -255.0, 13)
    circle(5.0, 8.4, 1.9, -75.0, 285.0, 13)
    pts.append((6.5, 6.5))
    pts.append((13.0, 6.5))
    pts.append((16.2, 6.5))   # up the ramp, onto the platform
    pts.append((16.2, 9.0))   # north across, down the far ramp
    pts.append((16.2, 11.8))
    pts.append((12.0, 12.6))
    pts.append((8.0, 12.2))
    pts.append((6.8, 10.2))
    pts.append((5.2, 6.9))
    pts.append((4.2, 6.6))
    wp = np.array([(x, y, nan) for x, y in pts])
    return TrajectorySpec(wp, speed=speed, rate=rate,
                          teleports=tuple(teleports), checkpoints=tuple(checkpoints))


def standard_sensors(which: str = "both") -> list:
    """SensorSpec set for the standard runs: a 2D lidar and/or a 3D lidar."""
    sensors = []
    if which in ("2d", "both"):
        sensors.append(SensorSpec(
            "lidar2d", RigidTransform.from_xyzrpy(0.0, 0.0, 0.3, 0.0, 0.0, 0.0),
            sigma=0.03, max_range=12.0, decimation=4, pattern="lidar2d"))
    if which in ("3d", "both"):
        sensors.append(SensorSpec(
            "lidar3d", RigidTransform.from_xyzrpy(0.0, 0.0, 0.5, 0.0, 0.0, 0.0),
            sigma=0.03, max_range=12.0, decimation=16, pattern="lidar3d"))
    if not sensors:
        raise ValueError(f"unknown sensor selection {which!r}")
    return sensors
