"""Dual world map: probabilistic occupancy octree + elevation/occupancy grid.

The octree stores per-voxel occupancy as log-odds over the lattice defined
in raycast.py (voxel centers at integer multiples of the resolution).
The elevation grid is a 2D layer pair derived from the octree by flood
fill: per traversable cell, the ground elevation in meters and an
occupancy state (free / occupied / unknown).

Both maps are immutable once built; every query here is read-only and
safe to call from concurrent workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import raycast
from .geom import Pose6D, rpy_from_rotation

INFINITE = math.inf
UNKNOWN = math.nan

# log-odds of a single insertion hit (probability 0.97, clamped); kept
# float32-exact so the map bundle round-trips bit-identically
HIT_LOG_ODDS = float(np.float32(math.log(0.97 / 0.03)))

FREE = 1
OCCUPIED = 2
UNKNOWN_CELL = 0

_DENSE_CELL_LIMIT = 200_000_000


@dataclass(frozen=True)
class PointCloud:
    """Bag of 3D points in meters."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError("point cloud must be shaped (N, 3)")
        if pts.size and not np.isfinite(pts).all():
            raise ValueError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]


class OccupancyOctree:
    """Voxel occupancy map with probabilistic cells (log-odds internally).

    Untouched voxels have the 0.5 prior.  Occupied means probability > 0.5,
    i.e. positive log-odds.
    """

    def __init__(self, resolution: float):
        if resolution <= 0:
            raise ValueError("resolution must be positive")
        self.resolution = float(resolution)
        self._log_odds: dict[tuple[int, int, int], float] = {}
        self._dense = None
        self._dense_origin = None

    # -- construction -------------------------------------------------

    def insert_points(self, points: np.ndarray) -> None:
        if self._dense is not None:
            raise RuntimeError("octree is frozen once queried")
        idx = self.world_to_index(points)
        lo = self._log_odds
        for row in idx:
            key = (int(row[0]), int(row[1]), int(row[2]))
            cur = lo.get(key, 0.0) + HIT_LOG_ODDS
            lo[key] = min(cur, HIT_LOG_ODDS)

    # -- lattice ------------------------------------------------------

    def world_to_index(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return np.floor(p / self.resolution + 0.5).astype(np.int64)

    def index_center(self, index) -> np.ndarray:
        return np.asarray(index, dtype=float) * self.resolution

    # -- queries ------------------------------------------------------

    @property
    def n_occupied(self) -> int:
        return len(self._log_odds)

    def occupancy(self, point) -> float:
        """Occupancy probability in [0, 1]; 0.5 for untouched voxels."""
        key = tuple(int(v) for v in self.world_to_index(point))
        lo = self._log_odds.get(key)
        if lo is None:
            return 0.5
        return 1.0 - 1.0 / (1.0 + math.exp(lo))

    def is_occupied(self, point) -> bool:
        return self.occupancy(point) > 0.5

    def occupied_indices(self) -> np.ndarray:
        """Occupied voxel indices, lexicographically sorted (N, 3)."""
        if not self._log_odds:
            return np.empty((0, 3), dtype=np.int64)
        arr = np.array(sorted(self._log_odds), dtype=np.int64)
        return arr

    def log_odds_of(self, index) -> float:
        return self._log_odds[tuple(int(v) for v in index)]

    def bounds(self):
        """World AABB ((xmin, ymin, zmin), (xmax, ymax, zmax)) of occupied
        voxels, or None when empty."""
        if not self._log_odds:
            return None
        idx = np.array(list(self._log_odds), dtype=np.int64)
        r = self.resolution
        lo = (idx.min(axis=0) - 0.5) * r
        hi = (idx.max(axis=0) + 0.5) * r
        return lo, hi

    # -- dense acceleration structure ----------------------------------

    def dense(self):
        """(grid uint8, (gx0, gy0, gz0)) for the ray kernels; built lazily
        and cached.  Freezes the octree against further insertion."""
        if self._dense is None:
            if not self._log_odds:
                grid = np.zeros((1, 1, 1), dtype=np.uint8)
                origin = (0, 0, 0)
            else:
                idx = np.array(list(self._log_odds), dtype=np.int64)
                imin = idx.min(axis=0)
                imax = idx.max(axis=0)
                shape = imax - imin + 1
                if int(np.prod(shape)) > _DENSE_CELL_LIMIT:
                    raise ValueError("occupied region too large for dense grid")
                grid = np.zeros(tuple(shape), dtype=np.uint8)
                grid[idx[:, 0] - imin[0], idx[:, 1] - imin[1], idx[:, 2] - imin[2]] = 1
                origin = (int(imin[0]), int(imin[1]), int(imin[2]))
            self._dense = grid
            self._dense_origin = origin
        return self._dense, self._dense_origin


def build_octree(pc: PointCloud, resolution: float) -> OccupancyOctree:
    """Insert every cloud point as an occupied voxel at the given resolution."""
    if isinstance(pc, np.ndarray):
        pc = PointCloud(pc)
    if len(pc) == 0:
        raise ValueError("empty point cloud")
    oc = OccupancyOctree(resolution)
    oc.insert_points(pc.points)
    return oc


def cast_ray(oc: OccupancyOctree, origin, target, max_range: float) -> float:
    """Distance from origin to the entry of the first occupied voxel along
    the ray toward target; INFINITE when nothing is hit within max_range
    (including rays that never enter the occupied bounds)."""
    if max_range <= 0:
        raise ValueError("max_range must be positive")
    o = np.asarray(origin, dtype=float)
    tgt = np.asarray(target, dtype=float)
    d = tgt - o
    norm = float(np.linalg.norm(d))
    if norm < 1e-12:
        return 0.0 if oc.is_occupied(o) else INFINITE
    d /= norm
    grid, (gx0, gy0, gz0) = oc.dense()
    t, _, _, _ = raycast.first_hit(grid, gx0, gy0, gz0, oc.resolution,
                                   o[0], o[1], o[2], d[0], d[1], d[2], max_range)
    return t


def cast_ray_voxel(oc: OccupancyOctree, origin, target, max_range: float):
    """Like cast_ray but also reports the hit voxel index, or None."""
    o = np.asarray(origin, dtype=float)
    d = np.asarray(target, dtype=float) - o
    norm = float(np.linalg.norm(d))
    if norm < 1e-12:
        idx = oc.world_to_index(o)
        if oc.is_occupied(o):
            return 0.0, (int(idx[0]), int(idx[1]), int(idx[2]))
        return INFINITE, None
    d /= norm
    grid, (gx0, gy0, gz0) = oc.dense()
    t, ix, iy, iz = raycast.first_hit(grid, gx0, gy0, gz0, oc.resolution,
                                      o[0], o[1], o[2], d[0], d[1], d[2], max_range)
    if math.isinf(t):
        return INFINITE, None
    return t, (ix, iy, iz)


_NEIGHBORS8 = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass
class ElevationGrid:
    """Elevation + occupancy layers over the voxel column lattice.

    Cell (i, j) corresponds to the voxel column (ix0 + i, iy0 + j); its
    center in world coordinates is ((ix0 + i) * r, (iy0 + j) * r).
    elevation is NaN for unknown cells; occupancy uses UNKNOWN_CELL / FREE /
    OCCUPIED codes.
    """

    resolution: float
    ix0: int
    iy0: int
    elevation: np.ndarray
    occupancy: np.ndarray
    mean_elevation: float = field(init=False, default=0.0)

    def __post_init__(self):
        known = np.isfinite(self.elevation)
        self.mean_elevation = float(self.elevation[known].mean()) if known.any() else 0.0

    @property
    def shape(self):
        return self.elevation.shape

    @property
    def origin_xy(self):
        return self.ix0 * self.resolution, self.iy0 * self.resolution

    def cell_of(self, x: float, y: float):
        r = self.resolution
        return (int(math.floor(x / r + 0.5)) - self.ix0,
                int(math.floor(y / r + 0.5)) - self.iy0)

    def cell_center(self, i: int, j: int):
        r = self.resolution
        return (self.ix0 + i) * r, (self.iy0 + j) * r


def _masked_box_mean(values: np.ndarray, mask: np.ndarray, half: int) -> np.ndarray:
    """Box average of masked cells via summed-area tables; cells outside the
    mask neither contribute nor get replaced."""
    v = np.where(mask, values, 0.0).astype(np.float64)
    m = mask.astype(np.float64)
    sat_v = np.pad(v, ((1, 0), (1, 0))).cumsum(0).cumsum(1)
    sat_m = np.pad(m, ((1, 0), (1, 0))).cumsum(0).cumsum(1)
    nx, ny = values.shape
    i = np.arange(nx)
    j = np.arange(ny)
    i0 = np.clip(i - half, 0, nx)[:, None]
    i1 = np.clip(i + half + 1, 0, nx)[:, None]
    j0 = np.clip(j - half, 0, ny)[None, :]
    j1 = np.clip(j + half + 1, 0, ny)[None, :]
    total = sat_v[i1, j1] - sat_v[i0, j1] - sat_v[i1, j0] + sat_v[i0, j0]
    count = sat_m[i1, j1] - sat_m[i0, j1] - sat_m[i1, j0] + sat_m[i0, j0]
    out = values.copy()
    good = mask & (count > 0)
    out[good] = (total[good] / count[good]).astype(values.dtype)
    return out


def build_gridmap(oc: OccupancyOctree, seed: Pose6D, thr: float,
                  robot_height: float, neighbor_order=None,
                  smooth_window: int = 11) -> ElevationGrid:
    """Flood-fill the traversable surface reachable from the seed pose.

    Expansion admits an 8-neighbor cell when it has an occupied voxel whose
    center is within thr of the current cell's ground elevation; the highest
    such voxel becomes the neighbor's ground.  Cells with an occupied voxel
    between one voxel above ground and robot_height are marked OCCUPIED and
    do not expand further (walls seal regions off); their elevation is
    inherited from a free neighbor afterwards.  When two routes reach a cell
    at different ground levels the lower one wins, which keeps the result
    independent of expansion order.

    Ground levels come from voxel centers, so raw cell elevations are
    quantized to the resolution (a ramp becomes a staircase).  A box mean
    over free cells (smooth_window cells wide) restores the sub-voxel
    surface grade; constant regions are preserved exactly and the window
    never crosses unknown or obstacle cells.
    """
    if thr <= 0:
        raise ValueError("thr must be positive")
    r = oc.resolution
    if robot_height <= r:
        raise ValueError("robot_height must exceed the resolution")
    occ = oc.occupied_indices()
    if occ.shape[0] == 0:
        raise ValueError("seed off map")

    dk_max = int(math.floor(thr / r + 1e-9))
    band_hi = int(math.floor(robot_height / r + 1e-9))

    ix_min, iy_min = int(occ[:, 0].min()), int(occ[:, 1].min())
    nx = int(occ[:, 0].max()) - ix_min + 1
    ny = int(occ[:, 1].max()) - iy_min + 1

    # per-column sorted occupied z levels (occ is lexicographically sorted)
    columns: dict[tuple[int, int], np.ndarray] = {}
    col_keys = occ[:, 0] * (2 ** 32) + occ[:, 1]
    starts = np.flatnonzero(np.r_[True, col_keys[1:] != col_keys[:-1]])
    ends = np.r_[starts[1:], occ.shape[0]]
    for s, e in zip(starts, ends):
        columns[(int(occ[s, 0]), int(occ[s, 1]))] = occ[s:e, 2].copy()

    seed_col = (int(math.floor(seed.x / r + 0.5)), int(math.floor(seed.y / r + 0.5)))
    col = columns.get(seed_col)
    if col is None:
        raise ValueError("seed off map")
    seed_level_cap = int(math.floor(seed.z / r + 0.5 + 1e-9))
    below = col[col <= seed_level_cap]
    if below.size == 0:
        raise ValueError("seed off map")
    seed_ground = int(below[-1])

    def cell_state(column: np.ndarray, ground: int) -> int:
        hi = ground + band_hi
        lo = ground + 2
        k = np.searchsorted(column, lo)
        if k < column.size and column[k] <= hi:
            return OCCUPIED
        return FREE

    order = tuple(neighbor_order) if neighbor_order is not None else _NEIGHBORS8

    ground: dict[tuple[int, int], int] = {seed_col: seed_ground}
    work = [seed_col]
    while work:
        cell = work.pop()
        g = ground[cell]
        col_here = columns[cell]
        if cell != seed_col and cell_state(col_here, g) == OCCUPIED:
            continue
        for di, dj in order:
            ncell = (cell[0] + di, cell[1] + dj)
            ncol = columns.get(ncell)
            if ncol is None:
                continue
            lo = np.searchsorted(ncol, g - dk_max)
            hi = np.searchsorted(ncol, g + dk_max, side="right")
            if lo >= hi:
                continue
            cand = int(ncol[hi - 1])
            prev = ground.get(ncell)
            if prev is None or cand < prev:
                ground[ncell] = cand
                work.append(ncell)

    # float32 layers so the map bundle round-trips bit-identically
    elevation = np.full((nx, ny), UNKNOWN, dtype=np.float32)
    occupancy = np.zeros((nx, ny), dtype=np.uint8)
    for (cx, cy), g in ground.items():
        i, j = cx - ix_min, cy - iy_min
        elevation[i, j] = np.float32(g * r)
        occupancy[i, j] = cell_state(columns[(cx, cy)], g)

    if smooth_window > 1:
        elevation = _masked_box_mean(elevation, occupancy == FREE,
                                     smooth_window // 2)

    # obstacle cells inherit the ground elevation of a free neighbor
    occ_cells = np.argwhere(occupancy == OCCUPIED)
    inherited = {}
    for i, j in occ_cells:
        best = None
        for di, dj in _NEIGHBORS8:
            ni, nj = i + di, j + dj
            if 0 <= ni < nx and 0 <= nj < ny and occupancy[ni, nj] == FREE:
                e = elevation[ni, nj]
                if best is None or e < best:
                    best = e
        if best is not None:
            inherited[(i, j)] = best
    for (i, j), e in inherited.items():
        elevation[i, j] = e

    return ElevationGrid(r, ix_min, iy_min, elevation, occupancy)


def elevation_at(gr: ElevationGrid, x: float, y: float) -> float:
    """Bilinear elevation at (x, y); UNKNOWN (NaN) when any contributing
    cell is unknown or the query leaves the grid."""
    r = gr.resolution
    u = x / r - gr.ix0
    v = y / r - gr.iy0
    i0 = int(math.floor(u))
    j0 = int(math.floor(v))
    fx = u - i0
    fy = v - j0
    nx, ny = gr.elevation.shape
    acc = 0.0
    for di, wx in ((0, 1.0 - fx), (1, fx)):
        for dj, wy in ((0, 1.0 - fy), (1, fy)):
            w = wx * wy
            if w <= 1e-12:
                continue
            i, j = i0 + di, j0 + dj
            if not (0 <= i < nx and 0 <= j < ny):
                return UNKNOWN
            e = gr.elevation[i, j]
            if math.isnan(e):
                return UNKNOWN
            acc += w * e
    return acc


def elevation_at_batch(gr: ElevationGrid, xy: np.ndarray) -> np.ndarray:
    """Vectorized elevation_at over (N, 2) queries."""
    r = gr.resolution
    u = xy[:, 0] / r - gr.ix0
    v = xy[:, 1] / r - gr.iy0
    i0 = np.floor(u).astype(np.int64)
    j0 = np.floor(v).astype(np.int64)
    fx = u - i0
    fy = v - j0
    nx, ny = gr.elevation.shape
    out = np.full(xy.shape[0], UNKNOWN)
    ok = (i0 >= -1) & (i0 <= nx - 1) & (j0 >= -1) & (j0 <= ny - 1)
    acc = np.zeros(xy.shape[0])
    valid = ok.copy()
    for di, wx in ((0, 1.0 - fx), (1, fx)):
        for dj, wy in ((0, 1.0 - fy), (1, fy)):
            w = wx * wy
            i = np.clip(i0 + di, 0, nx - 1)
            j = np.clip(j0 + dj, 0, ny - 1)
            inside = (i0 + di >= 0) & (i0 + di < nx) & (j0 + dj >= 0) & (j0 + dj < ny)
            e = gr.elevation[i, j]
            contrib = w > 1e-12
            bad = contrib & (~inside | np.isnan(e))
            valid &= ~bad
            acc += np.where(contrib & inside & ~np.isnan(e), w * np.nan_to_num(e), 0.0)
    out[valid] = acc[valid]
    return out


def gradient_at(gr: ElevationGrid, x: float, y: float):
    """Terrain gradient (dz/dx, dz/dy) by central differences at the cell
    containing (x, y); None when neighbors are unknown."""
    i, j = gr.cell_of(x, y)
    nx, ny = gr.elevation.shape
    if not (1 <= i < nx - 1 and 1 <= j < ny - 1):
        return None
    e = gr.elevation
    vals = (e[i + 1, j], e[i - 1, j], e[i, j + 1], e[i, j - 1])
    if any(math.isnan(v) for v in vals):
        return None
    r = gr.resolution
    gx = (vals[0] - vals[1]) / (2.0 * r)
    gy = (vals[2] - vals[3]) / (2.0 * r)
    return gx, gy


def terrain_orientation(gx: float, gy: float, yaw: float):
    """Roll and pitch of a body at the given yaw resting on terrain with
    gradient (gx, gy): forward axis tangent to the surface, z axis along
    the terrain normal.  Positive pitch is nose-down (ZYX convention), so
    climbing means negative pitch."""
    cy = math.cos(yaw)
    sy = math.sin(yaw)
    sx = gx * cy + gy * sy
    xb = np.array([cy, sy, sx]) / math.sqrt(1.0 + sx * sx)
    n = np.array([-gx, -gy, 1.0])
    n /= np.linalg.norm(n)
    yb = np.cross(n, xb)
    rot = np.column_stack([xb, yb, n])
    roll, pitch, _ = rpy_from_rotation(rot)
    return roll, pitch


def slope_at(gr: ElevationGrid, x: float, y: float):
    """Terrain (roll, pitch) for a body at yaw 0, or None when unknown.
    Rotate with terrain_orientation for other headings."""
    g = gradient_at(gr, x, y)
    if g is None:
        return None
    return terrain_orientation(g[0], g[1], 0.0)
