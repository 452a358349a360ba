"""Voxel lattice ray traversal kernels (numba-compiled).

Lattice convention shared across the package: voxel index i along an axis
covers the half-open interval [(i - 0.5) * r, (i + 0.5) * r), so voxel
centers sit exactly on integer multiples of the resolution r.

The traversal is an incremental boundary-stepping walk (Amanatides-Woo
style): it visits every voxel the ray passes through, in order, and
reports the distance at which the ray enters the first occupied voxel
(0.0 when the origin is already inside one).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

INF = math.inf

# Nudge, in meters along the ray, used to land strictly inside the first
# voxel when the origin lies outside the occupied bounding box.
_EDGE_EPS = 1e-9


@njit(cache=True, inline="always")
def _voxel_of(c, r):
    return int(np.floor(c / r + 0.5))


@njit(cache=True, inline="always")
def _box_clip(ox, oy, oz, dx, dy, dz, lo0, lo1, lo2, hi0, hi1, hi2):
    """Slab test of a ray against an AABB; returns (tmin, tmax), tmin > tmax
    when the ray misses."""
    tmin = -INF
    tmax = INF
    for axis in range(3):
        if axis == 0:
            o, d, lo, hi = ox, dx, lo0, hi0
        elif axis == 1:
            o, d, lo, hi = oy, dy, lo1, hi1
        else:
            o, d, lo, hi = oz, dz, lo2, hi2
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
def first_hit(grid, gx0, gy0, gz0, r, ox, oy, oz, dx, dy, dz, max_range):
    """Walk the ray (unit direction d) through the dense occupancy grid.

    grid is uint8 (1 = occupied) indexed by voxel index minus (gx0,gy0,gz0).
    Returns (t, ix, iy, iz): entry distance and world voxel index of the
    first occupied voxel, or (inf, 0, 0, 0) if none within max_range.
    """
    nx, ny, nz = grid.shape
    lo0 = (gx0 - 0.5) * r
    lo1 = (gy0 - 0.5) * r
    lo2 = (gz0 - 0.5) * r
    hi0 = (gx0 + nx - 0.5) * r
    hi1 = (gy0 + ny - 0.5) * r
    hi2 = (gz0 + nz - 0.5) * r

    tmin, tmax = _box_clip(ox, oy, oz, dx, dy, dz, lo0, lo1, lo2, hi0, hi1, hi2)
    if tmin > tmax or tmax < 0.0 or tmin > max_range:
        return INF, 0, 0, 0

    t_entry = 0.0
    if tmin > 0.0:
        t_entry = tmin
    ts = t_entry + _EDGE_EPS
    px = ox + dx * ts
    py = oy + dy * ts
    pz = oz + dz * ts
    ix = _voxel_of(px, r)
    iy = _voxel_of(py, r)
    iz = _voxel_of(pz, r)

    big = INF
    sx = 1 if dx > 0.0 else -1
    sy = 1 if dy > 0.0 else -1
    sz = 1 if dz > 0.0 else -1
    tdx = r / abs(dx) if dx != 0.0 else big
    tdy = r / abs(dy) if dy != 0.0 else big
    tdz = r / abs(dz) if dz != 0.0 else big
    # distance to the next boundary crossing per axis, measured from origin
    tmx = ((ix + 0.5 * sx) * r - ox) / dx if dx != 0.0 else big
    tmy = ((iy + 0.5 * sy) * r - oy) / dy if dy != 0.0 else big
    tmz = ((iz + 0.5 * sz) * r - oz) / dz if dz != 0.0 else big

    t = t_entry
    end = max_range if max_range < tmax else tmax
    while t <= max_range:
        jx = ix - gx0
        jy = iy - gy0
        jz = iz - gz0
        if 0 <= jx < nx and 0 <= jy < ny and 0 <= jz < nz:
            if grid[jx, jy, jz]:
                return t, ix, iy, iz
        elif t > end:
            # left the occupied bounding box for good
            return INF, 0, 0, 0
        if tmx < tmy:
            if tmx < tmz:
                t = tmx
                ix += sx
                tmx += tdx
            else:
                t = tmz
                iz += sz
                tmz += tdz
        else:
            if tmy < tmz:
                t = tmy
                iy += sy
                tmy += tdy
            else:
                t = tmz
                iz += sz
                tmz += tdz
    return INF, 0, 0, 0


@njit(cache=True)
def _rotmat_zyx(roll, pitch, yaw, out):
    cr = math.cos(roll)
    sr = math.sin(roll)
    cp = math.cos(pitch)
    sp = math.sin(pitch)
    cy = math.cos(yaw)
    sy = math.sin(yaw)
    out[0, 0] = cy * cp
    out[0, 1] = cy * sp * sr - sy * cr
    out[0, 2] = cy * sp * cr + sy * sr
    out[1, 0] = sy * cp
    out[1, 1] = sy * sp * sr + cy * cr
    out[1, 2] = sy * sp * cr - cy * sr
    out[2, 0] = -sp
    out[2, 1] = cp * sr
    out[2, 2] = cp * cr


@njit(cache=True, parallel=True)
def beam_update_kernel(grid, gx0, gy0, gz0, r, poses, ext_rot, ext_trans,
                       readings, infinite, measured, max_range, sigma,
                       hit_threshold, log_peak, log_floor):
    """Per-particle beam evaluation for one scan.

    poses: (N, 6) particle poses; readings: (M, 3) sensor-frame points
    (unit directions where infinite[j]); measured: (M,) precomputed ranges
    (inf for max-range beams).  Returns (dlogw, dhits, dposs) per particle.
    Semantics mirror sensormodel.evaluate_beam; keep the two in sync.
    """
    n = poses.shape[0]
    m = readings.shape[0]
    dlogw = np.zeros(n)
    dhits = np.zeros(n, dtype=np.int64)
    dposs = np.zeros(n, dtype=np.int64)
    for i in prange(n):
        rot = np.empty((3, 3))
        _rotmat_zyx(poses[i, 3], poses[i, 4], poses[i, 5], rot)
        # sensor pose = particle pose composed with the base->sensor extrinsic
        srot = rot @ ext_rot
        sox = rot[0, 0] * ext_trans[0] + rot[0, 1] * ext_trans[1] + rot[0, 2] * ext_trans[2] + poses[i, 0]
        soy = rot[1, 0] * ext_trans[0] + rot[1, 1] * ext_trans[1] + rot[1, 2] * ext_trans[2] + poses[i, 1]
        soz = rot[2, 0] * ext_trans[0] + rot[2, 1] * ext_trans[1] + rot[2, 2] * ext_trans[2] + poses[i, 2]
        acc = 0.0
        hits = 0
        poss = 0
        for j in range(m):
            bx = readings[j, 0]
            by = readings[j, 1]
            bz = readings[j, 2]
            dx = srot[0, 0] * bx + srot[0, 1] * by + srot[0, 2] * bz
            dy = srot[1, 0] * bx + srot[1, 1] * by + srot[1, 2] * bz
            dz = srot[2, 0] * bx + srot[2, 1] * by + srot[2, 2] * bz
            norm = math.sqrt(dx * dx + dy * dy + dz * dz)
            if norm < 1e-12:
                dx, dy, dz = srot[0, 0], srot[1, 0], srot[2, 0]
            else:
                dx /= norm
                dy /= norm
                dz /= norm
            theo, _, _, _ = first_hit(grid, gx0, gy0, gz0, r,
                                      sox, soy, soz, dx, dy, dz, max_range)
            meas = measured[j]
            poss += 1
            if infinite[j] and not math.isfinite(theo):
                hits += 1
                continue
            if infinite[j] or not math.isfinite(theo):
                shorter = meas if meas < theo else theo
                if shorter > max_range:
                    shorter = max_range
                error = max_range - shorter
            else:
                error = abs(meas - theo)
                if error < hit_threshold:
                    hits += 1
            lp = log_peak - 0.5 * (error / sigma) ** 2
            if lp < log_floor:
                lp = log_floor
            acc += lp
        dlogw[i] = acc
        dhits[i] = hits
        dposs[i] = poss
    return dlogw, dhits, dposs


@njit(cache=True, parallel=True)
def scan_ranges_kernel(grid, gx0, gy0, gz0, r, srot, strans, dirs, max_range):
    """Cast one ray per sensor-frame unit direction from a fixed sensor pose.
    Returns ranges (inf where nothing is hit within max_range)."""
    m = dirs.shape[0]
    out = np.empty(m)
    for j in prange(m):
        dx = srot[0, 0] * dirs[j, 0] + srot[0, 1] * dirs[j, 1] + srot[0, 2] * dirs[j, 2]
        dy = srot[1, 0] * dirs[j, 0] + srot[1, 1] * dirs[j, 1] + srot[1, 2] * dirs[j, 2]
        dz = srot[2, 0] * dirs[j, 0] + srot[2, 1] * dirs[j, 1] + srot[2, 2] * dirs[j, 2]
        t, _, _, _ = first_hit(grid, gx0, gy0, gz0, r,
                               strans[0], strans[1], strans[2], dx, dy, dz, max_range)
        out[j] = t
    return out
