"""File formats: ASCII point clouds and the binary map bundle.

Bundle layout (all little-endian):
    magic           8s   b"TMCLMAP1"
    resolution      f8
    voxel imin      3*i8
    voxel imax      3*i8
    n_voxels        i8
    grid ix0, iy0   2*i8   (lattice indices of cell (0, 0))
    grid nx, ny     2*i8
    voxels          n_voxels * (3*i4 index + f4 log_odds), sorted
    elevation       nx*ny f4, C order, NaN = unknown
    occupancy       nx*ny f4 (0 unknown, 1 free, 2 occupied)
"""

from __future__ import annotations

import struct

import numpy as np

from .worldmap import ElevationGrid, OccupancyOctree, PointCloud

MAGIC = b"TMCLMAP1"
_HEADER = struct.Struct("<8sd3q3qq2q2q")


def read_point_cloud(path) -> PointCloud:
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 'x y z', got {line.strip()!r}")
            try:
                rows.append((float(parts[0]), float(parts[1]), float(parts[2])))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad number: {line.strip()!r}") from exc
    return PointCloud(np.array(rows, dtype=float).reshape(-1, 3))


def write_point_cloud(path, pc: PointCloud) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for x, y, z in pc.points:
            fh.write(f"{x:.6f} {y:.6f} {z:.6f}\n")


def write_map_bundle(path, oc: OccupancyOctree, gr: ElevationGrid) -> None:
    idx = oc.occupied_indices()
    n = idx.shape[0]
    if n:
        imin = idx.min(axis=0)
        imax = idx.max(axis=0)
    else:
        imin = np.zeros(3, dtype=np.int64)
        imax = np.zeros(3, dtype=np.int64)
    nx, ny = gr.elevation.shape
    header = _HEADER.pack(
        MAGIC, oc.resolution,
        int(imin[0]), int(imin[1]), int(imin[2]),
        int(imax[0]), int(imax[1]), int(imax[2]),
        n, gr.ix0, gr.iy0, nx, ny,
    )
    vox = np.empty(n, dtype=np.dtype([("i", "<i4", 3), ("lo", "<f4")]))
    vox["i"] = idx.astype(np.int32)
    vox["lo"] = [np.float32(oc.log_odds_of(row)) for row in idx]
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(vox.tobytes())
        fh.write(gr.elevation.astype("<f4").tobytes(order="C"))
        fh.write(gr.occupancy.astype("<f4").tobytes(order="C"))


def read_map_bundle(path) -> tuple[OccupancyOctree, ElevationGrid]:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size or raw[:8] != MAGIC:
        raise ValueError(f"{path}: not a map bundle (bad magic)")
    (_, resolution,
     _imin0, _imin1, _imin2, _imax0, _imax1, _imax2,
     n, ix0, iy0, nx, ny) = _HEADER.unpack_from(raw)
    off = _HEADER.size
    vox = np.frombuffer(raw, dtype=np.dtype([("i", "<i4", 3), ("lo", "<f4")]),
                        count=n, offset=off)
    off += vox.nbytes
    elev = np.frombuffer(raw, dtype="<f4", count=nx * ny, offset=off).reshape(nx, ny).copy()
    off += 4 * nx * ny
    occ = np.frombuffer(raw, dtype="<f4", count=nx * ny, offset=off).reshape(nx, ny)
    if off + 4 * nx * ny != len(raw):
        raise ValueError(f"{path}: truncated or oversized map bundle")

    oc = OccupancyOctree(resolution)
    lo = oc._log_odds
    for row in vox:
        lo[(int(row["i"][0]), int(row["i"][1]), int(row["i"][2]))] = float(row["lo"])
    gr = ElevationGrid(resolution, ix0, iy0, elev, occ.astype(np.uint8))
    return oc, gr
