"""Line-oriented scan log format.

Record kinds (whitespace-separated, `#` starts a comment, timestamps
non-decreasing):

    SCAN t sensor_id n      followed by n reading lines:
        x y z               finite detection in the sensor frame, or
        INF ux uy uz        max-range beam with its unit direction
    ODOM t x y z roll pitch yaw      accumulated odometry pose
    TRUTH t x y z roll pitch yaw     ground-truth pose (optional)
    CHECKPOINT t x y z               surveyed position under the robot

Within one tick scans precede the ODOM record, so a replay correcting at
tick k consumes the scans captured at tick k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geom import Pose6D
from .sensormodel import RangeScan
from .simharness import GroundTruthLog


@dataclass(frozen=True)
class OdomRecord:
    t: float
    pose: Pose6D


@dataclass(frozen=True)
class TruthRecord:
    t: float
    pose: Pose6D


@dataclass(frozen=True)
class CheckpointRecord:
    t: float
    x: float
    y: float
    z: float


def _fmt_pose(p: Pose6D) -> str:
    return f"{p.x:.6f} {p.y:.6f} {p.z:.6f} {p.roll:.6f} {p.pitch:.6f} {p.yaw:.6f}"


def write_log(path, log: GroundTruthLog) -> None:
    cps = list(log.checkpoints)
    ci = 0
    with open(path, "w", encoding="ascii") as fh:
        for tick in log.ticks:
            for scan in tick.scans:
                fh.write(f"SCAN {tick.t:.6f} {scan.sensor_id} {len(scan)}\n")
                for row, inf in zip(scan.points, scan.infinite):
                    if inf:
                        fh.write(f"INF {row[0]:.6f} {row[1]:.6f} {row[2]:.6f}\n")
                    else:
                        fh.write(f"{row[0]:.6f} {row[1]:.6f} {row[2]:.6f}\n")
            fh.write(f"ODOM {tick.t:.6f} {_fmt_pose(tick.odom)}\n")
            fh.write(f"TRUTH {tick.t:.6f} {_fmt_pose(tick.truth)}\n")
            while ci < len(cps) and cps[ci][0] <= tick.t:
                t, x, y, z = cps[ci]
                fh.write(f"CHECKPOINT {t:.6f} {x:.6f} {y:.6f} {z:.6f}\n")
                ci += 1


def read_log(path):
    """Parse a scan log into a list of records, in file order."""
    records = []
    last_t = -math.inf

    def check_time(t, lineno):
        nonlocal last_t
        if t < last_t - 1e-12:
            raise ValueError(f"{path}:{lineno}: timestamps must be non-decreasing")
        last_t = t

    with open(path, "r", encoding="ascii") as fh:
        lines = fh.readlines()
    i = 0
    n_lines = len(lines)
    while i < n_lines:
        raw = lines[i]
        i += 1
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        parts = text.split()
        kind = parts[0]
        try:
            if kind == "ODOM" or kind == "TRUTH":
                if len(parts) != 8:
                    raise ValueError("expected 7 numbers")
                t = float(parts[1])
                pose = Pose6D(*(float(v) for v in parts[2:8]))
                check_time(t, i)
                records.append(OdomRecord(t, pose) if kind == "ODOM" else TruthRecord(t, pose))
            elif kind == "SCAN":
                if len(parts) != 4:
                    raise ValueError("expected 't sensor_id n'")
                t = float(parts[1])
                sensor_id = parts[2]
                n = int(parts[3])
                check_time(t, i)
                pts = np.empty((n, 3))
                inf = np.zeros(n, dtype=bool)
                for j in range(n):
                    if i >= n_lines:
                        raise ValueError("truncated scan block")
                    row = lines[i].split()
                    i += 1
                    if row and row[0] == "INF":
                        if len(row) != 4:
                            raise ValueError("INF line needs a unit direction")
                        inf[j] = True
                        pts[j] = (float(row[1]), float(row[2]), float(row[3]))
                    else:
                        if len(row) != 3:
                            raise ValueError("reading line needs 'x y z'")
                        pts[j] = (float(row[0]), float(row[1]), float(row[2]))
                records.append(RangeScan(sensor_id, t, pts, inf))
            elif kind == "CHECKPOINT":
                if len(parts) != 5:
                    raise ValueError("expected 't x y z'")
                t = float(parts[1])
                check_time(t, i)
                records.append(CheckpointRecord(t, *(float(v) for v in parts[2:5])))
            else:
                raise ValueError(f"unknown record kind {kind!r}")
        except ValueError as exc:
            raise ValueError(f"{path}:{i}: {exc}") from None
    return records
