"""Multi-rate filter replay over a scan log.

Each ODOM record is one tick: prediction runs every tick, correction and
reseed at their configured tick ratios.  Scans are buffered (latest per
sensor) and consumed at correction ticks; metric rows are emitted per
correction, with errors filled in from the next TRUTH record at or after
the correction time.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import mcl
from .configfile import ConfigBundle
from .geom import angle_diff
from .metrics import CheckpointRow, MetricsRow
from .scanlog import CheckpointRecord, OdomRecord, TruthRecord
from .sensormodel import RangeScan


@dataclass
class ReplayResult:
    rows: list = field(default_factory=list)
    checkpoints: list = field(default_factory=list)


def _initial_pose(bundle: ConfigBundle, records):
    if bundle.initial_pose is not None:
        return bundle.initial_pose
    for rec in records:
        if isinstance(rec, TruthRecord):
            return rec.pose
    raise ValueError("no initial pose: set initial_pose or provide TRUTH records")


def run_localization(oc, gr, records, bundle: ConfigBundle, seed: int,
                     timings: bool = False) -> ReplayResult:
    """Replay parsed log records through the filter.

    Timing columns stay zero unless `timings` is set, keeping the output
    byte-reproducible (wall-clock values are inherently not).
    """
    config = bundle.mcl
    enabled = {sid: s for sid, s in bundle.sensors.items() if s.enabled}
    rng = np.random.default_rng(seed)
    scheduler = mcl.PhaseScheduler(config)

    initial = _initial_pose(bundle, records)
    ps = mcl.initialize(config, initial, np.asarray(bundle.init_spread), gr, rng)

    now = time.perf_counter if timings else (lambda: 0.0)
    result = ReplayResult()
    pending: list[tuple[MetricsRow, object]] = []  # row + its estimate pose
    scan_buffer: dict[str, RangeScan] = {}
    odom_prev = None
    predict_acc = 0.0
    predict_calls = 0
    reseed_us = 0.0

    for rec in records:
        if isinstance(rec, RangeScan):
            if rec.sensor_id not in bundle.sensors:
                raise ValueError(f"unknown sensor: {rec.sensor_id!r}")
            if rec.sensor_id in enabled:
                scan_buffer[rec.sensor_id] = rec
        elif isinstance(rec, OdomRecord):
            due = scheduler.step(rec.t)
            if not due:
                continue
            odom_curr = rec.pose.to_transform()
            if odom_prev is None:
                odom_prev = odom_curr
            t0 = now()
            ps = mcl.predict(ps, odom_prev, odom_curr, gr, config, rng)
            predict_acc += (now() - t0) * 1e6
            predict_calls += 1
            odom_prev = odom_curr

            if "correct" in due and scan_buffer:
                scans = [scan_buffer[k] for k in sorted(scan_buffer)]
                t0 = now()
                ps = mcl.correct(ps, scans, enabled, oc, config)
                correct_us = (now() - t0) * 1e6
                est = mcl.estimate(ps)
                row = MetricsRow(
                    t=rec.t,
                    translation_error=None,
                    yaw_error=None,
                    quality=est.quality,
                    uncertainty_product=est.uncertainty_scalar,
                    uncertainty_sum=est.uncertainty_sum,
                    particle_count=len(ps),
                    predict_us=predict_acc / max(predict_calls, 1),
                    correct_us=correct_us,
                    reseed_us=reseed_us,
                )
                pending.append((row, est.mean))
                predict_acc = 0.0
                predict_calls = 0
                reseed_us = 0.0
                scan_buffer.clear()

            if "reseed" in due:
                est = mcl.estimate(ps)
                t0 = now()
                ps = mcl.reseed(ps, config, est.uncertainty_sum, rng)
                reseed_us = (now() - t0) * 1e6
        elif isinstance(rec, TruthRecord):
            while pending and pending[0][0].t <= rec.t + 1e-9:
                row, est_pose = pending.pop(0)
                row.translation_error = float(math.dist(
                    (est_pose.x, est_pose.y, est_pose.z),
                    (rec.pose.x, rec.pose.y, rec.pose.z)))
                row.yaw_error = abs(angle_diff(est_pose.yaw, rec.pose.yaw))
                result.rows.append(row)
        elif isinstance(rec, CheckpointRecord):
            est = mcl.estimate(ps)
            err = math.dist((est.mean.x, est.mean.y, est.mean.z),
                            (rec.x, rec.y, rec.z))
            result.checkpoints.append(CheckpointRow(
                rec.t, (rec.x, rec.y, rec.z),
                (est.mean.x, est.mean.y, est.mean.z), err))
        else:
            raise ValueError(f"unknown record type {type(rec).__name__}")

    # rows never matched by a TRUTH record keep empty error columns
    for row, _ in pending:
        result.rows.append(row)
    result.rows.sort(key=lambda r: r.t)
    return result
