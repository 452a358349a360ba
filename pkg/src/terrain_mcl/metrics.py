"""Per-correction metrics rows, CSV I/O, and run summaries."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass


COLUMNS = ("t", "translation_error", "yaw_error", "quality",
           "uncertainty_product", "uncertainty_sum", "particle_count",
           "predict_us", "correct_us", "reseed_us")

CHECKPOINT_COLUMNS = ("t", "cp_x", "cp_y", "cp_z",
                      "est_x", "est_y", "est_z", "euclidean_error")


@dataclass
class MetricsRow:
    t: float
    translation_error: float | None  # None when no ground truth is available
    yaw_error: float | None
    quality: float
    uncertainty_product: float
    uncertainty_sum: float
    particle_count: int
    predict_us: float = 0.0
    correct_us: float = 0.0
    reseed_us: float = 0.0

    def __post_init__(self):
        for v in (self.translation_error, self.yaw_error):
            if v is not None and v < 0:
                raise ValueError("errors must be non-negative")


@dataclass
class CheckpointRow:
    t: float
    cp: tuple
    est: tuple
    euclidean_error: float


def _fmt(v, spec="%.6f"):
    return "" if v is None else spec % v


def write_metrics_csv(path, rows) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow([
                "%.6f" % r.t,
                _fmt(r.translation_error),
                _fmt(r.yaw_error),
                "%.6f" % r.quality,
                "%.9e" % r.uncertainty_product,
                "%.9e" % r.uncertainty_sum,
                str(r.particle_count),
                "%.1f" % r.predict_us,
                "%.1f" % r.correct_us,
                "%.1f" % r.reseed_us,
            ])


def read_metrics_csv(path) -> list[MetricsRow]:
    rows = []
    with open(path, "r", newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != COLUMNS:
            raise ValueError(f"{path}:1: bad or missing metrics header")
        for lineno, rec in enumerate(reader, 2):
            if len(rec) != len(COLUMNS):
                raise ValueError(f"{path}:{lineno}: expected {len(COLUMNS)} fields")
            try:
                rows.append(MetricsRow(
                    t=float(rec[0]),
                    translation_error=float(rec[1]) if rec[1] else None,
                    yaw_error=float(rec[2]) if rec[2] else None,
                    quality=float(rec[3]),
                    uncertainty_product=float(rec[4]),
                    uncertainty_sum=float(rec[5]),
                    particle_count=int(rec[6]),
                    predict_us=float(rec[7]),
                    correct_us=float(rec[8]),
                    reseed_us=float(rec[9]),
                ))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return rows


def write_checkpoints_csv(path, rows) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh)
        w.writerow(CHECKPOINT_COLUMNS)
        for r in rows:
            w.writerow(["%.6f" % r.t,
                        *("%.6f" % v for v in r.cp),
                        *("%.6f" % v for v in r.est),
                        "%.6f" % r.euclidean_error])


def read_checkpoints_csv(path) -> list[CheckpointRow]:
    rows = []
    with open(path, "r", newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CHECKPOINT_COLUMNS:
            raise ValueError(f"{path}:1: bad or missing checkpoint header")
        for lineno, rec in enumerate(reader, 2):
            if len(rec) != len(CHECKPOINT_COLUMNS):
                raise ValueError(f"{path}:{lineno}: expected "
                                 f"{len(CHECKPOINT_COLUMNS)} fields")
            vals = [float(v) for v in rec]
            rows.append(CheckpointRow(vals[0], tuple(vals[1:4]),
                                      tuple(vals[4:7]), vals[7]))
    return rows


def summarize(rows) -> dict:
    """Mean/max error figures and mean phase times over metric rows."""
    errs = [(r.translation_error, r.yaw_error) for r in rows
            if r.translation_error is not None]
    out = {
        "corrections": len(rows),
        "mean_translation_error": math.nan,
        "max_translation_error": math.nan,
        "mean_yaw_error": math.nan,
        "max_yaw_error": math.nan,
        "mean_quality": math.nan,
        "mean_predict_us": math.nan,
        "mean_correct_us": math.nan,
        "mean_reseed_us": math.nan,
    }
    if errs:
        terr = [e[0] for e in errs]
        yerr = [abs(e[1]) for e in errs]
        out["mean_translation_error"] = sum(terr) / len(terr)
        out["max_translation_error"] = max(terr)
        out["mean_yaw_error"] = sum(yerr) / len(yerr)
        out["max_yaw_error"] = max(yerr)
    if rows:
        out["mean_quality"] = sum(r.quality for r in rows) / len(rows)
        out["mean_predict_us"] = sum(r.predict_us for r in rows) / len(rows)
        out["mean_correct_us"] = sum(r.correct_us for r in rows) / len(rows)
        reseeds = [r.reseed_us for r in rows if r.reseed_us > 0.0]
        out["mean_reseed_us"] = (sum(reseeds) / len(reseeds)) if reseeds else 0.0
    return out


def format_summary(summary: dict, label: str = "") -> str:
    head = f"summary {label}".strip()
    return "\n".join([
        f"{head}: corrections={summary['corrections']}",
        (f"  translation_error mean={summary['mean_translation_error']:.6f} m "
         f"max={summary['max_translation_error']:.6f} m"),
        (f"  yaw_error         mean={summary['mean_yaw_error']:.6f} rad "
         f"max={summary['max_yaw_error']:.6f} rad"),
        f"  quality           mean={summary['mean_quality']:.6f}",
        (f"  phase_us          predict={summary['mean_predict_us']:.1f} "
         f"correct={summary['mean_correct_us']:.1f} "
         f"reseed={summary['mean_reseed_us']:.1f}"),
    ])
