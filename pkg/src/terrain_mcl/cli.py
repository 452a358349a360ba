"""Command-line interface: map building, simulation, replay localization,
and metric evaluation.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import configfile, mapio, metrics, plots, scanlog, simharness, worldmap
from .geom import Pose6D
from .replay import run_localization

log = logging.getLogger("terrain_mcl")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _common(sub):
    sub.add_argument("--seed", type=int, default=None,
                     help="RNG seed (overrides any config seed)")
    sub.add_argument("--config", type=Path, default=None,
                     help="key=value config file")
    sub.add_argument("--verbose", action="store_true")


def _build_parser() -> _Parser:
    p = _Parser(prog="terrain-mcl",
                description="Monte Carlo localization on non-planar terrain")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build-map", help="build the octree+gridmap bundle "
                                         "from an ASCII point cloud")
    b.add_argument("cloud", type=Path)
    b.add_argument("out", type=Path)
    b.add_argument("--resolution", type=float, default=0.1)
    b.add_argument("--thr", type=float, default=0.15,
                   help="max ground step between neighboring cells [m]")
    b.add_argument("--robot-height", type=float, default=1.0)
    b.add_argument("--seed-pose", type=float, nargs=6, required=True,
                   metavar=("X", "Y", "Z", "ROLL", "PITCH", "YAW"),
                   help="pose over traversable ground to start the flood fill")
    _common(b)
    b.set_defaults(func=cmd_build_map)

    s = sub.add_parser("simulate", help="generate a ground-truth scan log "
                                        "from a world and trajectory spec")
    s.add_argument("world", type=Path)
    s.add_argument("trajectory", type=Path)
    s.add_argument("out_log", type=Path)
    s.add_argument("--thr", type=float, default=0.15)
    s.add_argument("--robot-height", type=float, default=1.0)
    s.add_argument("--seed-pose", type=float, nargs=6, default=None)
    s.add_argument("--sensor-noise", type=float, default=None,
                   help="simulated range noise sigma (default: sensor sigma)")
    s.add_argument("--scan-every", type=int, default=1,
                   help="emit scans every n-th tick")
    s.add_argument("--out-map", type=Path, default=None,
                   help="also write the map bundle used for simulation")
    s.add_argument("--out-cloud", type=Path, default=None,
                   help="also write the sampled point cloud")
    _common(s)
    s.set_defaults(func=cmd_simulate)

    l = sub.add_parser("localize", help="run the filter over a scan log "
                                        "and write per-correction metrics")
    l.add_argument("map", type=Path)
    l.add_argument("log", type=Path)
    l.add_argument("out_csv", type=Path)
    l.add_argument("--timings", action="store_true",
                   help="record wall-clock phase times (breaks byte "
                        "reproducibility of the CSV)")
    _common(l)
    l.set_defaults(func=cmd_localize)

    e = sub.add_parser("evaluate", help="summarize metric CSVs and render "
                                        "comparison figures")
    e.add_argument("csvs", type=Path, nargs="+")
    e.add_argument("--out-dir", type=Path, required=True)
    _common(e)
    e.set_defaults(func=cmd_evaluate)
    return p


def _load_bundle(args) -> configfile.ConfigBundle:
    if args.config is None:
        return configfile.ConfigBundle()
    return configfile.parse_config(args.config)


def _run_seed(args, bundle) -> int:
    if args.seed is not None:
        return args.seed
    if bundle.seed is not None:
        return bundle.seed
    return 0


def cmd_build_map(args) -> int:
    pc = mapio.read_point_cloud(args.cloud)
    oc = worldmap.build_octree(pc, args.resolution)
    seed = Pose6D(*args.seed_pose)
    gr = worldmap.build_gridmap(oc, seed, args.thr, args.robot_height)
    mapio.write_map_bundle(args.out, oc, gr)
    free = int((gr.occupancy == worldmap.FREE).sum())
    occ = int((gr.occupancy == worldmap.OCCUPIED).sum())
    print(f"octree: {oc.n_occupied} occupied voxels at r={oc.resolution:g} m")
    print(f"gridmap: {gr.shape[0]}x{gr.shape[1]} cells, {free} free, {occ} occupied")
    print(f"wrote {args.out}")
    return 0


def cmd_simulate(args) -> int:
    bundle = _load_bundle(args)
    if not bundle.sensors:
        raise ValueError("simulate needs at least one sensor in --config")
    spec = simharness.read_world_spec(args.world)
    traj = simharness.read_trajectory(args.trajectory)
    seed = _run_seed(args, bundle)

    pc = simharness.generate_world(spec)
    oc = worldmap.build_octree(pc, spec.resolution)
    if args.seed_pose is not None:
        seed_pose = Pose6D(*args.seed_pose)
    else:
        seed_pose = Pose6D(traj.waypoints[0, 0], traj.waypoints[0, 1], 0.5)
    gr = worldmap.build_gridmap(oc, seed_pose, args.thr, args.robot_height)
    log.info("world: %d points, %d voxels, grid %sx%s",
             len(pc), oc.n_occupied, *gr.shape)

    sensors = sorted(bundle.sensors.values(), key=lambda s: s.sensor_id)
    gt = simharness.simulate_run(oc, gr, traj, sensors,
                                 bundle.mcl.odom_noise, seed,
                                 sensor_sigma=args.sensor_noise,
                                 scan_every=args.scan_every)
    scanlog.write_log(args.out_log, gt)
    if args.out_cloud is not None:
        mapio.write_point_cloud(args.out_cloud, pc)
    if args.out_map is not None:
        mapio.write_map_bundle(args.out_map, oc, gr)
    print(f"simulated {len(gt.ticks)} ticks, {len(gt.checkpoints)} checkpoints")
    print(f"wrote {args.out_log}")
    return 0


def _checkpoint_path(out_csv: Path) -> Path:
    return out_csv.with_suffix(".checkpoints.csv")


def cmd_localize(args) -> int:
    bundle = _load_bundle(args)
    if not bundle.sensors:
        raise ValueError("localize needs at least one sensor in --config")
    oc, gr = mapio.read_map_bundle(args.map)
    records = scanlog.read_log(args.log)
    seed = _run_seed(args, bundle)
    result = run_localization(oc, gr, records, bundle, seed,
                              timings=args.timings)
    metrics.write_metrics_csv(args.out_csv, result.rows)
    if result.checkpoints:
        metrics.write_checkpoints_csv(_checkpoint_path(args.out_csv),
                                      result.checkpoints)
    summary = metrics.summarize(result.rows)
    print(metrics.format_summary(summary, label=args.log.name))
    if result.checkpoints:
        errs = [c.euclidean_error for c in result.checkpoints]
        print(f"  checkpoints       n={len(errs)} "
              f"mean={sum(errs) / len(errs):.6f} m max={max(errs):.6f} m")
    print(f"wrote {args.out_csv}")
    return 0


_SUMMARY_FIELDS = ("corrections", "mean_translation_error",
                   "max_translation_error", "mean_yaw_error", "max_yaw_error",
                   "mean_quality", "mean_predict_us", "mean_correct_us",
                   "mean_reseed_us")


def cmd_evaluate(args) -> int:
    runs = {}
    summaries = {}
    checkpoints = {}
    for path in args.csvs:
        label = path.stem
        rows = metrics.read_metrics_csv(path)
        runs[label] = rows
        summaries[label] = metrics.summarize(rows)
        cp_path = _checkpoint_path(path)
        if cp_path.exists():
            checkpoints[label] = metrics.read_checkpoints_csv(cp_path)

    args.out_dir.mkdir(parents=True, exist_ok=True)
    out_csv = args.out_dir / "summary.csv"
    with open(out_csv, "w", encoding="ascii") as fh:
        header = ["run", *_SUMMARY_FIELDS, "checkpoint_count",
                  "checkpoint_mean_error", "checkpoint_max_error"]
        fh.write(",".join(header) + "\n")

        def emit(label, summary, cps):
            vals = [label, str(summary["corrections"])]
            for name in _SUMMARY_FIELDS[1:]:
                vals.append("%.6f" % summary[name])
            if cps:
                errs = [c.euclidean_error for c in cps]
                vals += [str(len(errs)), "%.6f" % (sum(errs) / len(errs)),
                         "%.6f" % max(errs)]
            else:
                vals += ["0", "", ""]
            fh.write(",".join(vals) + "\n")

        for label in runs:
            emit(label, summaries[label], checkpoints.get(label))
        if len(runs) > 1:
            agg = _aggregate(list(summaries.values()))
            all_cps = [c for cps in checkpoints.values() for c in cps]
            emit("ALL", agg, all_cps)

    plots.plot_errors(runs, args.out_dir / "errors.svg")
    plots.plot_quality_uncertainty(runs, args.out_dir / "quality_uncertainty.svg")
    plots.plot_timings(summaries, args.out_dir / "timings.svg")

    for label in runs:
        print(metrics.format_summary(summaries[label], label=label))
    print(f"wrote {out_csv} and figures to {args.out_dir}")
    return 0


def _aggregate(summaries: list[dict]) -> dict:
    import math

    agg = {"corrections": sum(s["corrections"] for s in summaries)}
    for name in _SUMMARY_FIELDS[1:]:
        vals = [s[name] for s in summaries if not math.isnan(s[name])]
        if not vals:
            agg[name] = math.nan
        elif name.startswith("max_"):
            agg[name] = max(vals)
        else:
            agg[name] = sum(vals) / len(vals)
    return agg


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        stream=sys.stderr, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
