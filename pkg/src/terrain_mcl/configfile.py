"""Plain-text key=value configuration.

One `key = value` per line, `#` comments, `.` decimal separator.  Unknown
keys are an error.  Sensors are declared in blocks of keys named
`sensor.<id>.<field>`:

    sensor.front.sigma = 0.03
    sensor.front.max_range = 12.0
    sensor.front.decimation = 4
    sensor.front.extrinsic = 0 0 0.3 0 0 0
    sensor.front.pattern = lidar2d
    sensor.front.enabled = 1
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geom import Pose6D, RigidTransform
from .mcl import MclConfig
from .sensormodel import SensorSpec

_FILTER_KEYS = {
    "min_particles": int,
    "max_particles": int,
    "winners_pct": float,
    "losers_pct": float,
    "prediction_rate": float,
    "correction_rate": float,
    "reseed_rate": float,
    "hit_threshold": float,
    "use_imu_orientation": bool,
    "grow_threshold": float,
    "shrink_threshold": float,
}
_FILTER_VEC6 = {"odom_noise", "reseed_jitter"}
_RUN_KEYS = {"seed": int}
_RUN_VEC6 = {"initial_pose", "init_spread"}
_SENSOR_KEYS = {
    "sigma": float,
    "max_range": float,
    "decimation": int,
    "pattern": str,
    "enabled": bool,
}

DEFAULT_INIT_SPREAD = (0.25, 0.25, 0.0, 0.0, 0.0, 0.1)


@dataclass
class ConfigBundle:
    mcl: MclConfig = field(default_factory=MclConfig)
    sensors: dict = field(default_factory=dict)
    seed: int | None = None
    initial_pose: Pose6D | None = None
    init_spread: tuple = DEFAULT_INIT_SPREAD


def _parse_bool(text: str) -> bool:
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_vec6(text: str):
    parts = text.split()
    if len(parts) != 6:
        raise ValueError(f"expected 6 numbers, got {len(parts)}")
    return tuple(float(v) for v in parts)


def parse_config(path) -> ConfigBundle:
    filter_kwargs = {}
    run = {}
    sensors: dict[str, dict] = {}
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, 1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in text.split("=", 1))
            try:
                if key in _FILTER_KEYS:
                    conv = _FILTER_KEYS[key]
                    filter_kwargs[key] = _parse_bool(value) if conv is bool else conv(value)
                elif key in _FILTER_VEC6:
                    filter_kwargs[key] = _parse_vec6(value)
                elif key in _RUN_KEYS:
                    run[key] = _RUN_KEYS[key](value)
                elif key in _RUN_VEC6:
                    run[key] = _parse_vec6(value)
                elif key.startswith("sensor."):
                    parts = key.split(".")
                    if len(parts) != 3 or not parts[1]:
                        raise ValueError(f"bad sensor key {key!r}")
                    _, sid, fieldname = parts
                    block = sensors.setdefault(sid, {})
                    if fieldname == "extrinsic":
                        block["extrinsic"] = _parse_vec6(value)
                    elif fieldname in _SENSOR_KEYS:
                        conv = _SENSOR_KEYS[fieldname]
                        block[fieldname] = (_parse_bool(value) if conv is bool
                                            else conv(value))
                    else:
                        raise ValueError(f"unknown sensor field {fieldname!r}")
                else:
                    raise ValueError(f"unknown key {key!r}")
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None

    specs = {}
    for sid, block in sensors.items():
        ext = block.pop("extrinsic", None)
        extrinsic = (RigidTransform.from_xyzrpy(*ext) if ext is not None
                     else RigidTransform.identity())
        specs[sid] = SensorSpec(sid, extrinsic, **block)

    bundle = ConfigBundle(mcl=MclConfig(**filter_kwargs), sensors=specs)
    if "seed" in run:
        bundle.seed = run["seed"]
    if "initial_pose" in run:
        bundle.initial_pose = Pose6D(*run["initial_pose"])
    if "init_spread" in run:
        bundle.init_spread = run["init_spread"]
    return bundle


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (tuple, list, np.ndarray)):
        return " ".join(f"{float(x):g}" for x in v)
    if isinstance(v, float):
        return f"{v:g}"
    return str(v)


def write_config(path, mcl: MclConfig | None = None, sensors=None,
                 **run_keys) -> None:
    """Write a config file; omitted filter fields fall back to defaults on
    load, so only explicitly given sections are emitted."""
    lines = []
    if mcl is not None:
        defaults = MclConfig()
        for name in (*_FILTER_KEYS, *_FILTER_VEC6):
            val = getattr(mcl, name)
            if val != getattr(defaults, name) and val is not None:
                lines.append(f"{name} = {_fmt_value(val)}")
    for key, val in run_keys.items():
        if key not in _RUN_KEYS and key not in _RUN_VEC6:
            raise ValueError(f"unknown key {key!r}")
        if isinstance(val, Pose6D):
            val = val.to_array()
        lines.append(f"{key} = {_fmt_value(val)}")
    for spec in (sensors or []):
        sid = spec.sensor_id
        pose = spec.extrinsic.to_pose()
        lines.append(f"sensor.{sid}.sigma = {_fmt_value(spec.sigma)}")
        lines.append(f"sensor.{sid}.max_range = {_fmt_value(spec.max_range)}")
        lines.append(f"sensor.{sid}.decimation = {spec.decimation}")
        lines.append(f"sensor.{sid}.pattern = {spec.pattern}")
        lines.append(f"sensor.{sid}.enabled = {_fmt_value(spec.enabled)}")
        lines.append(f"sensor.{sid}.extrinsic = {_fmt_value(pose.to_array())}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
