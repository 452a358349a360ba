"""Monte Carlo localization for robots on non-planar terrain.

Dual map representation (probabilistic occupancy octree + elevation
gridmap), a three-phase particle filter with a beam observation model, a
synthetic-world simulation harness, and a CLI for map building, replay
localization, and metric evaluation.
"""

from .geom import (Covariance6, Pose6D, RigidTransform, compose, inverse,
                   pose_statistics, relative_motion)
from .mcl import (BeliefEstimate, MclConfig, Particle, ParticleSet,
                  PhaseScheduler, correct, estimate, initialize, predict,
                  quality, reseed)
from .sensormodel import (BeamEvaluation, RangeScan, SensorSpec,
                          beam_probability, evaluate_beam, measured_distance,
                          theoretic_distance)
from .worldmap import (INFINITE, UNKNOWN, ElevationGrid, OccupancyOctree,
                       PointCloud, build_gridmap, build_octree, cast_ray,
                       elevation_at, slope_at)

__version__ = "0.1.0"

__all__ = [
    "BeamEvaluation", "BeliefEstimate", "Covariance6", "ElevationGrid",
    "INFINITE", "MclConfig", "OccupancyOctree", "Particle", "ParticleSet",
    "PhaseScheduler", "PointCloud", "Pose6D", "RangeScan", "RigidTransform",
    "SensorSpec", "UNKNOWN", "beam_probability", "build_gridmap",
    "build_octree", "cast_ray", "compose", "correct", "elevation_at",
    "estimate", "evaluate_beam", "initialize", "inverse", "measured_distance",
    "pose_statistics", "predict", "quality", "relative_motion", "reseed",
    "slope_at", "theoretic_distance",
]
