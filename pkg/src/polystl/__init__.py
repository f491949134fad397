"""Differentiable spatio-temporal logic over 2D convex polygons."""

__version__ = "0.1.0"

from .formulas import Trajectory, eval_exact, eval_smooth, parse
from .geometry import ConvexPolygon, PolygonTemplate, Pose2D, SmoothingConfig
from .optimize import OptimizerConfig, optimize
from .predicates import (AxisAlignedBox3, PredicateKind, PredicateParams, Scene,
                         SceneObject)

__all__ = [
    "AxisAlignedBox3", "ConvexPolygon", "OptimizerConfig", "PolygonTemplate",
    "Pose2D", "PredicateKind", "PredicateParams", "Scene", "SceneObject",
    "SmoothingConfig", "Trajectory", "eval_exact", "eval_smooth", "optimize",
    "parse", "__version__",
]
