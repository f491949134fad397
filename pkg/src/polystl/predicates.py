"""Quantitative spatial predicates over scene objects.

Each predicate maps a scene to a robustness scalar: positive iff the
relation holds, with magnitude measuring the margin. Every predicate has
an exact evaluation (hard min/max, reference geometry) and a smooth one
(soft extrema, differentiable surrogates); both share parameter handling
so the two modes only differ in the arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Union

from . import autodiff as ad
from . import exactgeo as xg
from . import geometry as geo
from .autodiff import Scalar, value_of
from .geometry import ConvexPolygon, SmoothingConfig

CENTROID_GUARD = 1e-9


class SceneError(ValueError):
    """Malformed scene or predicate applied to unsupported operands."""


class PredicateKind(Enum):
    CLOSE_TO = "closeTo"
    FAR_FROM = "farFrom"
    TOUCH = "touch"
    OVLP = "ovlp"
    PART_OVLP = "partOvlp"
    ENCL_IN = "enclIn"
    LEFT_OF = "leftOf"
    RIGHT_OF = "rightOf"
    BEHIND = "behind"
    IN_FRONT_OF = "inFrontOf"
    BELOW = "below"
    ABOVE = "above"
    BETWEEN_PX = "betweenPx"
    BETWEEN_PY = "betweenPy"
    ORIENTED = "oriented"
    BEARING_TO = "bearingTo"


DIRECTIONAL_2D = (PredicateKind.LEFT_OF, PredicateKind.RIGHT_OF,
                  PredicateKind.BEHIND, PredicateKind.IN_FRONT_OF)
DIRECTIONAL_3D = DIRECTIONAL_2D + (PredicateKind.BELOW, PredicateKind.ABOVE)

# positional parameter names per predicate, in surface-syntax order
PARAM_ORDER = {
    PredicateKind.CLOSE_TO: ("eps_close",),
    PredicateKind.FAR_FROM: ("eps_far",),
    PredicateKind.TOUCH: ("eps_touch",),
    PredicateKind.OVLP: ("delta_overlap",),
    PredicateKind.PART_OVLP: ("delta_overlap", "delta_inside"),
    PredicateKind.ENCL_IN: ("delta_inside",),
    PredicateKind.LEFT_OF: ("kappa",),
    PredicateKind.RIGHT_OF: ("kappa",),
    PredicateKind.BEHIND: ("kappa",),
    PredicateKind.IN_FRONT_OF: ("kappa",),
    PredicateKind.BELOW: ("kappa",),
    PredicateKind.ABOVE: ("kappa",),
    PredicateKind.BETWEEN_PX: ("kappa",),
    PredicateKind.BETWEEN_PY: ("kappa",),
    PredicateKind.ORIENTED: ("kappa",),
    PredicateKind.BEARING_TO: ("theta_ref", "kappa"),
}

ARITY = {kind: 3 if kind in (PredicateKind.BETWEEN_PX, PredicateKind.BETWEEN_PY) else 2
         for kind in PredicateKind}


@dataclass(frozen=True)
class PredicateParams:
    """Thresholds for the quantitative predicates; only the fields a
    predicate names in PARAM_ORDER are consulted."""
    eps_close: Optional[float] = None
    eps_far: Optional[float] = None
    eps_touch: Optional[float] = None
    delta_overlap: Optional[float] = None
    delta_inside: Optional[float] = None
    kappa: Optional[float] = None
    theta_ref: Optional[float] = None

    def require(self, name: str, kind: PredicateKind) -> float:
        v = getattr(self, name)
        if v is None:
            raise SceneError(f"{kind.value}: missing parameter {name}")
        if name == "theta_ref":
            if not (-math.pi < v <= math.pi):
                raise SceneError(f"{kind.value}: theta_ref must lie in (-pi, pi], got {v}")
        elif v <= 0.0:
            raise SceneError(f"{kind.value}: {name} must be positive, got {v}")
        return v

    @classmethod
    def for_kind(cls, kind: PredicateKind, values: Sequence[float]) -> "PredicateParams":
        names = PARAM_ORDER[kind]
        if len(values) != len(names):
            raise SceneError(
                f"{kind.value}: expected {len(names)} parameter(s) {names}, got {len(values)}")
        params = cls(**dict(zip(names, values)))
        for name in names:
            params.require(name, kind)
        return params


@dataclass
class AxisAlignedBox3:
    """Axis-aligned box; corner coordinates are exact in both evaluation
    modes, so its axis extremes never pass through a soft extremum."""
    lo: tuple  # (Scalar, Scalar, Scalar)
    hi: tuple

    def __post_init__(self):
        lo = [value_of(c) for c in self.lo]
        hi = [value_of(c) for c in self.hi]
        if len(self.lo) != 3 or len(self.hi) != 3:
            raise SceneError("box corners must have 3 coordinates")
        for axis, (l, h) in enumerate(zip(lo, hi)):
            if l > h:
                raise SceneError(f"box corner order violated on axis {axis}: {l} > {h}")

    @classmethod
    def from_center(cls, cx: Scalar, cy: Scalar, cz: Scalar,
                    half: tuple[float, float, float]) -> "AxisAlignedBox3":
        return cls((cx - half[0], cy - half[1], cz - half[2]),
                   (cx + half[0], cy + half[1], cz + half[2]))


Shape = Union[ConvexPolygon, AxisAlignedBox3]


@dataclass
class SceneObject:
    name: str
    shape: Shape
    heading: Optional[tuple] = None  # unit vector (Scalar, Scalar)

    def __post_init__(self):
        if self.heading is not None:
            ux, uy = (value_of(c) for c in self.heading)
            if abs(math.hypot(ux, uy) - 1.0) > 1e-6:
                raise SceneError(f"object {self.name!r}: heading must be unit length")


class Scene:
    """Named objects at one time instant."""

    def __init__(self, objects: Sequence[SceneObject]):
        self.objects: dict[str, SceneObject] = {}
        for obj in objects:
            if obj.name in self.objects:
                raise SceneError(f"duplicate object name {obj.name!r}")
            self.objects[obj.name] = obj

    def get(self, name: str) -> SceneObject:
        try:
            return self.objects[name]
        except KeyError:
            raise SceneError(f"formula references unknown object {name!r}") from None


# -- helpers -----------------------------------------------------------------


def _polygon(obj: SceneObject, kind: PredicateKind) -> ConvexPolygon:
    if not isinstance(obj.shape, ConvexPolygon):
        raise SceneError(f"{kind.value}: object {obj.name!r} must be a polygon")
    return obj.shape


def _axis_extremes(obj: SceneObject, axis: int, kind: PredicateKind,
                   smooth: bool, tau: float) -> tuple[Scalar, Scalar]:
    """(min, max) extent of an object along a coordinate axis.

    Polygon extremes use soft extrema in smooth mode; box extremes are the
    corner coordinates in both modes. Axis 2 exists only for boxes.
    """
    shape = obj.shape
    if isinstance(shape, AxisAlignedBox3):
        return shape.lo[axis], shape.hi[axis]
    if axis == 2:
        raise SceneError(
            f"{kind.value}: object {obj.name!r} is planar; the z axis needs a 3D box")
    coords = [v[axis] for v in shape.vertices]
    if smooth:
        return ad.lse_min(coords, tau), ad.lse_max(coords, tau)
    floats = [value_of(c) for c in coords]
    return min(floats), max(floats)


def _centroid_xy(obj: SceneObject) -> tuple[Scalar, Scalar]:
    shape = obj.shape
    if isinstance(shape, AxisAlignedBox3):
        return ((shape.lo[0] + shape.hi[0]) / 2.0, (shape.lo[1] + shape.hi[1]) / 2.0)
    return shape.centroid()


def _heading(obj: SceneObject, kind: PredicateKind) -> tuple[Scalar, Scalar]:
    if obj.heading is None:
        raise SceneError(f"{kind.value}: object {obj.name!r} has no heading")
    return obj.heading


def _pair_clearance(a: SceneObject, b: SceneObject, kind: PredicateKind,
                    smooth: bool, cfg: SmoothingConfig) -> Scalar:
    pa, pb = _polygon(a, kind), _polygon(b, kind)
    if smooth:
        return geo.signed_clearance(pa, pb, cfg)
    return xg.exact_clearance(pa.float_vertices(), pb.float_vertices())


def _pair_distance(a: SceneObject, b: SceneObject, kind: PredicateKind,
                   smooth: bool, cfg: SmoothingConfig) -> Scalar:
    pa, pb = _polygon(a, kind), _polygon(b, kind)
    if smooth:
        return geo.smooth_polygon_distance(pa, pb, cfg)
    return xg.exact_distance(pa.float_vertices(), pb.float_vertices())


def _enclosure(inner: SceneObject, outer: SceneObject, delta_inside: float,
               smooth: bool, cfg: SmoothingConfig) -> Scalar:
    """Containment margin: -delta - (largest signed distance of inner's
    vertices to outer's boundary); boxes use their 6 face margins."""
    if isinstance(inner.shape, AxisAlignedBox3) or isinstance(outer.shape, AxisAlignedBox3):
        if not (isinstance(inner.shape, AxisAlignedBox3)
                and isinstance(outer.shape, AxisAlignedBox3)):
            raise SceneError("enclIn: box operands cannot mix with polygons")
        margins = []
        for axis in range(3):
            margins.append(inner.shape.lo[axis] - outer.shape.lo[axis])
            margins.append(outer.shape.hi[axis] - inner.shape.hi[axis])
        if smooth:
            return ad.lse_min(margins, cfg.tau) - delta_inside
        return min(value_of(m) for m in margins) - delta_inside
    pi = _polygon(inner, PredicateKind.ENCL_IN)
    po = _polygon(outer, PredicateKind.ENCL_IN)
    if smooth:
        sds = [geo.point_polygon_signed_distance(v, po, cfg) for v in pi.vertices]
        return -delta_inside - ad.lse_max(sds, cfg.tau)
    outer_f = po.float_vertices()
    worst = max(xg.exact_point_signed_distance((value_of(x), value_of(y)), outer_f)
                for x, y in pi.vertices)
    return -delta_inside - worst


def _directional(a: SceneObject, b: SceneObject, kind: PredicateKind, kappa: float,
                 smooth: bool, cfg: SmoothingConfig) -> Scalar:
    # (leading object, trailing object, axis): positive when a's extent is
    # clear of b's along the axis by more than kappa
    axis = {PredicateKind.LEFT_OF: 0, PredicateKind.RIGHT_OF: 0,
            PredicateKind.BEHIND: 1, PredicateKind.IN_FRONT_OF: 1,
            PredicateKind.BELOW: 2, PredicateKind.ABOVE: 2}[kind]
    flipped = kind in (PredicateKind.RIGHT_OF, PredicateKind.IN_FRONT_OF,
                       PredicateKind.ABOVE)
    lo_obj, hi_obj = (b, a) if flipped else (a, b)
    # margin = min(hi_obj extent) - max(lo_obj extent) - kappa
    _, lo_max = _axis_extremes(lo_obj, axis, kind, smooth, cfg.tau)
    hi_min, _ = _axis_extremes(hi_obj, axis, kind, smooth, cfg.tau)
    return hi_min - lo_max - kappa


def _between(a: SceneObject, mid: SceneObject, c: SceneObject, axis: int,
             kind: PredicateKind, kappa: float, smooth: bool,
             cfg: SmoothingConfig) -> Scalar:
    _, a_max = _axis_extremes(a, axis, kind, smooth, cfg.tau)
    m_min, m_max = _axis_extremes(mid, axis, kind, smooth, cfg.tau)
    c_min, _ = _axis_extremes(c, axis, kind, smooth, cfg.tau)
    first = m_min - a_max - kappa
    second = c_min - m_max - kappa
    if smooth:
        return ad.lse_min([first, second], cfg.tau)
    return min(first, second)


def _oriented(a: SceneObject, b: SceneObject, kappa: float) -> Scalar:
    ux, uy = _heading(a, PredicateKind.ORIENTED)
    vx, vy = _heading(b, PredicateKind.ORIENTED)
    dx = ux - vx
    dy = uy - vy
    return kappa - 0.5 * (dx * dx + dy * dy)


def _bearing(a: SceneObject, b: SceneObject, theta_ref: float, kappa: float) -> Scalar:
    ax, ay = _centroid_xy(a)
    bx, by = _centroid_xy(b)
    dx = bx - ax
    dy = by - ay
    if math.hypot(value_of(dx), value_of(dy)) < CENTROID_GUARD:
        raise SceneError("bearingTo: centroids coincide; bearing undefined")
    err = ad.wrap_angle(ad.atan2(dy, dx) - theta_ref)
    return kappa - ad.square(err)


# -- entry point ----------------------------------------------------------------


def atom_robustness(scene: Scene, kind: PredicateKind, names: Sequence[str],
                    params: PredicateParams, smooth: bool,
                    cfg: SmoothingConfig = SmoothingConfig()) -> Scalar:
    """Quantitative semantics of one spatial predicate on one scene.

    smooth=False gives the exact reference semantics (plain floats);
    smooth=True gives the differentiable surrogate, which returns a Var
    whenever the scene geometry carries tape variables.
    """
    if len(names) != ARITY[kind]:
        raise SceneError(f"{kind.value}: expected {ARITY[kind]} objects, got {len(names)}")
    objs = [scene.get(n) for n in names]

    if kind is PredicateKind.CLOSE_TO:
        return params.require("eps_close", kind) - _pair_distance(*objs, kind, smooth, cfg)
    if kind is PredicateKind.FAR_FROM:
        return _pair_distance(*objs, kind, smooth, cfg) - params.require("eps_far", kind)
    if kind is PredicateKind.TOUCH:
        clr = _pair_clearance(*objs, kind, smooth, cfg)
        mag = ad.abs_smooth(clr) if smooth else abs(clr)
        return params.require("eps_touch", kind) - mag
    if kind is PredicateKind.OVLP:
        return -_pair_clearance(*objs, kind, smooth, cfg) - params.require("delta_overlap", kind)
    if kind is PredicateKind.PART_OVLP:
        d_ov = params.require("delta_overlap", kind)
        d_in = params.require("delta_inside", kind)
        over = -_pair_clearance(*objs, kind, smooth, cfg) - d_ov
        not_a_in_b = -_enclosure(objs[0], objs[1], d_in, smooth, cfg)
        not_b_in_a = -_enclosure(objs[1], objs[0], d_in, smooth, cfg)
        if smooth:
            return ad.lse_min([over, not_a_in_b, not_b_in_a], cfg.tau)
        return min(over, not_a_in_b, not_b_in_a)
    if kind is PredicateKind.ENCL_IN:
        return _enclosure(objs[0], objs[1], params.require("delta_inside", kind), smooth, cfg)
    if kind in (PredicateKind.LEFT_OF, PredicateKind.RIGHT_OF, PredicateKind.BEHIND,
                PredicateKind.IN_FRONT_OF, PredicateKind.BELOW, PredicateKind.ABOVE):
        return _directional(objs[0], objs[1], kind, params.require("kappa", kind), smooth, cfg)
    if kind is PredicateKind.BETWEEN_PX:
        return _between(objs[0], objs[1], objs[2], 0, kind,
                        params.require("kappa", kind), smooth, cfg)
    if kind is PredicateKind.BETWEEN_PY:
        return _between(objs[0], objs[1], objs[2], 1, kind,
                        params.require("kappa", kind), smooth, cfg)
    if kind is PredicateKind.ORIENTED:
        for o in objs:
            _heading(o, kind)
        return _oriented(objs[0], objs[1], params.require("kappa", kind))
    if kind is PredicateKind.BEARING_TO:
        return _bearing(objs[0], objs[1], params.require("theta_ref", kind),
                        params.require("kappa", kind))
    raise SceneError(f"unhandled predicate {kind}")  # pragma: no cover


def exact_atom_robustness(scene: Scene, kind: PredicateKind, names: Sequence[str],
                          params: PredicateParams) -> float:
    """Exact-mode robustness as a plain float (reference semantics)."""
    return value_of(atom_robustness(scene, kind, names, params, smooth=False))
