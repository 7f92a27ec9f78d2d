"""Rigid-body poses, twists, primitive shapes, and analytic ray casts.

Conventions: right-handed frames, Z up, quaternions as (w, x, y, z)
unit-normalized, positions in meters, angles in radians.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ValidationError

Vec3 = tuple[float, float, float]
Quat = tuple[float, float, float, float]

IDENTITY_QUAT: Quat = (1.0, 0.0, 0.0, 0.0)
_UNIT_TOL = 1e-6


def vadd(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def vsub(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def vscale(a: Vec3, s: float) -> Vec3:
    return (a[0] * s, a[1] * s, a[2] * s)


def vdot(a: Vec3, b: Vec3) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def vcross(a: Vec3, b: Vec3) -> Vec3:
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def vnorm(a: Vec3) -> float:
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def vnormalize(a: Vec3) -> Vec3:
    n = vnorm(a)
    if n < 1e-12:
        raise ValidationError("cannot normalize near-zero vector")
    return (a[0] / n, a[1] / n, a[2] / n)


def qmul(a: Quat, b: Quat) -> Quat:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def qconj(q: Quat) -> Quat:
    return (q[0], -q[1], -q[2], -q[3])


def qnormalize(q: Quat) -> Quat:
    n = math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    if n < 1e-12:
        raise ValidationError("cannot normalize near-zero quaternion")
    return (q[0] / n, q[1] / n, q[2] / n, q[3] / n)


def qrotate(q: Quat, v: Vec3) -> Vec3:
    # q * (0,v) * q^-1 expanded; q must be unit
    w, x, y, z = q
    # t = 2 * cross(q.xyz, v)
    tx = 2.0 * (y * v[2] - z * v[1])
    ty = 2.0 * (z * v[0] - x * v[2])
    tz = 2.0 * (x * v[1] - y * v[0])
    return (
        v[0] + w * tx + (y * tz - z * ty),
        v[1] + w * ty + (z * tx - x * tz),
        v[2] + w * tz + (x * ty - y * tx),
    )


def quat_from_axis_angle(axis: Vec3, angle: float) -> Quat:
    ax = vnormalize(axis)
    h = 0.5 * angle
    s = math.sin(h)
    return (math.cos(h), ax[0] * s, ax[1] * s, ax[2] * s)


def qslerp(a: Quat, b: Quat, t: float) -> Quat:
    """Spherical interpolation along the shorter arc, t in [0, 1]."""
    dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
    if dot < 0.0:
        b = (-b[0], -b[1], -b[2], -b[3])
        dot = -dot
    if dot > 0.9995:
        out = tuple(a[i] + t * (b[i] - a[i]) for i in range(4))
        return qnormalize(out)  # type: ignore[arg-type]
    theta = math.acos(min(1.0, dot))
    sin_theta = math.sin(theta)
    wa = math.sin((1.0 - t) * theta) / sin_theta
    wb = math.sin(t * theta) / sin_theta
    return (
        wa * a[0] + wb * b[0],
        wa * a[1] + wb * b[1],
        wa * a[2] + wb * b[2],
        wa * a[3] + wb * b[3],
    )


def quat_angle(a: Quat, b: Quat) -> float:
    """Geodesic angle between two orientations, in [0, pi]."""
    dot = abs(a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3])
    return 2.0 * math.acos(min(1.0, dot))


@dataclass(frozen=True)
class Pose:
    """Rigid transform: rotate by ``orientation`` then translate by ``position``."""

    position: Vec3
    orientation: Quat = IDENTITY_QUAT

    def __post_init__(self) -> None:
        q = self.orientation
        n = math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
        if abs(n - 1.0) > _UNIT_TOL:
            raise ValidationError(f"orientation norm {n} outside unit tolerance")

    def transform(self, local: Vec3) -> Vec3:
        return vadd(qrotate(self.orientation, local), self.position)

    def inverse_transform(self, world: Vec3) -> Vec3:
        return qrotate(qconj(self.orientation), vsub(world, self.position))

    def compose(self, local: Pose) -> Pose:
        """World pose of ``local`` expressed relative to self."""
        return Pose(
            self.transform(local.position),
            qnormalize(qmul(self.orientation, local.orientation)),
        )

    def relative_to(self, base: Pose) -> Pose:
        """Express self in ``base`` coordinates, so base.compose(result) == self."""
        return Pose(
            base.inverse_transform(self.position),
            qnormalize(qmul(qconj(base.orientation), self.orientation)),
        )


@dataclass(frozen=True)
class Twist:
    """Linear and angular velocity in world coordinates."""

    linear: Vec3 = (0.0, 0.0, 0.0)
    angular: Vec3 = (0.0, 0.0, 0.0)


ZERO_TWIST = Twist()

_SHAPE_KINDS = ("box", "sphere", "cylinder")


@dataclass(frozen=True)
class Shape:
    """Collision primitive in the body frame.

    box:      extents = (hx, hy, hz) half extents
    sphere:   extents = (r, 0, 0)
    cylinder: extents = (r, hh, 0), axis along local Z, hh half height
    """

    kind: str
    extents: Vec3

    def __post_init__(self) -> None:
        if self.kind not in _SHAPE_KINDS:
            raise ValidationError(f"unknown shape kind {self.kind!r}")
        needed = {"box": 3, "sphere": 1, "cylinder": 2}[self.kind]
        if len(self.extents) < needed:
            raise ValidationError(f"{self.kind} needs {needed} extents, got {self.extents}")
        for v in self.extents[:needed]:
            if not (math.isfinite(v) and v > 0):
                raise ValidationError(f"{self.kind} extents must be positive, got {self.extents}")
        # normalize to exactly three slots so serialized forms compare equal
        if len(self.extents) != 3:
            fixed = (tuple(self.extents) + (0.0, 0.0, 0.0))[:3]
            object.__setattr__(self, "extents", fixed)

    @property
    def radius(self) -> float:
        return self.extents[0]

    @property
    def half_height(self) -> float:
        return self.extents[1]

    def bounding_radius(self) -> float:
        if self.kind == "sphere":
            return self.extents[0]
        if self.kind == "cylinder":
            return math.hypot(self.extents[0], self.extents[1])
        return vnorm(self.extents)

    def bounding_box(self) -> Vec3:
        """Axis-aligned half extents in the body frame."""
        if self.kind == "sphere":
            r = self.extents[0]
            return (r, r, r)
        if self.kind == "cylinder":
            r, hh = self.extents[0], self.extents[1]
            return (r, r, hh)
        return self.extents


def sphere_shape(radius: float) -> Shape:
    return Shape("sphere", (radius, 0.0, 0.0))


def box_shape(hx: float, hy: float, hz: float) -> Shape:
    return Shape("box", (hx, hy, hz))


def cylinder_shape(radius: float, half_height: float) -> Shape:
    return Shape("cylinder", (radius, half_height, 0.0))


def _ray_sphere(origin: Vec3, direction: Vec3, center: Vec3, r: float) -> float | None:
    oc = vsub(origin, center)
    b = vdot(oc, direction)
    c = vdot(oc, oc) - r * r
    disc = b * b - c
    if disc < 0.0:
        return None
    sq = math.sqrt(disc)
    t = -b - sq
    if t >= 0.0:
        return t
    t = -b + sq
    return t if t >= 0.0 else None


def _ray_slabs(o: Vec3, d: Vec3, half: Vec3) -> float | None:
    tmin, tmax = 0.0, math.inf
    for i in range(3):
        if abs(d[i]) < 1e-12:
            if abs(o[i]) > half[i]:
                return None
            continue
        t1 = (-half[i] - o[i]) / d[i]
        t2 = (half[i] - o[i]) / d[i]
        if t1 > t2:
            t1, t2 = t2, t1
        tmin = max(tmin, t1)
        tmax = min(tmax, t2)
        if tmin > tmax:
            return None
    return tmin


def _ray_cylinder(o: Vec3, d: Vec3, r: float, hh: float) -> float | None:
    # Local frame: axis is Z. Side wall first, then caps.
    best: float | None = None
    a = d[0] * d[0] + d[1] * d[1]
    if a > 1e-12:
        b = o[0] * d[0] + o[1] * d[1]
        c = o[0] * o[0] + o[1] * o[1] - r * r
        disc = b * b - a * c
        if disc >= 0.0:
            sq = math.sqrt(disc)
            for t in ((-b - sq) / a, (-b + sq) / a):
                if t >= 0.0 and abs(o[2] + t * d[2]) <= hh:
                    best = t if best is None else min(best, t)
                    break
    if abs(d[2]) > 1e-12:
        for zcap in (-hh, hh):
            t = (zcap - o[2]) / d[2]
            if t < 0.0:
                continue
            x = o[0] + t * d[0]
            y = o[1] + t * d[1]
            if x * x + y * y <= r * r and (best is None or t < best):
                best = t
    return best


def ray_intersect(origin: Vec3, direction: Vec3, pose: Pose, shape: Shape) -> float | None:
    """First hit distance along a unit ray, or None on a miss.

    Distance 0.0 is returned when the origin already lies inside the shape.
    """
    direction = vnormalize(direction)
    if shape.kind == "sphere":
        return _ray_sphere(origin, direction, pose.position, shape.extents[0])
    # Work in the shape's local frame for boxes and cylinders.
    o = pose.inverse_transform(origin)
    d = qrotate(qconj(pose.orientation), direction)
    if shape.kind == "box":
        return _ray_slabs(o, d, shape.extents)
    return _ray_cylinder(o, d, shape.extents[0], shape.extents[1])


@dataclass
class Aabb:
    """World-space axis-aligned bounds, used as a broad-phase cull."""

    lo: Vec3
    hi: Vec3

    @staticmethod
    def of(pose: Pose, shape: Shape, margin: float = 0.0) -> "Aabb":
        if shape.kind == "sphere" or pose.orientation == IDENTITY_QUAT:
            half = shape.bounding_box()
        else:
            # Rotate each body axis and take componentwise extents.
            hx, hy, hz = shape.bounding_box()
            ax = qrotate(pose.orientation, (hx, 0.0, 0.0))
            ay = qrotate(pose.orientation, (0.0, hy, 0.0))
            az = qrotate(pose.orientation, (0.0, 0.0, hz))
            half = (
                abs(ax[0]) + abs(ay[0]) + abs(az[0]),
                abs(ax[1]) + abs(ay[1]) + abs(az[1]),
                abs(ax[2]) + abs(ay[2]) + abs(az[2]),
            )
        p = pose.position
        return Aabb(
            (p[0] - half[0] - margin, p[1] - half[1] - margin, p[2] - half[2] - margin),
            (p[0] + half[0] + margin, p[1] + half[1] + margin, p[2] + half[2] + margin),
        )

    def touches(self, other: "Aabb") -> bool:
        return (
            self.lo[0] <= other.hi[0]
            and other.lo[0] <= self.hi[0]
            and self.lo[1] <= other.hi[1]
            and other.lo[1] <= self.hi[1]
            and self.lo[2] <= other.hi[2]
            and other.lo[2] <= self.hi[2]
        )
