"""Primitive-pair contact generation.

Narrow phase: sphere-sphere analytically, sphere-box via closest point,
box-box via separating axes (15 candidates, 3 when both are axis
aligned). Cylinders are coarsened to their bounding boxes here; that is
good enough for the grammars, which only care who touches whom and the
rough normal. A gap of up to eps_pen still counts as touching, so
surfaces the stepper snapped into exact contact register reliably.
"""
from __future__ import annotations

from .config import Thresholds
from .entities import EntityDescriptor, EntityId
from .errors import ValidationError
from .frames import ContactRecord, make_contact
from .geometry import (
    IDENTITY_QUAT,
    Aabb,
    Pose,
    Shape,
    Vec3,
    qrotate,
    vadd,
    vnorm,
    vscale,
    vsub,
)

_DEFAULT_EPS = Thresholds().eps_pen


def _as_convex(shape: Shape) -> tuple[str, Vec3]:
    if shape.kind == "sphere":
        return ("sphere", shape.extents)
    if shape.kind == "cylinder":
        r, hh = shape.extents[0], shape.extents[1]
        return ("box", (r, r, hh))
    return ("box", shape.extents)


def _sphere_sphere(
    ca: Vec3, ra: float, cb: Vec3, rb: float, eps: float
) -> tuple[Vec3, Vec3] | None:
    d = vsub(ca, cb)
    dist = vnorm(d)
    if dist > ra + rb + eps:
        return None
    n = (0.0, 0.0, 1.0) if dist < 1e-12 else vscale(d, 1.0 / dist)
    point = vadd(cb, vscale(n, (dist + rb - ra) * 0.5))
    return n, point


def _sphere_box(
    center: Vec3, r: float, pose: Pose, half: Vec3, eps: float
) -> tuple[Vec3, Vec3] | None:
    """Returns (normal pointing box -> sphere, point) or None."""
    local = pose.inverse_transform(center)
    clamped = (
        min(half[0], max(-half[0], local[0])),
        min(half[1], max(-half[1], local[1])),
        min(half[2], max(-half[2], local[2])),
    )
    if clamped != local:
        delta = vsub(local, clamped)
        dist = vnorm(delta)
        if dist > r + eps:
            return None
        n_local = vscale(delta, 1.0 / dist)
        point = pose.transform(clamped)
    else:
        # center inside the box: exit through the shallowest face
        best_axis, best_sign, best_depth = 0, 1.0, float("inf")
        for i in range(3):
            for sign in (1.0, -1.0):
                depth = half[i] - sign * local[i]
                if depth < best_depth:
                    best_axis, best_sign, best_depth = i, sign, depth
        n_local = tuple(
            best_sign if i == best_axis else 0.0 for i in range(3)
        )  # type: ignore[assignment]
        face = list(local)
        face[best_axis] = best_sign * half[best_axis]
        point = pose.transform((face[0], face[1], face[2]))
    return qrotate(pose.orientation, n_local), point


def _box_axes(pose: Pose) -> tuple[Vec3, Vec3, Vec3]:
    q = pose.orientation
    return (
        qrotate(q, (1.0, 0.0, 0.0)),
        qrotate(q, (0.0, 1.0, 0.0)),
        qrotate(q, (0.0, 0.0, 1.0)),
    )


def _support(axes: tuple[Vec3, Vec3, Vec3], half: Vec3, d: Vec3) -> float:
    return (
        half[0] * abs(axes[0][0] * d[0] + axes[0][1] * d[1] + axes[0][2] * d[2])
        + half[1] * abs(axes[1][0] * d[0] + axes[1][1] * d[1] + axes[1][2] * d[2])
        + half[2] * abs(axes[2][0] * d[0] + axes[2][1] * d[1] + axes[2][2] * d[2])
    )


def _aabb_bounds(
    center: Vec3, axes: tuple[Vec3, Vec3, Vec3], h: Vec3
) -> tuple[list[float], list[float]]:
    lo, hi = [], []
    for i in range(3):
        r = abs(axes[0][i]) * h[0] + abs(axes[1][i]) * h[1] + abs(axes[2][i]) * h[2]
        lo.append(center[i] - r)
        hi.append(center[i] + r)
    return lo, hi


def _box_box(
    pa: Pose, ha: Vec3, pb: Pose, hb: Vec3, eps: float
) -> tuple[Vec3, Vec3] | None:
    axes_a = _box_axes(pa)
    axes_b = _box_axes(pb)
    if pa.orientation == IDENTITY_QUAT and pb.orientation == IDENTITY_QUAT:
        candidates = list(axes_a)  # face axes suffice for aligned boxes
    else:
        candidates = list(axes_a) + list(axes_b)
        for u in axes_a:
            for v in axes_b:
                c = (
                    u[1] * v[2] - u[2] * v[1],
                    u[2] * v[0] - u[0] * v[2],
                    u[0] * v[1] - u[1] * v[0],
                )
                n = vnorm(c)
                if n > 1e-9:
                    candidates.append(vscale(c, 1.0 / n))
    dc = vsub(pa.position, pb.position)
    best_axis: Vec3 | None = None
    best_overlap = float("inf")
    for axis in candidates:
        s = axis[0] * dc[0] + axis[1] * dc[1] + axis[2] * dc[2]
        overlap = _support(axes_a, ha, axis) + _support(axes_b, hb, axis) - abs(s)
        if overlap < -eps:
            return None
        if overlap < best_overlap:
            best_overlap = overlap
            best_axis = axis if s >= 0 else vscale(axis, -1.0)
    assert best_axis is not None
    n = best_axis  # points from b toward a
    # middle of the boxes' bounding-box overlap: exact for face-on-face
    # stacking, a fair stand-in for tilted edge and corner touches
    lo_a, hi_a = _aabb_bounds(pa.position, axes_a, ha)
    lo_b, hi_b = _aabb_bounds(pb.position, axes_b, hb)
    point = (
        (max(lo_a[0], lo_b[0]) + min(hi_a[0], hi_b[0])) / 2.0,
        (max(lo_a[1], lo_b[1]) + min(hi_a[1], hi_b[1])) / 2.0,
        (max(lo_a[2], lo_b[2]) + min(hi_a[2], hi_b[2])) / 2.0,
    )
    return n, point


def _pair_contact(
    pose_a: Pose, shape_a: Shape, pose_b: Pose, shape_b: Shape, eps: float
) -> tuple[Vec3, Vec3] | None:
    kind_a, ext_a = _as_convex(shape_a)
    kind_b, ext_b = _as_convex(shape_b)
    if kind_a == "sphere" and kind_b == "sphere":
        return _sphere_sphere(pose_a.position, ext_a[0], pose_b.position, ext_b[0], eps)
    if kind_a == "sphere":
        return _sphere_box(pose_a.position, ext_a[0], pose_b, ext_b, eps)
    if kind_b == "sphere":
        hit = _sphere_box(pose_b.position, ext_b[0], pose_a, ext_a, eps)
        if hit is None:
            return None
        n, point = hit
        return (-n[0], -n[1], -n[2]), point
    return _box_box(pose_a, ext_a, pose_b, ext_b, eps)


def compute_contacts(
    descriptors: dict[EntityId, EntityDescriptor],
    poses: dict[EntityId, Pose],
    eps_pen: float = _DEFAULT_EPS,
) -> list[ContactRecord]:
    """All touching pairs among the described entities, canonically ordered."""
    ids = sorted(descriptors)
    for eid in ids:
        if eid not in poses:
            raise ValidationError(f"no pose for entity {descriptors[eid].name!r} ({eid})")
    boxes = {
        eid: Aabb.of(poses[eid], descriptors[eid].shape, margin=eps_pen) for eid in ids
    }
    out: list[ContactRecord] = []
    for i, a in enumerate(ids):
        for b in ids[i + 1 :]:
            if not boxes[a].touches(boxes[b]):
                continue
            hit = _pair_contact(
                poses[a], descriptors[a].shape, poses[b], descriptors[b].shape, eps_pen
            )
            if hit is not None:
                normal, point = hit  # from b toward a, a < b already
                out.append(make_contact(a, b, normal, point))
    return out
