"""Shapes, poses, rays, and the contact routine against analytic cases
and a brute separating-axis oracle."""
import math
import random

import pytest

from actmem.contacts import compute_contacts
from actmem.entities import EntityDescriptor
from actmem.errors import ValidationError
from actmem.geometry import (
    Aabb,
    Pose,
    Shape,
    box_shape,
    cylinder_shape,
    qmul,
    qrotate,
    quat_from_axis_angle,
    ray_intersect,
    sphere_shape,
    vnorm,
)

ORIGIN = Pose((0.0, 0.0, 0.0))


def test_ray_hits_unit_sphere():
    d = ray_intersect((0, 0, 2), (0, 0, -1), ORIGIN, sphere_shape(1.0))
    assert d == pytest.approx(1.0, abs=1e-12)


def test_ray_hits_box_slab():
    d = ray_intersect((0.5, 0, 0), (-1, 0, 0), ORIGIN, box_shape(0.1, 0.1, 0.1))
    assert d == pytest.approx(0.4, abs=1e-12)


def test_ray_pointing_away_misses():
    assert ray_intersect((0, 0, 2), (0, 0, 1), ORIGIN, sphere_shape(1.0)) is None
    assert ray_intersect((5, 5, 5), (0, 0, -1), ORIGIN, box_shape(0.1, 0.1, 0.1)) is None


def test_ray_from_inside_sphere():
    d = ray_intersect((0, 0, 0), (1, 0, 0), ORIGIN, sphere_shape(1.0))
    assert d is not None and d >= 0.0


def test_ray_respects_pose_rotation():
    # a thin slab rotated 90 degrees about z swaps its x/y extents
    slab = box_shape(0.5, 0.01, 0.5)
    rot = Pose((0, 0, 0), quat_from_axis_angle((0, 0, 1), math.pi / 2))
    d = ray_intersect((0.4, 0, 0), (-1, 0, 0), rot, slab)
    assert d == pytest.approx(0.4 - 0.01, abs=1e-9)


def test_shape_validation():
    with pytest.raises(ValidationError):
        Shape("pyramid", (1.0, 1.0, 1.0))
    with pytest.raises(ValidationError):
        Shape("box", (1.0, -1.0, 1.0))
    with pytest.raises(ValidationError):
        Shape("sphere", ())


def test_shape_extents_normalized():
    assert Shape("sphere", (0.5,)).extents == (0.5, 0.0, 0.0)
    assert Shape("cylinder", (0.1, 0.2)).extents == (0.1, 0.2, 0.0)
    # extra slots from serialized forms are dropped
    assert Shape("box", (1.0, 2.0, 3.0, 0.0, 0.0)).extents == (1.0, 2.0, 3.0)


def test_quaternion_rotate_roundtrip():
    q = quat_from_axis_angle((0, 1, 0), 0.7)
    qi = (q[0], -q[1], -q[2], -q[3])
    v = (0.3, -0.2, 0.9)
    back = qrotate(qi, qrotate(q, v))
    assert vnorm(tuple(a - b for a, b in zip(back, v))) < 1e-12


def test_quat_mul_identity():
    q = quat_from_axis_angle((1, 0, 0), 1.1)
    ident = (1.0, 0.0, 0.0, 0.0)
    assert qmul(q, ident) == pytest.approx(q)


def _desc(eid, shape, pose):
    return (
        EntityDescriptor(
            id=eid, name=eid, class_tag="Entity", shape=shape, mass=1.0,
            parts=(), is_static=False,
        ),
        pose,
    )


def _contacts(*items, eps=0.005):
    descs = {}
    poses = {}
    for d, p in items:
        descs[d.id] = d
        poses[d.id] = p
    return compute_contacts(descs, poses, eps)


def test_touching_spheres_contact():
    out = _contacts(
        _desc("a", sphere_shape(1.0), Pose((0, 0, 0))),
        _desc("b", sphere_shape(1.0), Pose((1.9, 0, 0))),
    )
    assert len(out) == 1
    c = out[0]
    assert {c.a, c.b} == {"a", "b"}
    assert abs(abs(c.normal[0]) - 1.0) < 1e-9


def test_separated_spheres_no_contact():
    out = _contacts(
        _desc("a", sphere_shape(1.0), Pose((0, 0, 0))),
        _desc("b", sphere_shape(1.0), Pose((2.1, 0, 0))),
        eps=0.05,
    )
    assert out == []


def test_stacked_boxes_normal_vertical():
    out = _contacts(
        _desc("lo", box_shape(0.5, 0.5, 0.5), Pose((0, 0, 0.5))),
        _desc("hi", box_shape(0.5, 0.5, 0.5), Pose((0, 0, 1.5))),
    )
    assert len(out) == 1
    nz = out[0].normal[2]
    assert abs(abs(nz) - 1.0) < 1e-9


def _aabbs_overlap(p1, s1, p2, s2, eps):
    a = Aabb.of(p1, s1, margin=eps / 2)
    b = Aabb.of(p2, s2, margin=eps / 2)
    return a.touches(b)


def test_axis_aligned_boxes_match_interval_oracle():
    # axis-aligned boxes: contact iff the three 1-D extent intervals
    # overlap within tolerance, checked over random configurations
    rng = random.Random(4242)
    for trial in range(300):
        h1 = tuple(rng.uniform(0.05, 0.5) for _ in range(3))
        h2 = tuple(rng.uniform(0.05, 0.5) for _ in range(3))
        p1 = tuple(rng.uniform(-1, 1) for _ in range(3))
        p2 = tuple(rng.uniform(-1, 1) for _ in range(3))
        eps = 0.005
        expect = all(
            abs(p1[i] - p2[i]) <= h1[i] + h2[i] + eps for i in range(3)
        )
        out = _contacts(
            _desc("a", box_shape(*h1), Pose(p1)),
            _desc("b", box_shape(*h2), Pose(p2)),
            eps=eps,
        )
        assert bool(out) == expect, (trial, p1, h1, p2, h2)


def test_touching_surface_configurations():
    # randomized exact-surface contacts: drop a box straight onto another
    rng = random.Random(77)
    for _ in range(100):
        h1 = tuple(rng.uniform(0.05, 0.4) for _ in range(3))
        h2 = tuple(rng.uniform(0.05, 0.4) for _ in range(3))
        x = rng.uniform(-(h1[0] + h2[0]) * 0.9, (h1[0] + h2[0]) * 0.9)
        lo = _desc("lo", box_shape(*h1), Pose((0, 0, h1[2])))
        hi = _desc("hi", box_shape(*h2), Pose((x, 0, 2 * h1[2] + h2[2])))
        out = _contacts(lo, hi)
        assert len(out) == 1
        assert abs(abs(out[0].normal[2]) - 1.0) < 1e-9


def test_contact_pair_canonical_order():
    out = _contacts(
        _desc("zz", sphere_shape(0.5), Pose((0, 0, 0))),
        _desc("aa", sphere_shape(0.5), Pose((0.9, 0, 0))),
    )
    assert len(out) == 1
    assert out[0].a < out[0].b


def test_relabeling_invariance():
    cfg = [
        (sphere_shape(0.4), Pose((0, 0, 0))),
        (box_shape(0.3, 0.3, 0.3), Pose((0.6, 0, 0))),
        (cylinder_shape(0.2, 0.4), Pose((0, 0.45, 0))),
    ]
    out1 = _contacts(*(_desc(f"e{i}", s, p) for i, (s, p) in enumerate(cfg)))
    out2 = _contacts(*(_desc(f"w{9 - i}", s, p) for i, (s, p) in enumerate(cfg)))
    # same geometry, different ids: the contact pair count and normals agree
    assert len(out1) == len(out2)
    n1 = sorted(tuple(round(abs(x), 9) for x in c.normal) for c in out1)
    n2 = sorted(tuple(round(abs(x), 9) for x in c.normal) for c in out2)
    assert n1 == n2
