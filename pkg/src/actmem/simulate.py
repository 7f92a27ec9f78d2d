"""Quasi-static scenario stepping.

Hands are unit-mass double integrators pushed by PID force toward
ramping script targets, so they track ramps with no steady-state lag and
settle critically damped. Everything else is kinematic: a grasped object
is rigidly attached to its hand, an ungrasped object either follows the
thing it rests on or falls at constant speed until it lands, and a
landing snaps shapes into exact touch. No forces act between objects.

The stepper also fabricates what real hardware would report: per-frame
contacts, hand sensor coverage, gaze, backward-difference velocities,
and the sleeping set (entities unchanged for n_sleep frames).
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

from .config import SimParams, Thresholds
from .contacts import _pair_contact, compute_contacts
from .entities import EntityDescriptor, EntityId, IdMinter, derive_id, descriptor
from .errors import ValidationError
from .frames import Frame, Gaze, HandState
from .geometry import (
    Aabb,
    Pose,
    Twist,
    Vec3,
    qconj,
    qmul,
    qnormalize,
    qslerp,
    quat_from_axis_angle,
    vnorm,
    vnormalize,
    vscale,
    vsub,
)
from .control import Pid3Config, Pid3State, pid3_step
from .scenario import MOVE_HAND, SET_GRASP, ScenarioScript
from .traceio import TraceHeader

# sensor groups covering a held object, per grasp style
STYLE_COVERAGE: dict[str, frozenset[str]] = {
    "pinch": frozenset({"thumb", "fingers"}),
    "wrap": frozenset({"thumb", "fingers", "palm"}),
    "tripod": frozenset({"thumb", "fingers"}),
    "lateral": frozenset({"thumb", "fingers"}),
}
PRE_GRASP_COVERAGE = frozenset({"fingers"})

_POSE_EPS = 1e-12


@dataclass
class SimLog:
    """Per-frame stepper bookkeeping, index-aligned with the frames."""

    attached: list[dict[EntityId, frozenset[EntityId]]] = field(default_factory=list)
    supported_on: list[dict[EntityId, EntityId]] = field(default_factory=list)
    falling: list[frozenset[EntityId]] = field(default_factory=list)


@dataclass
class SimResult:
    header: TraceHeader
    frames: list[Frame]
    log: SimLog
    task_id: EntityId


@dataclass
class _MoveSeg:
    t0: float
    t1: float
    src: Pose
    dst: Pose


@dataclass
class _GraspSeg:
    t0: float
    t1: float
    u0: float
    u1: float
    style: str


class _HandCtl:
    def __init__(self, eid: EntityId, spec_pose: Pose, params: SimParams):
        self.id = eid
        self.pos: Vec3 = spec_pose.position
        self.vel: Vec3 = (0.0, 0.0, 0.0)
        self.quat = spec_pose.orientation
        self.ang_vel: Vec3 = (0.0, 0.0, 0.0)
        cfg = Pid3Config(
            kp=params.hand_kp,
            ki=params.hand_ki,
            kd=params.hand_kd,
            max_output=params.hand_kp * params.hand_max_speed,
            integral_clamp=params.hand_integral_clamp,
        )
        self.cfg = cfg
        self.pid_pos = Pid3State()
        self.pid_rot = Pid3State()
        self.moves: list[_MoveSeg] = []
        self.grasps: list[_GraspSeg] = []
        self.initial_pose = spec_pose
        self.attached: dict[EntityId, Pose] = {}

    def target_at(self, t: float) -> Pose:
        cur = self.initial_pose
        for seg in self.moves:
            if t < seg.t0:
                break
            if t >= seg.t1:
                cur = seg.dst
                continue
            w = (t - seg.t0) / (seg.t1 - seg.t0) if seg.t1 > seg.t0 else 1.0
            pos = tuple(
                seg.src.position[i] + w * (seg.dst.position[i] - seg.src.position[i])
                for i in range(3)
            )
            return Pose(pos, qslerp(seg.src.orientation, seg.dst.orientation, w))
        return cur

    def grasp_at(self, t: float) -> tuple[float, str]:
        u, style = 0.0, "pinch"
        for seg in self.grasps:
            if t < seg.t0:
                break
            style = seg.style
            if t >= seg.t1:
                u = seg.u1
                continue
            w = (t - seg.t0) / (seg.t1 - seg.t0) if seg.t1 > seg.t0 else 1.0
            return seg.u0 + w * (seg.u1 - seg.u0), style
        return u, style


def _rotation_error(q_target, q) -> Vec3:
    qe = qmul(q_target, qconj(q))
    if qe[0] < 0.0:
        qe = (-qe[0], -qe[1], -qe[2], -qe[3])
    v = (qe[1], qe[2], qe[3])
    n = vnorm(v)
    if n < 1e-12:
        return (0.0, 0.0, 0.0)
    angle = 2.0 * math.atan2(n, qe[0])
    return vscale(v, angle / n)


def _xy_overlap(a: Aabb, b: Aabb) -> bool:
    return (
        a.lo[0] <= b.hi[0]
        and b.lo[0] <= a.hi[0]
        and a.lo[1] <= b.hi[1]
        and b.lo[1] <= a.hi[1]
    )


class _Stepper:
    def __init__(self, script: ScenarioScript, params: SimParams, th: Thresholds,
                 seed: int | None):
        script.validate()
        self.script = script
        self.params = params
        self.th = th
        minter = IdMinter(script.seed if seed is None else seed)
        self.task_id = minter.mint(f"task:{script.name}")
        tx = script.taxonomy()

        self.descs: dict[EntityId, EntityDescriptor] = {}
        self.name_to_id: dict[str, EntityId] = {}
        for spec in script.entities:
            self.name_to_id[spec.name] = derive_id(self.task_id, spec.name)
        for spec in script.entities:
            eid = self.name_to_id[spec.name]
            self.descs[eid] = descriptor(
                eid, spec.name, spec.class_tag, spec.shape, spec.mass,
                parts=tuple(self.name_to_id[p] for p in spec.parts),
            )
        self.poses: dict[EntityId, Pose] = {
            self.name_to_id[s.name]: s.pose for s in script.entities
        }
        hand_names = set(script.hand_names())
        self.hands: dict[EntityId, _HandCtl] = {}
        for spec in script.entities:
            if spec.name in hand_names:
                if spec.mass <= 0:
                    raise ValidationError(f"hand {spec.name!r} must have mass > 0")
                eid = self.name_to_id[spec.name]
                self.hands[eid] = _HandCtl(eid, spec.pose, params)
        self.hand_order = sorted(self.hands)

        self._build_segments()
        # kinematic mode per movable non-hand entity
        self.supported_on: dict[EntityId, EntityId] = {}
        self.support_rel: dict[EntityId, Pose] = {}
        self.falling: set[EntityId] = set()
        self._resolve_initial_support()

        self.grasp_input: dict[EntityId, float] = {h: 0.0 for h in self.hands}
        self.grasp_style: dict[EntityId, str] = {h: "pinch" for h in self.hands}
        self.rest_count: dict[EntityId, int] = {e: 0 for e in self.descs}
        self.prev_partners: dict[EntityId, frozenset[EntityId]] = {}
        self.prev_coverage: dict[EntityId, frozenset[str]] = {}
        self.frames: list[Frame] = []
        self.log = SimLog()
        self._eye = self._eye_origin()
        self._scene_center = self._center()

    def _build_segments(self) -> None:
        sched = self.script.schedule()
        for i, d in enumerate(self.script.directives):
            if d.op == MOVE_HAND:
                h = self.hands[self.name_to_id[d.hand]]
                src = h.moves[-1].dst if h.moves else h.initial_pose
                t0, t1 = sched[i]
                h.moves.append(_MoveSeg(t0, t1, src, d.target))
            elif d.op == SET_GRASP:
                h = self.hands[self.name_to_id[d.hand]]
                u0 = h.grasps[-1].u1 if h.grasps else 0.0
                t0, t1 = sched[i]
                h.grasps.append(_GraspSeg(t0, t1, u0, d.u, d.style))

    def _movable_objects(self) -> list[EntityId]:
        return sorted(
            e for e, d in self.descs.items()
            if not d.is_static and e not in self.hands
        )

    def _resolve_initial_support(self) -> None:
        objs = sorted(self._movable_objects(), key=lambda e: self.poses[e].position[2])
        placed = {e for e, d in self.descs.items() if d.is_static}
        for obj in objs:
            box = Aabb.of(self.poses[obj], self.descs[obj].shape)
            best: tuple[float, EntityId] | None = None
            for cand in sorted(placed):
                if cand == obj:
                    continue
                cbox = Aabb.of(self.poses[cand], self.descs[cand].shape)
                if not _xy_overlap(box, cbox):
                    continue
                gap = box.lo[2] - cbox.hi[2]
                if -1e-6 <= gap <= 2e-3 and (best is None or cbox.hi[2] > best[0]):
                    best = (cbox.hi[2], cand)
            if best is not None:
                self._land(obj, best[1])
                placed.add(obj)
            else:
                self.falling.add(obj)

    def _land(self, obj: EntityId, supporter: EntityId) -> None:
        pose = self.poses[obj]
        box = Aabb.of(pose, self.descs[obj].shape)
        top = Aabb.of(self.poses[supporter], self.descs[supporter].shape).hi[2]
        dz = top - box.lo[2]
        snapped = Pose(
            (pose.position[0], pose.position[1], pose.position[2] + dz),
            pose.orientation,
        )
        self.poses[obj] = snapped
        self.falling.discard(obj)
        self.supported_on[obj] = supporter
        self.support_rel[obj] = snapped.relative_to(self.poses[supporter])

    def _eye_origin(self) -> Vec3:
        if self.hand_order:
            p = self.hands[self.hand_order[0]].initial_pose.position
            return (p[0], p[1] - self.params.gaze_back, self.params.gaze_height)
        return (0.0, -self.params.gaze_back, self.params.gaze_height)

    def _center(self) -> Vec3:
        if not self.poses:
            return (0.0, 0.5, 0.0)
        n = len(self.poses)
        sx = sum(p.position[0] for p in self.poses.values())
        sy = sum(p.position[1] for p in self.poses.values())
        sz = sum(p.position[2] for p in self.poses.values())
        return (sx / n, sy / n, sz / n)

    def _touching_hand(self, hand: _HandCtl) -> set[EntityId]:
        """Objects whose shape intersects the hand's, at current poses."""
        out: set[EntityId] = set()
        hand_pose = Pose(hand.pos, hand.quat)
        hand_shape = self.descs[hand.id].shape
        for obj in sorted(self.descs):
            if obj == hand.id or obj in self.hands:
                continue
            hit = _pair_contact(
                hand_pose, hand_shape, self.poses[obj], self.descs[obj].shape,
                self.th.eps_pen,
            )
            if hit is not None:
                out.add(obj)
        return out

    def _step_hand(self, hand: _HandCtl, t: float, dt: float) -> None:
        target = hand.target_at(t)
        err = vsub(target.position, hand.pos)
        force, hand.pid_pos = pid3_step(hand.cfg, hand.pid_pos, err, dt)
        if any(force) or any(hand.vel):
            hand.vel = tuple(hand.vel[i] + force[i] * dt for i in range(3))
            hand.pos = tuple(hand.pos[i] + hand.vel[i] * dt for i in range(3))
            # critically damped settle decays forever without quite reaching
            # zero; snap onto the target once both error and speed are sub-
            # micron so resting hands go bit-stable and can fall asleep
            if vnorm(err) < 1e-6 and vnorm(hand.vel) < 1e-6:
                hand.pos = target.position
                hand.vel = (0.0, 0.0, 0.0)
        rerr = _rotation_error(target.orientation, hand.quat)
        torque, hand.pid_rot = pid3_step(hand.cfg, hand.pid_rot, rerr, dt)
        if any(torque) or any(hand.ang_vel):
            hand.ang_vel = tuple(hand.ang_vel[i] + torque[i] * dt for i in range(3))
            w = vnorm(hand.ang_vel)
            if w > 1e-12:
                rot = quat_from_axis_angle(hand.ang_vel, w * dt)
                hand.quat = qnormalize(qmul(rot, hand.quat))
            if vnorm(rerr) < 1e-6 and vnorm(hand.ang_vel) < 1e-6:
                hand.quat = target.orientation
                hand.ang_vel = (0.0, 0.0, 0.0)
        self.poses[hand.id] = Pose(hand.pos, hand.quat)

    def _follow_supporters(self, prev_poses: dict[EntityId, Pose]) -> None:
        # dependents update after the thing they rest on; a few passes
        # reach a fixpoint because support chains are short. A follower is
        # recomputed only when its supporter moved, keeping resting poses
        # bit-stable frame over frame.
        pending = dict(self.supported_on)
        for _ in range(len(pending) + 1):
            if not pending:
                break
            progressed = False
            for obj in sorted(pending):
                supp = pending[obj]
                if supp in pending:
                    continue  # wait for its own supporter
                if self.poses[supp] != prev_poses.get(supp, self.poses[supp]):
                    self.poses[obj] = self.poses[supp].compose(self.support_rel[obj])
                del pending[obj]
                progressed = True
            if not progressed:
                raise ValidationError("support cycle detected")

    def _step_falling(self, dt: float) -> None:
        drop = self.params.fall_speed * dt
        landed_supporters = set(self.descs) - self.falling - set(self.hands)
        for h in self.hands.values():
            landed_supporters.update(h.attached)
        for obj in sorted(self.falling):
            pose = self.poses[obj]
            box = Aabb.of(pose, self.descs[obj].shape)
            old_bottom = box.lo[2]
            new_bottom = old_bottom - drop
            best: tuple[float, EntityId] | None = None
            for cand in sorted(landed_supporters):
                if cand == obj or cand in self.hands:
                    continue
                cbox = Aabb.of(self.poses[cand], self.descs[cand].shape)
                if not _xy_overlap(box, cbox):
                    continue
                top = cbox.hi[2]
                if old_bottom >= top - 1e-9 and new_bottom <= top:
                    if best is None or top > best[0]:
                        best = (top, cand)
            if best is not None:
                self._land(obj, best[1])
            else:
                self.poses[obj] = Pose(
                    (pose.position[0], pose.position[1], pose.position[2] - drop),
                    pose.orientation,
                )

    def _update_attachment(self, hand: _HandCtl, t: float) -> None:
        u, style = hand.grasp_at(t)
        self.grasp_input[hand.id] = u
        self.grasp_style[hand.id] = style
        active = u > self.th.g_min
        if not active and hand.attached:
            for obj in sorted(hand.attached):
                self.falling.add(obj)  # landing pass may re-seat it immediately
            hand.attached.clear()
        if active:
            hand_pose = Pose(hand.pos, hand.quat)
            for obj in sorted(self._touching_hand(hand)):
                if obj in hand.attached or self.descs[obj].is_static:
                    continue
                if any(obj in other.attached for other in self.hands.values()):
                    continue
                self.supported_on.pop(obj, None)
                self.support_rel.pop(obj, None)
                self.falling.discard(obj)
                hand.attached[obj] = self.poses[obj].relative_to(hand_pose)

    def _coverage(self, hand: _HandCtl) -> dict[EntityId, frozenset[str]]:
        touching = self._touching_hand(hand)
        u = self.grasp_input[hand.id]
        style = self.grasp_style[hand.id]
        out: dict[EntityId, frozenset[str]] = {}
        for obj in touching:
            if u > self.th.g_min:
                out[obj] = STYLE_COVERAGE[style]
            else:
                out[obj] = PRE_GRASP_COVERAGE
        return out

    def _gaze(self, t: float) -> Gaze:
        point = self._scene_center
        best_start = -1.0
        for hid in self.hand_order:
            for seg in self.hands[hid].moves:
                if seg.t0 <= t and seg.t0 > best_start:
                    best_start = seg.t0
                    w = 1.0 if t >= seg.t1 else (
                        (t - seg.t0) / (seg.t1 - seg.t0) if seg.t1 > seg.t0 else 1.0
                    )
                    point = tuple(
                        seg.src.position[i]
                        + w * (seg.dst.position[i] - seg.src.position[i])
                        for i in range(3)
                    )
        d = vsub(point, self._eye)
        if vnorm(d) < 1e-9:
            d = (0.0, 1.0, 0.0)
        return Gaze(self._eye, vnormalize(d))

    def _emit(self, k: int, prev_poses: dict[EntityId, Pose] | None) -> None:
        t = k / self.params.frame_rate
        dt = self.params.dt
        contacts = compute_contacts(self.descs, self.poses, self.th.eps_pen)

        twists: dict[EntityId, Twist] = {}
        for eid in sorted(self.descs):
            if prev_poses is None:
                twists[eid] = Twist()
                continue
            prev = prev_poses[eid]
            cur = self.poses[eid]
            lin = vscale(vsub(cur.position, prev.position), 1.0 / dt)
            ang = vscale(_rotation_error(cur.orientation, prev.orientation), 1.0 / dt)
            twists[eid] = Twist(lin, ang)

        hand_states: list[HandState] = []
        coverage_by_obj: dict[EntityId, frozenset[str]] = {}
        hand_signature: dict[EntityId, tuple] = {}
        for hid in self.hand_order:
            hand = self.hands[hid]
            cov = self._coverage(hand)
            sensor: dict[str, set[EntityId]] = {}
            for obj, sets in cov.items():
                coverage_by_obj[obj] = coverage_by_obj.get(obj, frozenset()) | sets
                for name in sets:
                    sensor.setdefault(name, set()).add(obj)
            hand_states.append(
                HandState(
                    hand_id=hid,
                    grasp_style=self.grasp_style[hid],
                    grasp_input=self.grasp_input[hid],
                    sensor_contacts={n: frozenset(o) for n, o in sensor.items()},
                )
            )
            hand_signature[hid] = (
                self.grasp_input[hid],
                tuple(sorted((o, tuple(sorted(s))) for o, s in cov.items())),
            )

        partners: dict[EntityId, set[EntityId]] = {e: set() for e in self.descs}
        for c in contacts:
            partners[c.a].add(c.b)
            partners[c.b].add(c.a)
        frozen_partners = {e: frozenset(p) for e, p in partners.items()}

        for eid in sorted(self.descs):
            changed = False
            if prev_poses is not None:
                prev = prev_poses[eid]
                cur = self.poses[eid]
                changed = any(
                    abs(prev.position[i] - cur.position[i]) > _POSE_EPS for i in range(3)
                ) or any(
                    abs(prev.orientation[i] - cur.orientation[i]) > _POSE_EPS
                    for i in range(4)
                )
            if frozen_partners[eid] != self.prev_partners.get(eid, frozenset()):
                changed = True
            if eid in self.hands:
                if hand_signature[eid] != self.prev_coverage.get(eid):
                    changed = True
            elif coverage_by_obj.get(eid, frozenset()) != self.prev_coverage.get(
                eid, frozenset()
            ):
                changed = True
            if prev_poses is None or changed:
                self.rest_count[eid] = 0
            else:
                self.rest_count[eid] += 1
        self.prev_partners = frozen_partners
        for hid in self.hand_order:
            self.prev_coverage[hid] = hand_signature[hid]
        for eid in sorted(self.descs):
            if eid not in self.hands:
                self.prev_coverage[eid] = coverage_by_obj.get(eid, frozenset())

        sleeping = frozenset(
            e for e, n in self.rest_count.items() if n >= self.params.n_sleep
        )
        self.frames.append(
            Frame(
                t=t,
                poses=dict(sorted(self.poses.items())),
                twists=twists,
                contacts=contacts,
                hands=hand_states,
                gaze=self._gaze(t),
                sleeping=sleeping,
            )
        )
        self.log.attached.append(
            {hid: frozenset(self.hands[hid].attached) for hid in self.hand_order}
        )
        self.log.supported_on.append(dict(sorted(self.supported_on.items())))
        self.log.falling.append(frozenset(self.falling))

    def run(self) -> SimResult:
        dt = self.params.dt
        n = self.script.frame_count()
        self._emit(0, None)
        for k in range(1, n):
            t = k / self.params.frame_rate
            prev_poses = dict(self.poses)
            for hid in self.hand_order:
                self._step_hand(self.hands[hid], t, dt)
            for hid in self.hand_order:
                self._update_attachment(self.hands[hid], t)
            for hid in self.hand_order:
                hand = self.hands[hid]
                hand_pose = Pose(hand.pos, hand.quat)
                for obj in sorted(hand.attached):
                    self.poses[obj] = hand_pose.compose(hand.attached[obj])
            self._follow_supporters(prev_poses)
            self._step_falling(dt)
            self._emit(k, prev_poses)
        header = TraceHeader(
            task=self.script.name,
            frame_rate=self.params.frame_rate,
            entities=[self.descs[self.name_to_id[s.name]] for s in self.script.entities],
        )
        return SimResult(header, self.frames, self.log, self.task_id)


def simulate(
    script: ScenarioScript,
    params: SimParams | None = None,
    thresholds: Thresholds | None = None,
    seed: int | None = None,
) -> SimResult:
    """Run a script to completion; frame k is stamped k/frame_rate."""
    if params is None:
        params = SimParams(frame_rate=script.frame_rate)
    elif abs(params.frame_rate - script.frame_rate) > 1e-9:
        params = dataclasses.replace(params, frame_rate=script.frame_rate)
    th = thresholds or Thresholds()
    return _Stepper(script, params, th, seed).run()
