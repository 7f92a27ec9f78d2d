"""Pick-and-place phase segmentation, one state machine per hand.

Phases per grasped object: after the grasp the chain sits in GRASPED;
horizontal travel past d_slide opens Sliding (retro-dated to the motion
onset); losing support starts a lift whose PickingUp event is only
emitted once the object leaves a fixed ROI around the break point (a
re-seat inside it discards the lift); Transporting runs from lift end
until a release or a put-down; a put-down is recognized when a contact
with an up-facing normal arrives from an overhead approach, and its
start is found by backtracking the cached trajectory until it either
leaves the put-down ROI or stops approaching monotonically. A contact
not from above opens Sliding instead.

Reaching candidates live in a spherical ROI ahead of the palm. Their
start time re-anchors whenever the hand backs away by more than the
hysteresis band, so the emitted Reaching covers only the final approach.
Contact before the grasp opens a provisional Fixation, emitted when the
grasp confirms and discarded if the hand lets go instead.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from ..config import Thresholds
from ..entities import EntityDescriptor, EntityId
from ..errors import StreamError
from ..events import (
    FIXATION,
    PICKING_UP,
    PUTTING_DOWN,
    REACHING,
    SLIDING,
    TRANSPORTING,
    Event,
)
from ..frames import Frame, HandState
from ..geometry import Vec3, qrotate
from ..intervals import Interval
from .contact import ContactMonitor
from .grasp import GraspMonitor

PALM_FORWARD: Vec3 = (0.0, 0.0, -1.0)  # palm faces down in the hand's own frame

GRASPED = "grasped"
SLIDING_PHASE = "sliding"
PICKING = "picking"
TRANSPORTING_PHASE = "transporting"


def _dist(a: Vec3, b: Vec3) -> float:
    return math.sqrt(
        (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2
    )


@dataclass
class _Candidate:
    reach_start: int
    min_dist: float


@dataclass
class _Chain:
    obj: EntityId
    phase: str
    slide_ref: tuple[float, float]
    slide_onset: int
    sliding_event: Event | None = None
    pickup_event: Event | None = None
    pickup_start: int | None = None
    pickup_roi: Vec3 | None = None
    transport_event: Event | None = None
    cache: deque = field(default_factory=deque)  # (idx, position)
    vels: deque = field(default_factory=deque)  # (idx, linear velocity)


class PnPSegmenter:
    def __init__(
        self,
        ids,
        descriptors: dict[EntityId, EntityDescriptor],
        thresholds: Thresholds,
        times: list[float],
    ):
        self.ids = ids
        self.descriptors = descriptors
        self.th = thresholds
        self.times = times
        self.hand_ids: set[EntityId] = set()
        self.candidates: dict[EntityId, dict[EntityId, _Candidate]] = {}
        self.fixations: dict[EntityId, dict[EntityId, Event]] = {}
        self.chains: dict[EntityId, dict[EntityId, _Chain]] = {}
        self._last_idx = -1

    # ------------------------------------------------------------------
    def step(
        self,
        frame: Frame,
        idx: int,
        contacts: ContactMonitor,
        grasps: GraspMonitor,
    ) -> list[Event]:
        if idx != self._last_idx + 1:
            raise StreamError(f"frame t={frame.t}: segmenter fed out of order")
        self._last_idx = idx
        closed: list[Event] = []
        t = frame.t
        for hand in sorted(frame.hands, key=lambda h: h.hand_id):
            hid = hand.hand_id
            if hid not in self.hand_ids:
                self.hand_ids.add(hid)
                self.candidates[hid] = {}
                self.fixations[hid] = {}
                self.chains[hid] = {}
            self._handle_releases(hid, t, grasps, closed)
            if hid not in frame.sleeping:
                self._update_candidates(hand, frame, idx, closed)
            self._handle_grasp_opens(hand, frame, idx, contacts, grasps, closed)
            self._update_chains(hid, frame, idx, contacts, grasps, closed)
        return closed

    # ------------------------------------------------------------------
    def _handle_releases(
        self, hid: EntityId, t: float, grasps: GraspMonitor, closed: list[Event]
    ) -> None:
        for h, obj, _gev in grasps.closed_this_frame:
            if h != hid:
                continue
            chain = self.chains[hid].pop(obj, None)
            if chain is not None:
                closed.extend(self._close_chain(chain, t))
            self.fixations[hid].pop(obj, None)

    def _close_chain(self, chain: _Chain, end: float) -> list[Event]:
        out = []
        if chain.sliding_event is not None:
            chain.sliding_event.interval = Interval(
                chain.sliding_event.interval.start, end
            )
            out.append(chain.sliding_event)
        if chain.pickup_event is not None:
            chain.pickup_event.interval = Interval(
                chain.pickup_event.interval.start, end
            )
            out.append(chain.pickup_event)
        if chain.transport_event is not None:
            chain.transport_event.interval = Interval(
                chain.transport_event.interval.start, end
            )
            out.append(chain.transport_event)
        return out

    # ------------------------------------------------------------------
    def _update_candidates(
        self, hand: HandState, frame: Frame, idx: int, closed: list[Event]
    ) -> None:
        hid = hand.hand_id
        pose = frame.poses[hid]
        fwd = qrotate(pose.orientation, PALM_FORWARD)
        roi = (
            pose.position[0] + fwd[0] * self.th.reach_offset,
            pose.position[1] + fwd[1] * self.th.reach_offset,
            pose.position[2] + fwd[2] * self.th.reach_offset,
        )
        cands = self.candidates[hid]
        fixes = self.fixations[hid]
        for obj in sorted(self.descriptors):
            if obj == hid or obj in self.hand_ids or obj in self.chains[hid]:
                continue
            touching = bool(hand.sets_touching(obj))
            if obj in fixes:
                if not touching:
                    del fixes[obj]  # hand let go before the grasp: no fixation
                continue
            obj_pos = frame.poses[obj].position
            d_hand = _dist(obj_pos, pose.position)
            cand = cands.get(obj)
            in_roi = _dist(obj_pos, roi) <= self.th.reach_radius
            if cand is None:
                if not in_roi:
                    continue
                cand = _Candidate(idx, d_hand)
                cands[obj] = cand
            elif not in_roi:
                del cands[obj]
                continue
            elif d_hand > cand.min_dist + self.th.retreat_hysteresis:
                # moving away: the approach has not started yet
                cand.reach_start = idx
                cand.min_dist = d_hand
            else:
                cand.min_dist = min(cand.min_dist, d_hand)
            if touching:
                if cand.reach_start < idx:
                    closed.append(
                        Event(
                            id=self.ids.mint(
                                REACHING,
                                {"performer": hid, "object": obj},
                                cand.reach_start,
                            ),
                            type=REACHING,
                            interval=Interval(self.times[cand.reach_start], frame.t),
                            participants={"performer": hid, "object": obj},
                        )
                    )
                del cands[obj]
                fixes[obj] = Event(
                    id=self.ids.mint(FIXATION, {"performer": hid, "object": obj}, idx),
                    type=FIXATION,
                    interval=Interval(frame.t, frame.t),
                    participants={"performer": hid, "object": obj},
                )

    # ------------------------------------------------------------------
    def _handle_grasp_opens(
        self,
        hand: HandState,
        frame: Frame,
        idx: int,
        contacts: ContactMonitor,
        grasps: GraspMonitor,
        closed: list[Event],
    ) -> None:
        hid = hand.hand_id
        opened = [(h, obj, ev) for (h, obj, ev) in grasps.opened_this_frame if h == hid]
        if not opened:
            return
        for _h, obj, _ev in opened:
            if not hand.sets_touching(obj):
                raise StreamError(
                    f"frame t={frame.t}: Grasping open for {obj} without sensor contact"
                )
            fix = self.fixations[hid].pop(obj, None)
            if fix is not None and fix.interval.start < frame.t:
                fix.interval = Interval(fix.interval.start, frame.t)
                closed.append(fix)
            if self.descriptors[obj].is_static:
                continue  # recorded as a grasp, but furniture cannot move
            supported = contacts.supporters(obj) - {hid}
            pos = frame.poses[obj].position
            chain = _Chain(
                obj=obj,
                phase=GRASPED,
                slide_ref=(pos[0], pos[1]),
                slide_onset=idx,
            )
            if not supported:
                chain.phase = TRANSPORTING_PHASE
                chain.transport_event = self._open_motion(
                    TRANSPORTING, hid, obj, idx, frame.t
                )
            self.chains[hid][obj] = chain
        # the grasp resolves the hand's intent: forget the other candidates
        self.candidates[hid].clear()
        grabbed = {obj for _h, obj, _ev in opened}
        for obj in list(self.fixations[hid]):
            if obj not in grabbed:
                del self.fixations[hid][obj]

    def _open_motion(
        self, etype: str, hid: EntityId, obj: EntityId, idx: int, start: float,
        supporter: EntityId | None = None,
    ) -> Event:
        participants = {"performer": hid, "object": obj}
        if supporter is not None:
            participants["supporter"] = supporter
        return Event(
            id=self.ids.mint(etype, participants, idx),
            type=etype,
            interval=Interval(start, start),
            participants=participants,
        )

    # ------------------------------------------------------------------
    def _update_chains(
        self,
        hid: EntityId,
        frame: Frame,
        idx: int,
        contacts: ContactMonitor,
        grasps: GraspMonitor,
        closed: list[Event],
    ) -> None:
        t = frame.t
        for obj in sorted(self.chains[hid]):
            chain = self.chains[hid][obj]
            pos = frame.poses[obj].position
            chain.cache.append((idx, pos))
            self._trim_cache(chain, idx)
            chain.vels.append((idx, frame.twists[obj].linear))
            while len(chain.vels) > self.th.from_above_window + 4:
                chain.vels.popleft()
            supporters = contacts.supporters(obj) - {hid}
            supported = bool(supporters)

            if chain.phase == GRASPED:
                if supported:
                    dxy = math.hypot(
                        pos[0] - chain.slide_ref[0], pos[1] - chain.slide_ref[1]
                    )
                    if dxy <= self.th.slide_onset_eps:
                        chain.slide_onset = idx
                    elif dxy > self.th.d_slide and chain.sliding_event is None:
                        chain.sliding_event = self._open_motion(
                            SLIDING, hid, obj, chain.slide_onset,
                            self.times[chain.slide_onset],
                            supporter=min(supporters),
                        )
                        chain.phase = SLIDING_PHASE
                else:
                    self._begin_lift(chain, hid, obj, idx, pos)
            elif chain.phase == SLIDING_PHASE:
                if not supported:
                    ev = chain.sliding_event
                    ev.interval = Interval(ev.interval.start, t)
                    closed.append(ev)
                    chain.sliding_event = None
                    if self.th.direct_transport_after_slide:
                        chain.phase = TRANSPORTING_PHASE
                        chain.transport_event = self._open_motion(
                            TRANSPORTING, hid, obj, idx, t
                        )
                    else:
                        self._begin_lift(chain, hid, obj, idx, pos)
            elif chain.phase == PICKING:
                outside = _dist(pos, chain.pickup_roi) > self.th.r_pickup
                if supported and not outside:
                    # set back down inside the ROI: not a pick-up after all
                    chain.pickup_event = None
                    chain.pickup_start = None
                    chain.pickup_roi = None
                    chain.phase = GRASPED
                    chain.slide_ref = (pos[0], pos[1])
                    chain.slide_onset = idx
                elif outside:
                    ev = chain.pickup_event
                    ev.interval = Interval(ev.interval.start, t)
                    closed.append(ev)
                    chain.pickup_event = None
                    chain.pickup_start = None
                    chain.pickup_roi = None
                    chain.phase = TRANSPORTING_PHASE
                    chain.transport_event = self._open_motion(
                        TRANSPORTING, hid, obj, idx, t
                    )
            elif chain.phase == TRANSPORTING_PHASE:
                trigger = None
                for pair, cev, rec in contacts.opened_this_frame:
                    if obj not in pair or rec is None:
                        continue
                    other = pair[1] if pair[0] == obj else pair[0]
                    if other in self.hand_ids:
                        continue
                    if rec.normal_on(obj)[2] >= self.th.support_cos:
                        trigger = (cev, rec, other)
                        break
                if trigger is None:
                    continue
                cev, rec, surface = trigger
                t_c = cev.interval.start
                tev = chain.transport_event
                if t_c + 1e-12 < tev.interval.start:
                    continue  # touch began before the carry did: not a landing
                c_idx = idx
                while c_idx > 0 and self.times[c_idx] > t_c + 1e-12:
                    c_idx -= 1
                tev.interval = Interval(tev.interval.start, t_c)
                closed.append(tev)
                chain.transport_event = None
                if self._from_above(chain, c_idx):
                    cut = self._backtrack(chain, c_idx, rec.point)
                    closed.append(
                        Event(
                            id=self.ids.mint(
                                PUTTING_DOWN,
                                {"performer": hid, "object": obj, "supporter": surface},
                                cut,
                            ),
                            type=PUTTING_DOWN,
                            interval=Interval(self.times[cut], t_c),
                            participants={
                                "performer": hid,
                                "object": obj,
                                "supporter": surface,
                            },
                        )
                    )
                    chain.phase = GRASPED
                    chain.slide_ref = (pos[0], pos[1])
                    chain.slide_onset = idx
                else:
                    chain.sliding_event = self._open_motion(
                        SLIDING, hid, obj, c_idx, t_c, supporter=surface
                    )
                    chain.phase = SLIDING_PHASE
                    chain.slide_ref = (pos[0], pos[1])
                    chain.slide_onset = idx

    def _begin_lift(
        self, chain: _Chain, hid: EntityId, obj: EntityId, idx: int, pos: Vec3
    ) -> None:
        chain.phase = PICKING
        chain.pickup_start = idx
        chain.pickup_roi = pos
        chain.pickup_event = self._open_motion(
            PICKING_UP, hid, obj, idx, self.times[idx]
        )

    def _trim_cache(self, chain: _Chain, idx: int) -> None:
        horizon = self.th.t_decay
        if idx >= 1:
            horizon += self.times[idx] - self.times[idx - 1]
        now = self.times[idx]
        while chain.cache and now - self.times[chain.cache[0][0]] > horizon:
            chain.cache.popleft()

    def _from_above(self, chain: _Chain, c_idx: int) -> bool:
        window = range(c_idx - self.th.from_above_window, c_idx)
        vel_at = dict(chain.vels)
        for j in window:
            v = vel_at.get(j)
            if v is None:
                return False
            speed = math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
            if -v[2] < self.th.from_above_speed:
                return False
            if speed <= 0 or -v[2] < self.th.from_above_cos * speed:
                return False
        return True

    def _backtrack(self, chain: _Chain, c_idx: int, center: Vec3) -> int:
        samples = [(i, p) for (i, p) in chain.cache if i <= c_idx]
        dists = [_dist(p, center) for _i, p in samples]
        cut = len(samples) - 1
        for j in range(len(samples) - 2, -1, -1):
            if dists[j] > self.th.r_putdown:
                break  # trajectory leaves the put-down ROI
            if dists[j] < dists[j + 1] - self.th.retreat_hysteresis:
                break  # approach was not monotone beyond this point
            cut = j
        return samples[cut][0]

    # ------------------------------------------------------------------
    def open_events(self) -> list[Event]:
        out: list[Event] = []
        for hid in sorted(self.fixations):
            out.extend(self.fixations[hid].values())
        for hid in sorted(self.chains):
            for chain in self.chains[hid].values():
                for ev in (chain.sliding_event, chain.pickup_event, chain.transport_event):
                    if ev is not None:
                        out.append(ev)
        return sorted(out, key=lambda e: e.sort_key())

    def finish(self, end: float) -> list[Event]:
        closed = []
        for ev in self.open_events():
            ev.interval = Interval(ev.interval.start, max(ev.interval.start, end))
            closed.append(ev)
        for hid in self.chains:
            self.chains[hid].clear()
            self.fixations[hid].clear()
            self.candidates[hid].clear()
        return closed
