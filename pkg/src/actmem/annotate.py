"""Offline annotation: derive grasp and motion-phase events from a full trace.

This is a second, independent derivation of the same event grammar the
online monitors implement. It works pair by pair over whole-trace
arrays instead of interleaving per-frame state machines, so the two
paths share only the threshold contract and can be checked against
each other. Events come out with source "script".

Assumes the feed wakes an entity whenever its contact set changes (the
simulator guarantees this); under that assumption debounce runs never
begin inside a both-asleep stretch.
"""
from __future__ import annotations

import math
import uuid

from .config import Thresholds
from .entities import APP_NAMESPACE, EntityId, derive_id
from .events import (
    CONTACT,
    FIXATION,
    GRASPING,
    PICKING_UP,
    PUTTING_DOWN,
    REACHING,
    SLIDING,
    SUPPORTED_BY,
    TRANSPORTING,
    Event,
)
from .frames import ContactRecord, Frame
from .geometry import qrotate
from .intervals import Interval
from .traceio import TraceHeader

_PALM = (0.0, 0.0, -1.0)  # palm-forward convention: local -Z


def _dist(a, b) -> float:
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2)


def _runs(flags: list[bool]) -> list[tuple[int, int]]:
    """Maximal [start, end) stretches of True."""
    out = []
    start = None
    for k, v in enumerate(flags):
        if v and start is None:
            start = k
        elif not v and start is not None:
            out.append((start, k))
            start = None
    if start is not None:
        out.append((start, len(flags)))
    return out


def _debounced_spans(
    flags: list[bool], n_deb: int
) -> list[tuple[int, int, int | None, int | None]]:
    """Confirmed touch spans: (open, open_confirm, close, close_confirm).

    A span opens once n_deb consecutive True frames occur (boundary at
    the run start, confirmation where the count is reached) and closes
    the same way on a False run. Shorter runs of either kind are noise.
    """
    spans = []
    state = False
    open_idx = conf_idx = None
    run_val: bool | None = None
    run_start = run_len = 0
    for k, v in enumerate(flags):
        if v is not run_val:
            run_val = v
            run_start = k
            run_len = 1
        else:
            run_len += 1
        if run_val and not state and run_len == n_deb:
            state = True
            open_idx = run_start
            conf_idx = k
        elif not run_val and state and run_len == n_deb:
            state = False
            spans.append((open_idx, conf_idx, run_start, k))
    if state:
        spans.append((open_idx, conf_idx, None, None))
    return spans


class _Annotator:
    def __init__(self, header: TraceHeader, frames: list[Frame], th: Thresholds):
        self.th = th
        self.frames = frames
        self.n = len(frames)
        self.times = [f.t for f in frames]
        self.desc = header.descriptor_map()
        self.hands = sorted({h.hand_id for f in frames for h in f.hands})
        self.objects = sorted(o for o in self.desc if o not in self.hands)
        self.ns = str(uuid.uuid5(APP_NAMESPACE, f"annotations:{header.task}"))
        self._counts: dict[str, int] = {}
        self.events: list[Event] = []
        self._hand_states = {
            h: [f.hand(h) for f in frames] for h in self.hands
        }
        self._spans = self._contact_spans()
        self._supports = self._support_intervals()

    # -- shared emit ---------------------------------------------------
    def _emit(self, etype, start_idx, end_idx, participants, attributes=None):
        roles = "|".join(f"{r}={participants[r]}" for r in sorted(participants))
        key = f"{etype}|{roles}|{start_idx}"
        seen = self._counts.get(key, 0)
        self._counts[key] = seen + 1
        if seen:
            key = f"{key}|{seen}"
        self.events.append(
            Event(
                id=derive_id(self.ns, key),
                type=etype,
                interval=Interval(self.times[start_idx], self.times[end_idx]),
                participants=dict(participants),
                attributes=dict(attributes or {}),
                source="script",
            )
        )

    # -- contact and support groundwork --------------------------------
    def _contact_spans(self):
        """Debounced contact spans per canonical pair, plus raw records."""
        pairs = sorted({c.pair for f in self.frames for c in f.contacts})
        out = {}
        for pair in pairs:
            a, b = pair
            raw: list[ContactRecord | None] = []
            eff: list[ContactRecord | None] = []
            for k, f in enumerate(self.frames):
                rec = f.contact_between(a, b)
                raw.append(rec)
                if a in f.sleeping and b in f.sleeping and k > 0:
                    eff.append(eff[k - 1])
                else:
                    eff.append(rec)
            flags = [r is not None for r in eff]
            spans = _debounced_spans(flags, self.th.debounce_frames)
            out[pair] = (spans, raw, eff)
        return out

    def _support_intervals(self):
        """(supported, supporter) -> [start, end) index runs."""
        out: dict[tuple[EntityId, EntityId], list[tuple[int, int]]] = {}
        for pair, (spans, raw, eff) in sorted(self._spans.items()):
            windows = []
            for o, oc, c, cc in spans:
                windows.append((oc, self.n if cc is None else cc))
            for supported, supporter in (pair, pair[::-1]):
                if self.desc[supported].is_static:
                    continue
                cond = [False] * self.n
                for k in range(self.n):
                    f = self.frames[k]
                    if (
                        supported in f.sleeping
                        and supporter in f.sleeping
                        and k > 0
                    ):
                        cond[k] = cond[k - 1]
                        continue
                    rec = raw[k]
                    if rec is None or not any(lo <= k < hi for lo, hi in windows):
                        continue
                    if rec.normal_on(supported)[2] < self.th.support_cos:
                        continue
                    dv = (
                        f.twists[supported].linear[2]
                        - f.twists[supporter].linear[2]
                    )
                    if abs(dv) <= self.th.eps_v:
                        cond[k] = True
                runs = _runs(cond)
                if runs:
                    out[(supported, supporter)] = runs
        return out

    def annotate_contacts(self) -> None:
        """Contact and support events straight off the precomputed runs."""
        last = self.n - 1
        for pair, (spans, _raw, _eff) in sorted(self._spans.items()):
            a, b = pair
            for o, _oc, c, _cc in spans:
                self._emit(CONTACT, o, last if c is None else c, {"object": a, "other": b})
        for (supported, supporter), runs in sorted(self._supports.items()):
            for s, e in runs:
                self._emit(
                    SUPPORTED_BY,
                    s,
                    min(e, last),
                    {"object": supported, "supporter": supporter},
                )

    def _supported_flags(self, obj: EntityId, ignore: EntityId) -> list[bool]:
        flags = [False] * self.n
        for (o, s), runs in self._supports.items():
            if o != obj or s == ignore:
                continue
            for lo, hi in runs:
                for k in range(lo, hi):
                    flags[k] = True
        return flags

    def _landing_confirms(self, obj: EntityId):
        """confirm frame -> (open frame, other entity, record at open)."""
        out: dict[int, tuple[int, EntityId, ContactRecord]] = {}
        for pair, (spans, raw, eff) in sorted(self._spans.items()):
            if obj not in pair:
                continue
            other = pair[1] if pair[0] == obj else pair[0]
            if other in self.hands:
                continue
            for o, oc, c, cc in spans:
                rec = eff[o]
                if rec is None or oc in out:
                    continue
                if rec.normal_on(obj)[2] >= self.th.support_cos:
                    out.setdefault(oc, (o, other, rec))
        return out

    # -- grasping -------------------------------------------------------
    def _grasp_flags(self, hand: EntityId, obj: EntityId) -> list[bool]:
        flags = []
        prev = False
        for k, hs in enumerate(self._hand_states[hand]):
            if hand in self.frames[k].sleeping:
                flags.append(prev)
            else:
                cond = (
                    hs.grasp_input > self.th.g_min
                    and len(hs.sets_touching(obj)) >= self.th.min_sensor_sets
                )
                flags.append(cond)
            prev = flags[-1]
        return flags

    def annotate_grasps(self) -> dict[tuple[EntityId, EntityId], list[tuple[int, int]]]:
        all_runs = {}
        for hand in self.hands:
            for obj in self.objects:
                runs = _runs(self._grasp_flags(hand, obj))
                if not runs:
                    continue
                all_runs[(hand, obj)] = runs
                for s, e in runs:
                    style = self._hand_states[hand][s].grasp_style
                    self._emit(
                        GRASPING,
                        s,
                        min(e, self.n - 1),
                        {"performer": hand, "object": obj},
                        {"grasp_style": style},
                    )
        return all_runs

    # -- reach and fixation ----------------------------------------------
    def annotate_approach(self, grasp_runs) -> None:
        for hand in self.hands:
            opens_any = {
                s for (h, o), runs in grasp_runs.items() if h == hand for s, _ in runs
            }
            for obj in self.objects:
                runs = grasp_runs.get((hand, obj), [])
                open_here = {s for s, _ in runs}
                movable = not self.desc[obj].is_static
                chain_active = False
                cand: list | None = None  # [reach_start, min_dist]
                contacted_at: int | None = None
                for k in range(self.n):
                    f = self.frames[k]
                    hs = self._hand_states[hand][k]
                    in_run = any(s <= k < e for s, e in runs)
                    if chain_active and not in_run:
                        chain_active = False
                        contacted_at = None
                    if hand not in f.sleeping and not chain_active:
                        touching = bool(hs.sets_touching(obj))
                        if contacted_at is not None:
                            if not touching:
                                contacted_at = None
                        else:
                            pose = f.poses[hand]
                            fwd = qrotate(pose.orientation, _PALM)
                            roi = (
                                pose.position[0] + fwd[0] * self.th.reach_offset,
                                pose.position[1] + fwd[1] * self.th.reach_offset,
                                pose.position[2] + fwd[2] * self.th.reach_offset,
                            )
                            opos = f.poses[obj].position
                            d_hand = _dist(opos, pose.position)
                            in_roi = _dist(opos, roi) <= self.th.reach_radius
                            if cand is None:
                                if in_roi:
                                    cand = [k, d_hand]
                            elif not in_roi:
                                cand = None
                            elif d_hand > cand[1] + self.th.retreat_hysteresis:
                                cand = [k, d_hand]
                            else:
                                cand[1] = min(cand[1], d_hand)
                            if cand is not None and in_roi and touching:
                                if cand[0] < k:
                                    self._emit(
                                        REACHING,
                                        cand[0],
                                        k,
                                        {"performer": hand, "object": obj},
                                    )
                                cand = None
                                contacted_at = k
                    if k in open_here:
                        if contacted_at is not None and contacted_at < k:
                            self._emit(
                                FIXATION,
                                contacted_at,
                                k,
                                {"performer": hand, "object": obj},
                            )
                        contacted_at = None
                        if movable:
                            chain_active = True
                    if k in opens_any:
                        cand = None
                        if k not in open_here:
                            contacted_at = None
                # a touch still pending at stream end closes like any open event
                if contacted_at is not None and contacted_at < self.n - 1:
                    self._emit(
                        FIXATION,
                        contacted_at,
                        self.n - 1,
                        {"performer": hand, "object": obj},
                    )

    # -- the grasped-object phase chain -----------------------------------
    def annotate_phases(self, grasp_runs) -> None:
        for (hand, obj), runs in sorted(grasp_runs.items()):
            if self.desc[obj].is_static:
                continue
            supported = self._supported_flags(obj, hand)
            landings = self._landing_confirms(obj)
            for g0, g1 in runs:
                self._walk_chain(hand, obj, g0, g1, supported, landings)

    def _pos(self, obj: EntityId, k: int):
        return self.frames[k].poses[obj].position

    def _walk_chain(self, hand, obj, g0, g1, supported, landings) -> None:
        th = self.th
        t = self.times
        who = {"performer": hand, "object": obj}
        last = min(g1, self.n - 1)  # open phases close here
        walk_end = g1  # the final frame still transitions if the grasp outlives it
        ref = None
        onset = g0
        slide_start: int | None = None
        slide_sup: EntityId | None = None
        pickup_start: int | None = None
        pickup_roi = None
        transport_start: int | None = None
        if supported[g0]:
            phase = "grasped"
            p = self._pos(obj, g0)
            ref = (p[0], p[1])
        else:
            phase = "transport"
            transport_start = g0
        for k in range(g0, walk_end):
            pos = self._pos(obj, k)
            if phase == "grasped":
                if supported[k]:
                    dxy = math.hypot(pos[0] - ref[0], pos[1] - ref[1])
                    if dxy <= th.slide_onset_eps:
                        onset = k
                    elif dxy > th.d_slide and slide_start is None:
                        slide_start = onset
                        slide_sup = min(
                            s
                            for (o, s), rs in self._supports.items()
                            if o == obj and s != hand
                            and any(lo <= k < hi for lo, hi in rs)
                        )
                        phase = "sliding"
                else:
                    phase = "picking"
                    pickup_start = k
                    pickup_roi = pos
            elif phase == "sliding":
                if not supported[k]:
                    self._emit(
                        SLIDING, slide_start, k, {**who, "supporter": slide_sup}
                    )
                    slide_start = slide_sup = None
                    if th.direct_transport_after_slide:
                        phase = "transport"
                        transport_start = k
                    else:
                        phase = "picking"
                        pickup_start = k
                        pickup_roi = pos
            elif phase == "picking":
                outside = _dist(pos, pickup_roi) > th.r_pickup
                if supported[k] and not outside:
                    phase = "grasped"
                    ref = (pos[0], pos[1])
                    onset = k
                    pickup_start = None
                    pickup_roi = None
                elif outside:
                    self._emit(PICKING_UP, pickup_start, k, dict(who))
                    pickup_start = None
                    pickup_roi = None
                    phase = "transport"
                    transport_start = k
            elif phase == "transport":
                hit = landings.get(k)
                if hit is None:
                    continue
                c_idx, other, rec = hit
                if c_idx < transport_start:
                    continue  # pre-existing touch, not a landing of this carry
                self._emit(TRANSPORTING, transport_start, c_idx, dict(who))
                transport_start = None
                if self._from_above(obj, c_idx, g0):
                    cut = self._backtrack(obj, k, c_idx, g0, rec.point)
                    self._emit(
                        PUTTING_DOWN, cut, c_idx, {**who, "supporter": other}
                    )
                    phase = "grasped"
                    ref = (pos[0], pos[1])
                    onset = k
                else:
                    slide_start = c_idx
                    slide_sup = other
                    phase = "sliding"
                    ref = (pos[0], pos[1])
                    onset = k
        # release (or end of stream) closes whatever stayed open
        if slide_start is not None:
            self._emit(SLIDING, slide_start, last, {**who, "supporter": slide_sup})
        if pickup_start is not None:
            self._emit(PICKING_UP, pickup_start, last, dict(who))
        if transport_start is not None:
            self._emit(TRANSPORTING, transport_start, last, dict(who))

    def _from_above(self, obj, c_idx, birth) -> bool:
        th = self.th
        if c_idx - th.from_above_window < birth:
            return False
        for j in range(c_idx - th.from_above_window, c_idx):
            v = self.frames[j].twists[obj].linear
            speed = math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
            if -v[2] < th.from_above_speed:
                return False
            if speed <= 0 or -v[2] < th.from_above_cos * speed:
                return False
        return True

    def _backtrack(self, obj, now, c_idx, birth, center) -> int:
        horizon = self.th.t_decay
        if now >= 1:
            horizon += self.times[now] - self.times[now - 1]
        lo = birth
        while self.times[now] - self.times[lo] > horizon:
            lo += 1
        idxs = list(range(lo, c_idx + 1))
        dists = [_dist(self._pos(obj, i), center) for i in idxs]
        cut = len(idxs) - 1
        for j in range(len(idxs) - 2, -1, -1):
            if dists[j] > self.th.r_putdown:
                break
            if dists[j] < dists[j + 1] - self.th.retreat_hysteresis:
                break
            cut = j
        return idxs[cut]


def annotate(
    header: TraceHeader, frames, thresholds: Thresholds | None = None
) -> list[Event]:
    """Ground-truth style events for a finished trace (source "script")."""
    ann = _Annotator(header, list(frames), thresholds or Thresholds())
    if ann.n == 0:
        return []
    ann.annotate_contacts()
    grasp_runs = ann.annotate_grasps()
    ann.annotate_approach(grasp_runs)
    ann.annotate_phases(grasp_runs)
    return sorted(ann.events, key=lambda e: e.sort_key())
