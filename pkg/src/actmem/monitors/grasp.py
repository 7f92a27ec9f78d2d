"""Grasp detection from hand sensor-set coverage.

A hand grasps an object once the analog input is past g_min (strictly)
and the object touches at least min_sensor_sets distinct sensor groups.
Each (hand, object) pair gets its own event, so several objects can be
held at once. The grammar never looks at mass: grabbing furniture still
counts, it just will not move.
"""
from __future__ import annotations

from ..config import Thresholds
from ..entities import EntityId
from ..errors import StreamError, ValidationError
from ..events import GRASPING, Event
from ..frames import SENSOR_SETS, Frame, HandState
from ..intervals import Interval


def grasp_condition(
    hand: HandState, obj: EntityId, g_min: float, min_sets: int = 2
) -> bool:
    """The bare grammar predicate, shared with tests as the reference rule."""
    return hand.grasp_input > g_min and len(hand.sets_touching(obj)) >= min_sets


class GraspMonitor:
    def __init__(
        self,
        ids,
        thresholds: Thresholds,
        times: list[float],
        sensor_sets: tuple[str, ...] = SENSOR_SETS,
    ):
        self.ids = ids
        self.th = thresholds
        self.times = times
        self.sensor_sets = set(sensor_sets)
        self.open: dict[tuple[EntityId, EntityId], Event] = {}
        self.opened_this_frame: list[tuple[EntityId, EntityId, Event]] = []
        self.closed_this_frame: list[tuple[EntityId, EntityId, Event]] = []
        self._last_idx = -1

    def grasped_by(self, hand_id: EntityId) -> set[EntityId]:
        return {obj for (h, obj) in self.open if h == hand_id}

    def step(self, frame: Frame, idx: int) -> list[Event]:
        if idx != self._last_idx + 1:
            raise StreamError(f"frame t={frame.t}: grasp monitor fed out of order")
        self._last_idx = idx
        self.opened_this_frame = []
        self.closed_this_frame = []
        closed: list[Event] = []
        t = frame.t
        for hand in sorted(frame.hands, key=lambda h: h.hand_id):
            unknown = set(hand.sensor_contacts) - self.sensor_sets
            if unknown:
                raise ValidationError(
                    f"frame t={t}: unknown sensor sets {sorted(unknown)}"
                )
            if hand.hand_id in frame.sleeping:
                continue
            considered = hand.touched_objects() | self.grasped_by(hand.hand_id)
            for obj in sorted(considered):
                key = (hand.hand_id, obj)
                cond = grasp_condition(hand, obj, self.th.g_min, self.th.min_sensor_sets)
                open_ev = self.open.get(key)
                if cond and open_ev is None:
                    ev = Event(
                        id=self.ids.mint(
                            GRASPING, {"performer": hand.hand_id, "object": obj}, idx
                        ),
                        type=GRASPING,
                        interval=Interval(t, t),
                        participants={"performer": hand.hand_id, "object": obj},
                        attributes={"grasp_style": hand.grasp_style},
                    )
                    self.open[key] = ev
                    self.opened_this_frame.append((hand.hand_id, obj, ev))
                elif not cond and open_ev is not None:
                    open_ev.interval = Interval(open_ev.interval.start, t)
                    closed.append(open_ev)
                    self.closed_this_frame.append((hand.hand_id, obj, open_ev))
                    del self.open[key]
        return closed

    def open_events(self) -> list[Event]:
        return sorted(self.open.values(), key=lambda e: e.sort_key())

    def finish(self, end: float) -> list[Event]:
        closed = []
        for ev in self.open_events():
            ev.interval = Interval(ev.interval.start, max(ev.interval.start, end))
            closed.append(ev)
        self.open.clear()
        return closed
