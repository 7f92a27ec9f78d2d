"""Contact and supported-by detection over an in-order frame stream.

A pair's touch state must persist for debounce_frames before a Contact
opens or closes, and the boundary timestamp is the first frame of the
confirmed run, so a confirmation can retro-date an event by a frame.
Supported-by is evaluated per frame while the pair's Contact is open:
the supported side must be movable, its contact normal must point up
within the support cone, and the relative vertical speed must stay
inside eps_v. Pairs whose two entities are both sleeping are left
untouched, mirroring the engine disabling monitors on sleeping bodies.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..config import Thresholds
from ..entities import EntityDescriptor, EntityId
from ..errors import StreamError
from ..events import CONTACT, SUPPORTED_BY, Event
from ..frames import ContactRecord, Frame
from ..intervals import Interval

Pair = tuple[EntityId, EntityId]


@dataclass
class _PairState:
    run_touching: bool
    run_start: int
    run_len: int
    run_record: ContactRecord | None
    open_event: Event | None = None
    open_record: ContactRecord | None = None


class ContactMonitor:
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
        self.times = times  # shared with the pipeline, grows as frames arrive
        self.pairs: dict[Pair, _PairState] = {}
        self.supports: dict[Pair, Event] = {}  # (supported, supporter) -> open event
        self.opened_this_frame: list[tuple[Pair, Event, ContactRecord]] = []
        self._last_idx = -1

    def open_contact(self, pair: Pair) -> tuple[Event, ContactRecord] | None:
        st = self.pairs.get(pair)
        if st is None or st.open_event is None:
            return None
        return st.open_event, st.open_record

    def supporters(self, obj: EntityId) -> set[EntityId]:
        return {sup for (o, sup) in self.supports if o == obj}

    def step(self, frame: Frame, idx: int) -> list[Event]:
        if idx != self._last_idx + 1:
            raise StreamError(f"frame t={frame.t}: contact monitor fed out of order")
        self._last_idx = idx
        closed: list[Event] = []
        self.opened_this_frame = []
        current: dict[Pair, ContactRecord] = {c.pair: c for c in frame.contacts}
        t = frame.t

        for pair in sorted(set(self.pairs) | set(current)):
            a, b = pair
            if a in frame.sleeping and b in frame.sleeping:
                continue
            touching = pair in current
            st = self.pairs.get(pair)
            if st is None:
                st = _PairState(touching, idx, 1, current.get(pair))
                self.pairs[pair] = st
            elif touching != st.run_touching:
                st.run_touching = touching
                st.run_start = idx
                st.run_len = 1
                st.run_record = current.get(pair)
            else:
                st.run_len += 1

            if (
                st.open_event is None
                and st.run_touching
                and st.run_len >= self.th.debounce_frames
            ):
                start = self.times[st.run_start]
                ev = Event(
                    id=self.ids.mint(CONTACT, {"object": a, "other": b}, st.run_start),
                    type=CONTACT,
                    interval=Interval(start, start),
                    participants={"object": a, "other": b},
                )
                st.open_event = ev
                st.open_record = st.run_record
                self.opened_this_frame.append((pair, ev, st.run_record))
            elif (
                st.open_event is not None
                and not st.run_touching
                and st.run_len >= self.th.debounce_frames
            ):
                end = self.times[st.run_start]
                ev = st.open_event
                ev.interval = Interval(ev.interval.start, end)
                closed.append(ev)
                st.open_event = None
                st.open_record = None
                closed.extend(self._close_supports_for(pair, end))

        # supported-by: per-frame condition, only inside an open contact
        for pair in sorted(self.pairs):
            st = self.pairs[pair]
            record = current.get(pair)
            for supported, supporter in (pair, pair[::-1]):
                cond = (
                    st.open_event is not None
                    and record is not None
                    and not self.descriptors[supported].is_static
                    and record.normal_on(supported)[2] >= self.th.support_cos
                    and abs(
                        frame.twists[supported].linear[2]
                        - frame.twists[supporter].linear[2]
                    )
                    <= self.th.eps_v
                )
                key = (supported, supporter)
                open_ev = self.supports.get(key)
                if cond and open_ev is None:
                    self.supports[key] = Event(
                        id=self.ids.mint(
                            SUPPORTED_BY,
                            {"object": supported, "supporter": supporter},
                            idx,
                        ),
                        type=SUPPORTED_BY,
                        interval=Interval(t, t),
                        participants={"object": supported, "supporter": supporter},
                    )
                elif not cond and open_ev is not None:
                    open_ev.interval = Interval(open_ev.interval.start, t)
                    closed.append(open_ev)
                    del self.supports[key]
        return closed

    def _close_supports_for(self, pair: Pair, end: float) -> list[Event]:
        out = []
        for key in (pair, pair[::-1]):
            ev = self.supports.pop(key, None)
            if ev is not None:
                ev.interval = Interval(ev.interval.start, end)
                out.append(ev)
        return out

    def open_events(self) -> list[Event]:
        out = [st.open_event for st in self.pairs.values() if st.open_event is not None]
        out.extend(self.supports.values())
        return sorted(out, key=lambda e: e.sort_key())

    def finish(self, end: float) -> list[Event]:
        closed = []
        for ev in self.open_events():
            ev.interval = Interval(ev.interval.start, max(ev.interval.start, end))
            closed.append(ev)
        self.pairs.clear()
        self.supports.clear()
        return closed
