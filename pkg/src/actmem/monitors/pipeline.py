"""Runs the three monitors over a frame stream and collects events.

Event ids are derived, not random: the trace's task id seeds a
namespace, and each id hashes the event type, its participant bindings,
and its start frame. The same trace therefore parses to the same ids
every time, and a prefix of the trace mints the same ids the full parse
does for every event whose life began inside the prefix.
"""
from __future__ import annotations

import uuid

from ..config import Thresholds
from ..entities import APP_NAMESPACE, EntityId, derive_id
from ..errors import StateError, StreamError
from ..events import Event
from ..frames import Frame, validate_frame
from ..traceio import TraceHeader
from .contact import ContactMonitor
from .grasp import GraspMonitor
from .segment import PnPSegmenter


class EventIds:
    def __init__(self, namespace: EntityId):
        self.namespace = namespace
        self._counts: dict[str, int] = {}
        self.birth_index: dict[EntityId, int] = {}
        self.current_idx = 0

    def mint(self, event_type: str, participants: dict[str, EntityId], start_idx: int) -> EntityId:
        roles = "|".join(f"{r}={participants[r]}" for r in sorted(participants))
        key = f"{event_type}|{roles}|{start_idx}"
        n = self._counts.get(key, 0)
        self._counts[key] = n + 1
        if n:
            key = f"{key}|{n}"
        eid = derive_id(self.namespace, key)
        self.birth_index[eid] = self.current_idx
        return eid


class MonitorPipeline:
    """Feed frames in order with step(); finish() closes what remains open."""

    def __init__(self, header: TraceHeader, thresholds: Thresholds | None = None):
        self.header = header
        self.th = thresholds if thresholds is not None else Thresholds()
        self.descriptors = header.descriptor_map()
        self._known = set(self.descriptors)
        self.times: list[float] = []
        self.ids = EventIds(str(uuid.uuid5(APP_NAMESPACE, f"events:{header.task}")))
        self.contacts = ContactMonitor(self.ids, self.descriptors, self.th, self.times)
        self.grasps = GraspMonitor(self.ids, self.th, self.times)
        self.segmenter = PnPSegmenter(self.ids, self.descriptors, self.th, self.times)
        self.closed: list[Event] = []
        self.emission_index: dict[EntityId, int] = {}
        self.finish_ids: set[EntityId] = set()
        self._idx = -1
        self._finished = False

    def step(self, frame: Frame) -> list[Event]:
        if self._finished:
            raise StateError("pipeline already finished")
        if self.times and frame.t <= self.times[-1]:
            raise StreamError(
                f"frame t={frame.t}: timestamps must increase (last {self.times[-1]})"
            )
        validate_frame(frame, self._known)
        self._idx += 1
        idx = self._idx
        self.times.append(frame.t)
        self.ids.current_idx = idx
        out: list[Event] = []
        out.extend(self.contacts.step(frame, idx))
        out.extend(self.grasps.step(frame, idx))
        out.extend(self.segmenter.step(frame, idx, self.contacts, self.grasps))
        for ev in out:
            self.emission_index[ev.id] = idx
        self.closed.extend(out)
        return out

    def open_events(self) -> list[Event]:
        out = self.contacts.open_events() + self.grasps.open_events()
        out.extend(self.segmenter.open_events())
        return sorted(out, key=lambda e: e.sort_key())

    def finish(self, close_open: bool = True) -> list[Event]:
        if self._finished:
            return []
        self._finished = True
        if not close_open or not self.times:
            return []
        end = self.times[-1]
        out = self.contacts.finish(end) + self.grasps.finish(end)
        out.extend(self.segmenter.finish(end))
        for ev in out:
            self.emission_index[ev.id] = self._idx
            self.finish_ids.add(ev.id)
        self.closed.extend(out)
        return out

    def events(self) -> list[Event]:
        return sorted(self.closed, key=lambda e: e.sort_key())


def parse_stream(
    header: TraceHeader,
    frames,
    thresholds: Thresholds | None = None,
    close_open: bool = True,
) -> MonitorPipeline:
    pipe = MonitorPipeline(header, thresholds)
    for frame in frames:
        pipe.step(frame)
    pipe.finish(close_open)
    return pipe
