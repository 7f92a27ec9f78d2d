"""Trace and event files: newline-delimited JSON, one record per line.

Line 1 is a header record naming the task, frame rate, and entity
descriptors; every following line is one frame. Writers emit keys in a
fixed order and sort every id collection, so the same world state always
produces the same bytes; floats rely on repr round-tripping.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Iterator

from .entities import EntityDescriptor, EntityId, validate_descriptor_set
from .errors import StreamError, ValidationError
from .events import Event, event_from_record, event_record
from .frames import SENSOR_SETS, ContactRecord, Frame, Gaze, HandState
from .geometry import Pose, Shape, Twist

FORMAT_VERSION = 1


@dataclass
class TraceHeader:
    task: str
    frame_rate: float
    entities: list[EntityDescriptor]
    format_version: int = FORMAT_VERSION

    def descriptor_map(self) -> dict[EntityId, EntityDescriptor]:
        return validate_descriptor_set(self.entities)


def _dump(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"))


def _descriptor_record(d: EntityDescriptor) -> dict:
    return {
        "id": d.id,
        "name": d.name,
        "class": d.class_tag,
        "shape": {"kind": d.shape.kind, "extents": list(d.shape.extents)},
        "mass": d.mass,
        "parts": list(d.parts),
        "is_static": d.is_static,
    }


def _descriptor_from(rec: dict) -> EntityDescriptor:
    shape = rec["shape"]
    return EntityDescriptor(
        id=rec["id"],
        name=rec["name"],
        class_tag=rec["class"],
        shape=Shape(shape["kind"], tuple(shape["extents"])),
        mass=float(rec["mass"]),
        parts=tuple(rec.get("parts", [])),
        is_static=bool(rec["is_static"]),
    )


def header_line(header: TraceHeader) -> str:
    return _dump(
        {
            "type": "header",
            "format_version": header.format_version,
            "task": header.task,
            "frame_rate": header.frame_rate,
            "entities": [_descriptor_record(d) for d in header.entities],
        }
    )


def _hand_record(h: HandState) -> dict:
    contacts = {}
    for name in SENSOR_SETS:
        objs = h.sensor_contacts.get(name)
        if objs:
            contacts[name] = sorted(objs)
    for name in sorted(set(h.sensor_contacts) - set(SENSOR_SETS)):
        if h.sensor_contacts[name]:
            contacts[name] = sorted(h.sensor_contacts[name])
    return {
        "hand_id": h.hand_id,
        "grasp_style": h.grasp_style,
        "grasp_input": h.grasp_input,
        "sensor_contacts": contacts,
    }


def frame_line(f: Frame) -> str:
    rec = {
        "type": "frame",
        "t": f.t,
        "poses": {
            eid: list(f.poses[eid].position) + list(f.poses[eid].orientation)
            for eid in sorted(f.poses)
        },
        "twists": {
            eid: list(f.twists[eid].linear) + list(f.twists[eid].angular)
            for eid in sorted(f.twists)
        },
        "contacts": [
            {"a": c.a, "b": c.b, "n": list(c.normal), "p": list(c.point)}
            for c in sorted(f.contacts, key=lambda c: c.pair)
        ],
        "hands": [_hand_record(h) for h in sorted(f.hands, key=lambda h: h.hand_id)],
        "gaze": {"o": list(f.gaze.origin), "d": list(f.gaze.direction)},
        "sleeping": sorted(f.sleeping),
    }
    return _dump(rec)


def _frame_from(rec: dict, where: str) -> Frame:
    try:
        poses = {
            eid: Pose((v[0], v[1], v[2]), (v[3], v[4], v[5], v[6]))
            for eid, v in rec["poses"].items()
        }
        twists = {
            eid: Twist((v[0], v[1], v[2]), (v[3], v[4], v[5]))
            for eid, v in rec["twists"].items()
        }
        contacts = [
            ContactRecord(c["a"], c["b"], tuple(c["n"]), tuple(c["p"]))
            for c in rec.get("contacts", [])
        ]
        hands = [
            HandState(
                hand_id=h["hand_id"],
                grasp_style=h["grasp_style"],
                grasp_input=float(h["grasp_input"]),
                sensor_contacts={
                    name: frozenset(objs)
                    for name, objs in h.get("sensor_contacts", {}).items()
                },
            )
            for h in rec.get("hands", [])
        ]
        gaze_rec = rec["gaze"]
        gaze = Gaze(tuple(gaze_rec["o"]), tuple(gaze_rec["d"]))
        return Frame(
            t=float(rec["t"]),
            poses=poses,
            twists=twists,
            contacts=contacts,
            hands=hands,
            gaze=gaze,
            sleeping=frozenset(rec.get("sleeping", [])),
        )
    except (KeyError, IndexError, TypeError) as exc:
        raise ValidationError(f"{where}: malformed frame record: {exc}") from exc


def write_trace(path: str, header: TraceHeader, frames: Iterable[Frame]) -> int:
    """Write a whole trace; returns the frame count."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header_line(header) + "\n")
        for f in frames:
            fh.write(frame_line(f) + "\n")
            count += 1
    return count


class TraceReader:
    """Streaming reader enforcing in-order, evenly spaced frame times."""

    def __init__(self, path: str):
        self.path = path
        self._fh: IO[str] | None = open(path, "r", encoding="utf-8")
        try:
            first = self._fh.readline()
            if not first.strip():
                raise ValidationError(f"{path}: empty trace file")
            rec = json.loads(first)
            if rec.get("type") != "header":
                raise ValidationError(f"{path}: first record must be the header")
            if rec.get("format_version") != FORMAT_VERSION:
                raise ValidationError(
                    f"{path}: unsupported format_version {rec.get('format_version')}"
                )
            self.header = TraceHeader(
                task=rec["task"],
                frame_rate=float(rec["frame_rate"]),
                entities=[_descriptor_from(d) for d in rec["entities"]],
                format_version=rec["format_version"],
            )
        except json.JSONDecodeError as exc:
            self.close()
            raise ValidationError(f"{path}: bad header line: {exc}") from exc
        except Exception:
            self.close()
            raise
        self._known = set(self.header.descriptor_map())
        self._prev_t: float | None = None
        self._lineno = 1

    def __enter__(self) -> "TraceReader":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __iter__(self) -> Iterator[Frame]:
        assert self._fh is not None, "reader is closed"
        dt = 1.0 / self.header.frame_rate
        for line in self._fh:
            self._lineno += 1
            if not line.strip():
                continue
            where = f"{self.path}:{self._lineno}"
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{where}: bad JSON: {exc}") from exc
            if rec.get("type") != "frame":
                raise ValidationError(f"{where}: expected a frame record")
            frame = _frame_from(rec, where)
            if self._prev_t is not None:
                if frame.t <= self._prev_t:
                    raise StreamError(
                        f"{where}: frame time {frame.t} not after {self._prev_t}"
                    )
                if abs((frame.t - self._prev_t) - dt) > 1e-9:
                    raise StreamError(
                        f"{where}: frame spacing {frame.t - self._prev_t} != 1/frame_rate"
                    )
            unknown = (
                (set(frame.poses) | set(frame.twists) | set(frame.sleeping)) - self._known
            )
            if unknown:
                raise ValidationError(f"{where}: unknown entities {sorted(unknown)}")
            self._prev_t = frame.t
            yield frame
        self.close()


def load_trace(path: str) -> tuple[TraceHeader, list[Frame]]:
    with TraceReader(path) as reader:
        return reader.header, list(reader)


def write_events(path: str, events: Iterable[Event]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ev in events:
            fh.write(_dump(event_record(ev)) + "\n")
            count += 1
    return count


def read_events(path: str) -> list[Event]:
    out: list[Event] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: bad JSON: {exc}") from exc
            out.append(event_from_record(rec))
    return out
