"""Embedded episodic store: tasks on disk, episodes as frame logs plus indexes.

Layout under the store root, one directory per task (named by task id):

    <task_id>/task.json                    name, entity descriptors, episode ids
    <task_id>/episodes/<episode_id>/frames.log    length-prefixed frame records
    <task_id>/episodes/<episode_id>/frames.idx    packed (t, offset) rows, at seal
    <task_id>/episodes/<episode_id>/events.ndjson
    <task_id>/episodes/<episode_id>/meta.json
    <task_id>/blobs/<sha256>               opaque payloads, never interpreted

A frame record is an 12-byte header (little-endian f64 timestamp, u32
payload length) followed by the frame's NDJSON line. The log is append
only and flushed per frame, so a crashed or concurrent reader sees a
consistent prefix; the ordered index is packed once at seal. One writer
per episode is a caller contract, not a lock.

Nothing in here stamps wall-clock time into files: rebuilding the same
trace into a fresh store must reproduce every byte.
"""
from __future__ import annotations

import hashlib
import json
import math
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .config import Thresholds
from .entities import (
    APP_NAMESPACE,
    ClassTag,
    EntityDescriptor,
    EntityId,
    Taxonomy,
    base_taxonomy,
    derive_id,
    validate_descriptor_set,
)
from .errors import (
    ConflictError,
    NotFoundError,
    ProvisionalDataWarning,
    StateError,
    ValidationError,
)
from .events import Event, event_from_record, event_record
from .frames import Frame
from .intervals import Interval
from .traceio import _descriptor_from, _descriptor_record, _frame_from, frame_line

import uuid

_REC = struct.Struct("<dI")   # frame record header: timestamp, payload bytes
_IDX = struct.Struct("<dQ")   # index row: timestamp, file offset


def task_id_for(name: str) -> EntityId:
    return str(uuid.uuid5(APP_NAMESPACE, f"task:{name}"))


@dataclass
class TaskRecord:
    id: EntityId
    name: str
    descriptors: dict[EntityId, EntityDescriptor]
    classes: list[ClassTag] = field(default_factory=list)
    episodes: list[EntityId] = field(default_factory=list)

    def taxonomy(self) -> Taxonomy:
        tx = base_taxonomy()
        for tag in self.classes:
            tx.add(tag)
        tx.validate()
        return tx

    def by_name(self, name: str) -> EntityDescriptor:
        for d in self.descriptors.values():
            if d.name == name:
                return d
        raise NotFoundError(f"task {self.name!r} has no entity named {name!r}")


def _task_json(task: TaskRecord) -> str:
    doc = {
        "id": task.id,
        "name": task.name,
        "classes": [{"name": c.name, "parents": list(c.parents)} for c in task.classes],
        "entities": [_descriptor_record(d) for d in task.descriptors.values()],
        "episodes": list(task.episodes),
    }
    return json.dumps(doc, indent=1)


def _task_from_json(text: str, where: str) -> TaskRecord:
    try:
        doc = json.loads(text)
        descriptors = validate_descriptor_set(
            _descriptor_from(rec) for rec in doc["entities"]
        )
        return TaskRecord(
            id=doc["id"],
            name=doc["name"],
            descriptors=descriptors,
            classes=[ClassTag(c["name"], tuple(c["parents"])) for c in doc["classes"]],
            episodes=list(doc["episodes"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"{where}: corrupt task record: {exc}") from exc


class MemoryStore:
    """Directory-backed store of tasks and their episodes."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    # -- tasks ----------------------------------------------------------
    def _task_path(self, task_id: EntityId) -> Path:
        return self.root / task_id / "task.json"

    def tasks(self) -> list[TaskRecord]:
        out = []
        for p in sorted(self.root.iterdir()):
            f = p / "task.json"
            if f.is_file():
                out.append(_task_from_json(f.read_text("utf-8"), str(f)))
        return out

    def task(self, task_id: EntityId) -> TaskRecord:
        f = self._task_path(task_id)
        if not f.is_file():
            raise NotFoundError(f"no task {task_id} in {self.root}")
        return _task_from_json(f.read_text("utf-8"), str(f))

    def task_by_name(self, name: str) -> TaskRecord:
        f = self._task_path(task_id_for(name))
        if not f.is_file():
            raise NotFoundError(f"no task named {name!r} in {self.root}")
        return _task_from_json(f.read_text("utf-8"), str(f))

    def create_task(
        self,
        name: str,
        descriptors: list[EntityDescriptor],
        classes: list[ClassTag] | None = None,
    ) -> TaskRecord:
        if not name:
            raise ValidationError("task name must be nonempty")
        by_id = validate_descriptor_set(descriptors)
        task_id = task_id_for(name)
        if self._task_path(task_id).exists():
            raise ConflictError(f"task named {name!r} already exists")
        # ids are minted per task seed, so a collision means the same
        # entity already lives in another task: refuse to alias it
        for other in self.tasks():
            shared = by_id.keys() & other.descriptors.keys()
            if shared:
                raise ConflictError(
                    f"entity ids {sorted(shared)} already belong to task {other.name!r}"
                )
        task = TaskRecord(task_id, name, by_id, list(classes or []))
        task.taxonomy()  # validates the extra class tags
        tdir = self.root / task_id
        (tdir / "episodes").mkdir(parents=True)
        (tdir / "blobs").mkdir()
        self._task_path(task_id).write_text(_task_json(task), "utf-8")
        return task

    def get_or_create_task(
        self,
        name: str,
        descriptors: list[EntityDescriptor],
        classes: list[ClassTag] | None = None,
    ) -> TaskRecord:
        """Fetch the task if it exists, insisting the descriptors agree."""
        try:
            existing = self.task_by_name(name)
        except NotFoundError:
            return self.create_task(name, descriptors, classes)
        incoming = validate_descriptor_set(descriptors)
        if set(incoming) != set(existing.descriptors):
            raise ConflictError(
                f"task {name!r} exists with a different entity set"
            )
        return existing

    # -- episodes ---------------------------------------------------------
    def _episode_dir(self, task_id: EntityId, episode_id: EntityId) -> Path:
        return self.root / task_id / "episodes" / episode_id

    def new_episode(self, task_id: EntityId) -> "EpisodeWriter":
        task = self.task(task_id)
        ordinal = len(task.episodes)
        episode_id = derive_id(task_id, f"episode:{ordinal}")
        task.episodes.append(episode_id)
        edir = self._episode_dir(task_id, episode_id)
        edir.mkdir(parents=True)
        self._task_path(task_id).write_text(_task_json(task), "utf-8")
        return EpisodeWriter(episode_id, task_id, ordinal, edir)

    def find_episode(self, episode_id: EntityId) -> tuple[TaskRecord, Path]:
        for task in self.tasks():
            if episode_id in task.episodes:
                return task, self._episode_dir(task.id, episode_id)
        raise NotFoundError(f"no episode {episode_id} in {self.root}")

    def episode(self, episode_id: EntityId) -> "EpisodeReader":
        _task, edir = self.find_episode(episode_id)
        return EpisodeReader(episode_id, edir)

    def episodes(self, task_id: EntityId) -> list["EpisodeReader"]:
        task = self.task(task_id)
        return [
            EpisodeReader(eid, self._episode_dir(task_id, eid))
            for eid in task.episodes
        ]

    # -- blobs ------------------------------------------------------------
    def put_blob(self, task_id: EntityId, data: bytes) -> str:
        digest = hashlib.sha256(data).hexdigest()
        path = self.root / task_id / "blobs" / digest
        if not path.parent.is_dir():
            raise NotFoundError(f"no task {task_id} in {self.root}")
        if not path.exists():
            path.write_bytes(data)
        return digest

    def blob(self, task_id: EntityId, digest: str) -> bytes:
        path = self.root / task_id / "blobs" / digest
        if not path.is_file():
            raise NotFoundError(f"task {task_id} has no blob {digest}")
        return path.read_bytes()


def _write_meta(edir: Path, doc: dict) -> None:
    (edir / "meta.json").write_text(json.dumps(doc, indent=1), "utf-8")


class EpisodeWriter:
    """Single-writer append channel for one episode."""

    def __init__(self, episode_id: EntityId, task_id: EntityId, ordinal: int, edir: Path):
        self.id = episode_id
        self.task_id = task_id
        self.ordinal = ordinal
        self.dir = edir
        self.sealed = False
        self._times: list[float] = []
        self._offsets: list[int] = []
        self._last_pose: dict[EntityId, object] = {}
        self._pose_ranges: dict[EntityId, list[list[int]]] = {}
        self._n_events = 0
        self._log = open(edir / "frames.log", "ab")
        self._events = open(edir / "events.ndjson", "a", encoding="utf-8", newline="\n")
        _write_meta(edir, self._meta_doc())

    def _meta_doc(self) -> dict:
        return {
            "id": self.id,
            "task": self.task_id,
            "ordinal": self.ordinal,
            "frames": len(self._times),
            "events": self._n_events,
            "start": self._times[0] if self._times else None,
            "end": self._times[-1] if self._times else None,
            "sealed": self.sealed,
            "pose_ranges": self._pose_ranges,
        }

    def append_frame(self, frame: Frame) -> int:
        """Durably append one frame; returns its index."""
        if self.sealed:
            raise StateError(f"episode {self.id} is sealed")
        if self._times and frame.t <= self._times[-1]:
            raise ValidationError(
                f"frame time {frame.t} not after {self._times[-1]}"
            )
        k = len(self._times)
        payload = frame_line(frame).encode("utf-8")
        offset = self._log.tell()
        self._log.write(_REC.pack(frame.t, len(payload)))
        self._log.write(payload)
        self._log.flush()
        self._times.append(frame.t)
        self._offsets.append(offset)
        for eid in sorted(frame.poses):
            pose = frame.poses[eid]
            if pose == self._last_pose.get(eid):
                continue
            self._last_pose[eid] = pose
            runs = self._pose_ranges.setdefault(eid, [])
            if runs and runs[-1][1] == k - 1:
                runs[-1][1] = k
            else:
                runs.append([k, k])
        return k

    def store_event(self, event: Event) -> None:
        if self.sealed:
            raise StateError(f"episode {self.id} is sealed")
        if not self._times:
            raise StateError("no frames yet; events need a time range")
        tol = Thresholds().delta_t
        if (
            event.interval.start < self._times[0] - tol
            or event.interval.end > self._times[-1] + tol
        ):
            raise ValidationError(
                f"event {event.type} [{event.interval.start}, {event.interval.end}] "
                f"outside episode range [{self._times[0]}, {self._times[-1]}]"
            )
        self._events.write(json.dumps(event_record(event), separators=(",", ":")) + "\n")
        self._events.flush()
        self._n_events += 1

    @property
    def frame_count(self) -> int:
        return len(self._times)

    @property
    def last_time(self) -> float | None:
        return self._times[-1] if self._times else None

    def seal(self) -> None:
        if self.sealed:
            raise StateError(f"episode {self.id} is already sealed")
        self._log.close()
        self._events.close()
        with open(self.dir / "frames.idx", "wb") as fh:
            for t, off in zip(self._times, self._offsets):
                fh.write(_IDX.pack(t, off))
        self.sealed = True
        _write_meta(self.dir, self._meta_doc())

    def abandon(self) -> None:
        """Close file handles without sealing; the prefix stays readable."""
        if not self.sealed:
            self._log.close()
            self._events.close()
            _write_meta(self.dir, self._meta_doc())


class EpisodeReader:
    """Read side of one episode; safe on sealed and in-progress episodes."""

    def __init__(self, episode_id: EntityId, edir: Path):
        self.id = episode_id
        self.dir = edir
        meta_path = edir / "meta.json"
        if not meta_path.is_file():
            raise NotFoundError(f"episode {episode_id}: no metadata at {edir}")
        self.meta = json.loads(meta_path.read_text("utf-8"))
        self.sealed = bool(self.meta.get("sealed"))
        self.probe_count = 0  # comparisons made by the last frame_at
        self._times: np.ndarray | None = None
        self._offsets: np.ndarray | None = None
        self._events: list[Event] | None = None
        self._by_type: dict[str, list[Event]] | None = None
        self._by_participant: dict[str, list[Event]] | None = None

    def _warn_provisional(self, what: str) -> None:
        if not self.sealed:
            warnings.warn(
                f"episode {self.id}: {what} read before seal; data may grow",
                ProvisionalDataWarning,
                stacklevel=3,
            )

    # -- frame side -------------------------------------------------------
    def _load_index(self) -> None:
        if self._times is not None:
            return
        idx = self.dir / "frames.idx"
        if self.sealed and idx.is_file():
            raw = np.fromfile(idx, dtype=np.dtype([("t", "<f8"), ("off", "<u8")]))
            self._times = raw["t"]
            self._offsets = raw["off"]
            return
        # no packed index yet: walk the log headers, keeping the prefix
        # of complete records (a concurrent writer may be mid-append)
        times, offsets = [], []
        with open(self.dir / "frames.log", "rb") as fh:
            fh.seek(0, 2)
            size = fh.tell()
            fh.seek(0)
            pos = 0
            while pos + _REC.size <= size:
                t, n = _REC.unpack(fh.read(_REC.size))
                if pos + _REC.size + n > size:
                    break
                times.append(t)
                offsets.append(pos)
                pos += _REC.size + n
                fh.seek(pos)
        self._times = np.asarray(times, dtype=np.float64)
        self._offsets = np.asarray(offsets, dtype=np.uint64)

    @property
    def frame_count(self) -> int:
        self._load_index()
        return int(len(self._times))

    def time_range(self) -> Interval:
        self._load_index()
        if len(self._times) == 0:
            raise NotFoundError(f"episode {self.id} has no frames")
        return Interval(float(self._times[0]), float(self._times[-1]))

    def _read_frame(self, offset: int) -> Frame:
        with open(self.dir / "frames.log", "rb") as fh:
            fh.seek(int(offset))
            t, n = _REC.unpack(fh.read(_REC.size))
            payload = fh.read(n)
        rec = json.loads(payload.decode("utf-8"))
        return _frame_from(rec, f"episode {self.id} offset {offset}")

    def index_at(self, t: float) -> int:
        """Index of the last frame with timestamp <= t (predecessor rule)."""
        self._load_index()
        self._warn_provisional("frame")
        times = self._times
        n = len(times)
        if n == 0:
            raise NotFoundError(f"episode {self.id} has no frames")
        self.probe_count = 0
        lo, hi = 0, n
        while lo < hi:
            mid = (lo + hi) // 2
            self.probe_count += 1
            if times[mid] <= t:
                lo = mid + 1
            else:
                hi = mid
        if lo == 0:
            raise NotFoundError(
                f"t={t} precedes episode start {float(times[0])}"
            )
        return lo - 1

    def frame_at(self, t: float) -> Frame:
        k = self.index_at(t)
        return self._read_frame(int(self._offsets[k]))

    def frames_between(self, start: float, end: float) -> Iterator[tuple[int, Frame]]:
        """All frames with start <= t <= end, in order, with their indexes."""
        self._load_index()
        self._warn_provisional("frame range")
        times = self._times
        k = int(np.searchsorted(times, start, side="left"))
        with open(self.dir / "frames.log", "rb") as fh:
            while k < len(times) and times[k] <= end:
                fh.seek(int(self._offsets[k]))
                t, n = _REC.unpack(fh.read(_REC.size))
                rec = json.loads(fh.read(n).decode("utf-8"))
                yield k, _frame_from(rec, f"episode {self.id} frame {k}")
                k += 1

    def pose_ranges(self, entity: EntityId) -> list[tuple[int, int]]:
        """Frame-index runs in which the entity's pose changed every frame."""
        if self.sealed:
            runs = self.meta.get("pose_ranges", {}).get(entity, [])
            return [(int(a), int(b)) for a, b in runs]
        self._warn_provisional("pose index")
        runs: list[tuple[int, int]] = []
        last = None
        for k, frame in self.frames_between(-math.inf, math.inf):
            pose = frame.poses.get(entity)
            if pose is None or pose == last:
                continue
            last = pose
            if runs and runs[-1][1] == k - 1:
                runs[-1] = (runs[-1][0], k)
            else:
                runs.append((k, k))
        return runs

    # -- event side -------------------------------------------------------
    def _load_events(self) -> None:
        if self._events is not None:
            return
        events: list[Event] = []
        path = self.dir / "events.ndjson"
        if path.is_file():
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        events.append(event_from_record(json.loads(line)))
        events.sort(key=lambda e: e.sort_key())
        self._events = events
        self._by_type = {}
        self._by_participant = {}
        for ev in events:
            self._by_type.setdefault(ev.type, []).append(ev)
            for pid in set(ev.participants.values()):
                self._by_participant.setdefault(pid, []).append(ev)

    def events_by(
        self,
        type: str | None = None,
        participant: EntityId | None = None,
        interval: Interval | None = None,
        tol: float | None = None,
    ) -> list[Event]:
        """Events passing every supplied filter, in start order.

        The interval filter keeps any event whose span intersects the
        window, closed on both ends, with delta_t slack by default.
        """
        self._load_events()
        self._warn_provisional("event")
        if type is not None:
            pool = self._by_type.get(type, [])
        elif participant is not None:
            pool = self._by_participant.get(participant, [])
        else:
            pool = self._events
        if tol is None:
            tol = Thresholds().delta_t
        out = []
        for ev in pool:
            if participant is not None and participant not in ev.participants.values():
                continue
            if interval is not None and (
                ev.interval.start > interval.end + tol
                or ev.interval.end < interval.start - tol
            ):
                continue
            out.append(ev)
        return out

    def events(self) -> list[Event]:
        return self.events_by()
