"""Symbolic interval events: the output vocabulary of all monitors."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .entities import EntityId
from .errors import ValidationError
from .intervals import Interval

CONTACT = "Contact"
SUPPORTED_BY = "SupportedBy"
GRASPING = "Grasping"
REACHING = "Reaching"
FIXATION = "Fixation"
SLIDING = "Sliding"
PICKING_UP = "PickingUp"
TRANSPORTING = "Transporting"
PUTTING_DOWN = "PuttingDown"

MONITOR_EVENT_TYPES = (
    CONTACT,
    SUPPORTED_BY,
    GRASPING,
    REACHING,
    FIXATION,
    SLIDING,
    PICKING_UP,
    TRANSPORTING,
    PUTTING_DOWN,
)

ROLES = ("performer", "object", "supporter", "other")
SOURCES = ("monitor", "script", "composed", "derived")


@dataclass
class Event:
    """One typed interval with participant roles and free-form attributes."""

    id: EntityId
    type: str
    interval: Interval
    participants: dict[str, EntityId] = field(default_factory=dict)
    attributes: dict[str, Any] = field(default_factory=dict)
    source: str = "monitor"

    @property
    def start(self) -> float:
        return self.interval.start

    @property
    def end(self) -> float:
        return self.interval.end

    def role(self, name: str) -> EntityId | None:
        return self.participants.get(name)

    def sort_key(self) -> tuple:
        return (
            self.interval.start,
            self.interval.end,
            self.type,
            sorted(self.participants.items()),
            self.id,
        )


def validate_event(ev: Event) -> None:
    if not ev.id:
        raise ValidationError("event id must be nonempty")
    if not ev.type:
        raise ValidationError("event type must be nonempty")
    if ev.source not in SOURCES:
        raise ValidationError(f"event {ev.id}: unknown source {ev.source!r}")
    for role in ev.participants:
        if role not in ROLES:
            raise ValidationError(f"event {ev.id}: unknown role {role!r}")
    if ev.type == GRASPING:
        # contract: a grasp names who grasped what, and how
        if ev.role("performer") is None or ev.role("object") is None:
            raise ValidationError(f"Grasping event {ev.id} missing performer/object")
        if "grasp_style" not in ev.attributes:
            raise ValidationError(f"Grasping event {ev.id} missing grasp_style")


def event_record(ev: Event) -> dict:
    """Export form; field order is part of the file format."""
    return {
        "id": ev.id,
        "type": ev.type,
        "start": ev.interval.start,
        "end": ev.interval.end,
        "participants": dict(sorted(ev.participants.items())),
        "attributes": dict(sorted(ev.attributes.items())),
        "source": ev.source,
    }


def event_from_record(rec: dict) -> Event:
    try:
        ev = Event(
            id=rec["id"],
            type=rec["type"],
            interval=Interval(float(rec["start"]), float(rec["end"])),
            participants=dict(rec.get("participants", {})),
            attributes=dict(rec.get("attributes", {})),
            source=rec.get("source", "monitor"),
        )
    except KeyError as exc:
        raise ValidationError(f"event record missing field {exc}") from exc
    validate_event(ev)
    return ev
