"""Per-frame world snapshots: poses, twists, contacts, hand state, gaze."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .entities import EntityId
from .errors import ValidationError
from .geometry import Pose, Twist, Vec3, vnorm

SENSOR_SETS = ("thumb", "fingers", "palm")
GRASP_STYLES = ("pinch", "wrap", "tripod", "lateral")


@dataclass(frozen=True)
class ContactRecord:
    """Touching pair; ``normal`` is unit length and points from b toward a.

    Pairs are stored canonically with a < b so a contact set compares
    independent of detection order; use make_contact to build one.
    """

    a: EntityId
    b: EntityId
    normal: Vec3
    point: Vec3

    def __post_init__(self) -> None:
        if self.a == self.b:
            raise ValidationError(f"self-contact on {self.a}")
        n = vnorm(self.normal)
        if abs(n - 1.0) > 1e-6:
            raise ValidationError(f"contact normal not unit length: {self.normal}")

    @property
    def pair(self) -> tuple[EntityId, EntityId]:
        return (self.a, self.b)

    def normal_on(self, entity: EntityId) -> Vec3:
        """Surface normal pushing ``entity`` away from its partner."""
        if entity == self.a:
            return self.normal
        if entity == self.b:
            return (-self.normal[0], -self.normal[1], -self.normal[2])
        raise ValidationError(f"{entity} not in contact pair {self.pair}")

    def other(self, entity: EntityId) -> EntityId:
        if entity == self.a:
            return self.b
        if entity == self.b:
            return self.a
        raise ValidationError(f"{entity} not in contact pair {self.pair}")


def make_contact(a: EntityId, b: EntityId, normal: Vec3, point: Vec3) -> ContactRecord:
    if a > b:
        a, b = b, a
        normal = (-normal[0], -normal[1], -normal[2])
    return ContactRecord(a, b, normal, point)


@dataclass
class HandState:
    """Analog grasp input plus which objects touch which sensor groups."""

    hand_id: EntityId
    grasp_style: str = "pinch"
    grasp_input: float = 0.0
    sensor_contacts: dict[str, frozenset[EntityId]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.grasp_style not in GRASP_STYLES:
            raise ValidationError(f"unknown grasp style {self.grasp_style!r}")
        # analog input saturates at the ends of stick travel
        self.grasp_input = min(1.0, max(0.0, self.grasp_input))

    def sets_touching(self, obj: EntityId) -> frozenset[str]:
        return frozenset(
            name for name, objs in self.sensor_contacts.items() if obj in objs
        )

    def touched_objects(self) -> set[EntityId]:
        out: set[EntityId] = set()
        for objs in self.sensor_contacts.values():
            out |= objs
        return out


@dataclass(frozen=True)
class Gaze:
    origin: Vec3
    direction: Vec3

    def __post_init__(self) -> None:
        n = vnorm(self.direction)
        if abs(n - 1.0) > 1e-6:
            raise ValidationError(f"gaze direction not unit length: {self.direction}")


DEFAULT_GAZE = Gaze((0.0, 0.0, 1.6), (0.0, 1.0, 0.0))


@dataclass
class Frame:
    """One timestamped snapshot of everything the monitors can see."""

    t: float
    poses: dict[EntityId, Pose]
    twists: dict[EntityId, Twist]
    contacts: list[ContactRecord] = field(default_factory=list)
    hands: list[HandState] = field(default_factory=list)
    gaze: Gaze = DEFAULT_GAZE
    sleeping: frozenset[EntityId] = frozenset()

    def __post_init__(self) -> None:
        if not math.isfinite(self.t):
            raise ValidationError(f"non-finite frame time {self.t}")

    def contact_pairs(self) -> set[tuple[EntityId, EntityId]]:
        return {c.pair for c in self.contacts}

    def contact_between(self, a: EntityId, b: EntityId) -> ContactRecord | None:
        if a > b:
            a, b = b, a
        for c in self.contacts:
            if c.a == a and c.b == b:
                return c
        return None

    def hand(self, hand_id: EntityId) -> HandState | None:
        for h in self.hands:
            if h.hand_id == hand_id:
                return h
        return None


def validate_frame(frame: Frame, known_ids: set[EntityId]) -> None:
    """Reject references to entities absent from the descriptor set."""

    def check(eid: EntityId, where: str) -> None:
        if eid not in known_ids:
            raise ValidationError(f"frame t={frame.t}: unknown entity {eid} in {where}")

    for eid in frame.poses:
        check(eid, "poses")
    for eid in frame.twists:
        check(eid, "twists")
    for c in frame.contacts:
        check(c.a, "contacts")
        check(c.b, "contacts")
    for h in frame.hands:
        check(h.hand_id, "hands")
        for objs in h.sensor_contacts.values():
            for eid in objs:
                check(eid, "sensor_contacts")
    for eid in frame.sleeping:
        check(eid, "sleeping")
