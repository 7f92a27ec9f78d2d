"""Entity identity, class taxonomy, descriptors, and the part-of hierarchy."""
from __future__ import annotations

import math
import uuid
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import ValidationError
from .geometry import Shape

# Root namespace all seeded ids chain from.
APP_NAMESPACE = uuid.uuid5(uuid.NAMESPACE_DNS, "actmem")

EntityId = str


class IdMinter:
    """Mints ids: random uuid4 by default, uuid5 name chains under a seed.

    Seeded mode hashes qualified names into a per-seed namespace, so the
    same (seed, name) pair always yields the same id while distinct names
    stay distinct.
    """

    def __init__(self, seed: int | None = None) -> None:
        self.seed = seed
        self._ns = None if seed is None else uuid.uuid5(APP_NAMESPACE, f"seed={seed}")

    def mint(self, qualified_name: str) -> EntityId:
        if self._ns is None:
            return str(uuid.uuid4())
        return str(uuid.uuid5(self._ns, qualified_name))


def derive_id(parent_id: EntityId, local_name: str) -> EntityId:
    """Name-based child id: stable for a fixed parent, unique across parents."""
    try:
        ns = uuid.UUID(parent_id)
    except ValueError as exc:
        raise ValidationError(f"bad parent id {parent_id!r}") from exc
    return str(uuid.uuid5(ns, local_name))


@dataclass(frozen=True)
class ClassTag:
    name: str
    parents: tuple[str, ...] = ()


class Taxonomy:
    """Named classes with parent links forming a DAG; is_a is reflexive."""

    def __init__(self, tags: Iterable[ClassTag] = ()) -> None:
        self._tags: dict[str, ClassTag] = {}
        for tag in tags:
            self.add(tag)

    def add(self, tag: ClassTag) -> None:
        if tag.name in self._tags and self._tags[tag.name] != tag:
            raise ValidationError(f"class {tag.name!r} already defined differently")
        self._tags[tag.name] = tag

    def define(self, name: str, *parents: str) -> None:
        self.add(ClassTag(name, tuple(parents)))

    def __contains__(self, name: str) -> bool:
        return name in self._tags

    def __iter__(self) -> Iterator[str]:
        return iter(self._tags)

    def names(self) -> list[str]:
        return sorted(self._tags)

    def require(self, name: str) -> ClassTag:
        tag = self._tags.get(name)
        if tag is None:
            raise ValidationError(
                f"unknown class tag {name!r}; known tags: {', '.join(self.names())}"
            )
        return tag

    def validate(self) -> None:
        """Check that all parents exist and the hierarchy has no cycle."""
        for tag in self._tags.values():
            for p in tag.parents:
                if p not in self._tags:
                    raise ValidationError(f"class {tag.name!r} has unknown parent {p!r}")
        state: dict[str, int] = {}  # 1 = on stack, 2 = done

        def visit(name: str, trail: list[str]) -> None:
            mark = state.get(name)
            if mark == 2:
                return
            if mark == 1:
                raise ValidationError(f"class hierarchy cycle: {' -> '.join(trail + [name])}")
            state[name] = 1
            for p in self._tags[name].parents:
                visit(p, trail + [name])
            state[name] = 2

        for name in self._tags:
            visit(name, [])

    def is_a(self, name: str, ancestor: str) -> bool:
        """True when ``name`` equals ``ancestor`` or reaches it via parents."""
        self.require(ancestor)
        seen: set[str] = set()
        stack = [name]
        while stack:
            cur = stack.pop()
            if cur == ancestor:
                return True
            if cur in seen:
                continue
            seen.add(cur)
            stack.extend(self.require(cur).parents)
        return False

    def subclasses(self, name: str) -> set[str]:
        self.require(name)
        return {c for c in self._tags if self.is_a(c, name)}


def base_taxonomy() -> Taxonomy:
    """Classes every scenario and monitor can rely on; scripts may add more."""
    tx = Taxonomy()
    tx.define("Entity")
    tx.define("Hand", "Entity")
    tx.define("PhysicalArtifact", "Entity")
    tx.define("Furniture", "PhysicalArtifact")
    tx.define("Table", "Furniture")
    tx.define("Shelf", "Furniture")
    tx.define("Fridge", "Furniture")
    tx.define("FridgeDoor", "Furniture")
    tx.define("Handle", "PhysicalArtifact")
    tx.define("Vessel", "PhysicalArtifact")
    tx.define("Cup", "Vessel")
    tx.define("Bottle", "Vessel")
    tx.define("CerealBox", "PhysicalArtifact")
    tx.define("Tray", "PhysicalArtifact")
    tx.define("Ball", "PhysicalArtifact")

    tx.define("Event")
    tx.define("ForceDynamicEvent", "Event")
    tx.define("Contact", "ForceDynamicEvent")
    tx.define("SupportedBy", "ForceDynamicEvent")
    tx.define("Grasping", "ForceDynamicEvent")
    tx.define("MotionPhase", "Event")
    tx.define("Reaching", "MotionPhase")
    tx.define("Fixation", "MotionPhase")
    tx.define("Sliding", "MotionPhase")
    tx.define("PickingUp", "MotionPhase")
    tx.define("Transporting", "MotionPhase")
    tx.define("PuttingDown", "MotionPhase")
    tx.define("DerivedEvent", "Event")
    tx.define("GraspingOnto", "DerivedEvent")
    tx.define("HoldingOnto", "DerivedEvent")
    tx.define("CompositeAction", "DerivedEvent")
    tx.define("PickAndPlace", "CompositeAction")
    tx.define("PickAndPlace", "CompositeAction")
    tx.validate()
    return tx


@dataclass(frozen=True)
class EntityDescriptor:
    """Static identity and physical makeup of one world entity.

    mass == 0 marks a static (unmovable) entity; is_static mirrors that.
    """

    id: EntityId
    name: str
    class_tag: str
    shape: Shape
    mass: float
    parts: tuple[EntityId, ...] = ()
    is_static: bool = False

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("descriptor id must be nonempty")
        if not (math.isfinite(self.mass) and self.mass >= 0):
            raise ValidationError(f"descriptor {self.name!r}: mass {self.mass} invalid")
        if self.is_static != (self.mass == 0.0):
            raise ValidationError(
                f"descriptor {self.name!r}: is_static={self.is_static} but mass={self.mass}"
            )


def descriptor(
    id: EntityId,
    name: str,
    class_tag: str,
    shape: Shape,
    mass: float,
    parts: Iterable[EntityId] = (),
) -> EntityDescriptor:
    return EntityDescriptor(id, name, class_tag, shape, mass, tuple(parts), mass == 0.0)


def validate_descriptor_set(
    descriptors: Iterable[EntityDescriptor],
) -> dict[EntityId, EntityDescriptor]:
    """Index descriptors by id and reject dangling or cyclic part links."""
    by_id: dict[EntityId, EntityDescriptor] = {}
    for d in descriptors:
        if d.id in by_id:
            raise ValidationError(f"duplicate entity id {d.id}")
        by_id[d.id] = d
    for d in by_id.values():
        for p in d.parts:
            if p == d.id:
                raise ValidationError(f"entity {d.name!r} lists itself as a part")
            if p not in by_id:
                raise ValidationError(f"entity {d.name!r} has unknown part {p}")
    state: dict[EntityId, int] = {}

    def visit(eid: EntityId, trail: list[str]) -> None:
        mark = state.get(eid)
        if mark == 2:
            return
        name = by_id[eid].name
        if mark == 1:
            raise ValidationError(f"partonomy cycle: {' -> '.join(trail + [name])}")
        state[eid] = 1
        for p in by_id[eid].parts:
            visit(p, trail + [name])
        state[eid] = 2

    for eid in by_id:
        visit(eid, [])
    return by_id


def part_of_closure(
    descriptors: dict[EntityId, EntityDescriptor],
) -> dict[EntityId, set[EntityId]]:
    """Map each entity to every whole it is transitively part of."""
    wholes: dict[EntityId, set[EntityId]] = {eid: set() for eid in descriptors}
    direct: dict[EntityId, list[EntityId]] = {eid: [] for eid in descriptors}
    for d in descriptors.values():
        for p in d.parts:
            direct[p].append(d.id)

    def ancestors(eid: EntityId) -> set[EntityId]:
        out: set[EntityId] = set()
        stack = list(direct[eid])
        while stack:
            w = stack.pop()
            if w not in out:
                out.add(w)
                stack.extend(direct[w])
        return out

    for eid in descriptors:
        wholes[eid] = ancestors(eid)
    return wholes
