"""Pattern queries, rule composition, and reconstruction over stored episodes.

Patterns select events by type (resolved through the class hierarchy,
so asking for MotionPhase matches all six phases) and by per-role
entity constraints: a concrete id, a class, or membership in another
entity's part tree. Composition rules assemble stored events into
composite actions; matching is deliberately plain so that an
independent scan can reproduce it:

    events are considered in sort order; for every value of the rule's
    shared roles, steps are matched left to right, each taking the
    first unconsumed candidate whose Allen relation to the previously
    matched event is allowed for that step. A missing optional step is
    skipped; a missing required step abandons the attempt. Matched
    events are consumed and the scan repeats, so chains on the same
    object yield disjoint composites.

Composites and derived events are materialized, never persisted; their
ids are minted from the rule name and the matched event ids, so the
same store answers the same query with the same bytes every time.
"""
from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .config import Thresholds
from .entities import APP_NAMESPACE, EntityId, Taxonomy, derive_id
from .errors import NotFoundError, ValidationError
from .events import GRASPING, Event
from .geometry import Pose, ray_intersect
from .intervals import AllenRelation, Interval, allen_relation
from .store import EpisodeReader, TaskRecord

_COMPOSED_NS = str(uuid.uuid5(APP_NAMESPACE, "composed"))
_RELATION_NAMES = frozenset(r.value for r in AllenRelation)
DEFAULT_RELATIONS = frozenset({"before", "meets"})


@dataclass(frozen=True)
class EntityConstraint:
    """What a participant in a given role must satisfy."""

    cls: str | None = None
    id: EntityId | None = None
    part_of: tuple[str, str] | None = None   # ("id", X) or ("class", C)
    bind: str | None = None


@dataclass
class QueryPattern:
    action_type: str | None = None
    participants: dict[str, EntityConstraint] = field(default_factory=dict)
    window: Interval | None = None
    sub_actions: list[tuple["QueryPattern", frozenset[str] | None]] = field(
        default_factory=list
    )


@dataclass(frozen=True)
class RuleStep:
    pattern: QueryPattern
    optional: bool = False
    relations: frozenset[str] = DEFAULT_RELATIONS


@dataclass
class CompositionRule:
    name: str
    result_type: str
    steps: list[RuleStep]
    shared_roles: tuple[str, ...] = ("object",)


# ---------------------------------------------------------------------------
# parsing query documents and rule files

def constraint_from_dict(doc: dict, where: str) -> EntityConstraint:
    if not isinstance(doc, dict):
        raise ValidationError(f"{where}: constraint must be a mapping")
    unknown = set(doc) - {"class", "id", "part_of", "bind"}
    if unknown:
        raise ValidationError(f"{where}: unknown constraint keys {sorted(unknown)}")
    part_of = None
    if "part_of" in doc:
        po = doc["part_of"]
        if isinstance(po, dict) and set(po) == {"id"}:
            part_of = ("id", po["id"])
        elif isinstance(po, dict) and set(po) == {"class"}:
            part_of = ("class", po["class"])
        elif isinstance(po, str):
            part_of = ("class", po)
        else:
            raise ValidationError(f"{where}: part_of needs an id or a class")
    return EntityConstraint(
        cls=doc.get("class"), id=doc.get("id"), part_of=part_of, bind=doc.get("bind")
    )


def pattern_from_dict(doc: dict, where: str = "pattern") -> QueryPattern:
    if not isinstance(doc, dict):
        raise ValidationError(f"{where}: pattern must be a mapping")
    unknown = set(doc) - {"type", "participants", "window", "sub_actions"}
    if unknown:
        raise ValidationError(f"{where}: unknown pattern keys {sorted(unknown)}")
    participants = {
        role: constraint_from_dict(c, f"{where}.participants[{role}]")
        for role, c in (doc.get("participants") or {}).items()
    }
    window = None
    if doc.get("window") is not None:
        w = doc["window"]
        if not (isinstance(w, (list, tuple)) and len(w) == 2):
            raise ValidationError(f"{where}: window must be [start, end]")
        window = Interval(float(w[0]), float(w[1]))
    subs = []
    for i, s in enumerate(doc.get("sub_actions") or []):
        swhere = f"{where}.sub_actions[{i}]"
        rels = None
        if isinstance(s, dict) and "relations" in s:
            s = dict(s)
            rels = _relation_set(s.pop("relations"), swhere)
        subs.append((pattern_from_dict(s, swhere), rels))
    return QueryPattern(
        action_type=doc.get("type"), participants=participants,
        window=window, sub_actions=subs,
    )


def _relation_set(names, where: str) -> frozenset[str]:
    if isinstance(names, str):
        names = [names]
    out = frozenset(names)
    bad = out - _RELATION_NAMES
    if bad:
        raise ValidationError(f"{where}: unknown relations {sorted(bad)}")
    if not out:
        raise ValidationError(f"{where}: empty relation set")
    return out


def rule_from_dict(doc: dict, where: str = "rule") -> CompositionRule:
    if not isinstance(doc, dict):
        raise ValidationError(f"{where}: rule must be a mapping")
    unknown = set(doc) - {"name", "result", "shared", "steps"}
    if unknown:
        raise ValidationError(f"{where}: unknown rule keys {sorted(unknown)}")
    try:
        name = doc["name"]
        result = doc["result"]
        raw_steps = doc["steps"]
    except KeyError as exc:
        raise ValidationError(f"{where}: rule needs {exc.args[0]!r}") from exc
    if not raw_steps:
        raise ValidationError(f"{where}: rule needs at least one step")
    steps = []
    for i, s in enumerate(raw_steps):
        swhere = f"{where}.steps[{i}]"
        if not isinstance(s, dict):
            raise ValidationError(f"{swhere}: step must be a mapping")
        s = dict(s)
        optional = bool(s.pop("optional", False))
        rels = (
            _relation_set(s.pop("relations"), swhere)
            if "relations" in s
            else DEFAULT_RELATIONS
        )
        steps.append(RuleStep(pattern_from_dict(s, swhere), optional, rels))
    shared = tuple(doc.get("shared", ("object",)))
    return CompositionRule(name=name, result_type=result, steps=steps, shared_roles=shared)


def load_rule(path: str | Path) -> CompositionRule:
    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    return rule_from_dict(doc, where=str(path))


# ---------------------------------------------------------------------------
# matching

def _ancestors(task: TaskRecord, eid: EntityId) -> set[EntityId]:
    """Every entity whose part tree (transitively) contains eid."""
    parents: dict[EntityId, set[EntityId]] = {}
    for d in task.descriptors.values():
        for p in d.parts:
            parents.setdefault(p, set()).add(d.id)
    out: set[EntityId] = set()
    frontier = [eid]
    while frontier:
        cur = frontier.pop()
        for up in parents.get(cur, ()):
            if up not in out:
                out.add(up)
                frontier.append(up)
    return out


def _check_pattern(task: TaskRecord, tax: Taxonomy, pattern: QueryPattern) -> None:
    if pattern.action_type is not None:
        tax.require(pattern.action_type)
    for role, c in pattern.participants.items():
        if c.cls is not None:
            tax.require(c.cls)
        if c.part_of is not None and c.part_of[0] == "class":
            tax.require(c.part_of[1])
    for sub, _rels in pattern.sub_actions:
        _check_pattern(task, tax, sub)


def _constraint_ok(task: TaskRecord, tax: Taxonomy, value: EntityId, c: EntityConstraint) -> bool:
    if c.id is not None and value != c.id:
        return False
    desc = task.descriptors.get(value)
    if c.cls is not None:
        if desc is None or not tax.is_a(desc.class_tag, c.cls):
            return False
    if c.part_of is not None:
        kind, target = c.part_of
        ups = _ancestors(task, value)
        if kind == "id":
            if target not in ups:
                return False
        else:
            if not any(
                tax.is_a(task.descriptors[a].class_tag, target)
                for a in ups
                if a in task.descriptors
            ):
                return False
    return True


def _match_event(
    task: TaskRecord,
    tax: Taxonomy,
    ev: Event,
    pattern: QueryPattern,
    tol: float,
) -> dict[str, EntityId] | None:
    """Bindings if the event satisfies the pattern, else None."""
    if pattern.action_type is not None:
        if ev.type not in tax:
            return None
        if not tax.is_a(ev.type, pattern.action_type):
            return None
    if pattern.window is not None:
        w = pattern.window
        if ev.interval.start > w.end + tol or ev.interval.end < w.start - tol:
            return None
    bindings: dict[str, EntityId] = {}
    for role, c in pattern.participants.items():
        value = ev.participants.get(role)
        if value is None or not _constraint_ok(task, tax, value, c):
            return None
        if c.bind is not None:
            bindings[c.bind] = value
    return bindings


def find_actions(
    task: TaskRecord,
    events: list[Event],
    pattern: QueryPattern,
    tol: float | None = None,
) -> list[tuple[Event, dict[str, EntityId]]]:
    """Events matching the pattern, with any requested variable bindings."""
    tax = task.taxonomy()
    _check_pattern(task, tax, pattern)
    if tol is None:
        tol = Thresholds().delta_t
    if pattern.sub_actions:
        rule = CompositionRule(
            name=pattern.action_type or "query",
            result_type=pattern.action_type or "CompositeAction",
            steps=[
                RuleStep(sub, optional=False, relations=rels or DEFAULT_RELATIONS)
                for sub, rels in pattern.sub_actions
            ],
        )
        out = []
        for comp in compose(task, events, rule, tol=tol):
            if pattern.window is not None:
                w = pattern.window
                if comp.interval.start > w.end + tol or comp.interval.end < w.start - tol:
                    continue
            out.append((comp, {}))
        return out
    hits = []
    for ev in sorted(events, key=lambda e: e.sort_key()):
        bindings = _match_event(task, tax, ev, pattern, tol)
        if bindings is not None:
            hits.append((ev, bindings))
    return hits


def occurs(events, event_id: EntityId) -> Interval:
    """The stored interval of one event, by id."""
    if isinstance(events, EpisodeReader):
        events = events.events()
    for ev in events:
        if ev.id == event_id:
            return ev.interval
    raise NotFoundError(f"no event {event_id}")


# ---------------------------------------------------------------------------
# composition

def compose(
    task: TaskRecord,
    events: list[Event],
    rule: CompositionRule,
    tol: float | None = None,
) -> list[Event]:
    """Assemble composites per the module's greedy left-to-right semantics."""
    tax = task.taxonomy()
    for step in rule.steps:
        _check_pattern(task, tax, step.pattern)
    if not rule.result_type:
        raise ValidationError(f"rule {rule.name!r}: empty result type")
    if tol is None:
        tol = Thresholds().delta_t
    ordered = sorted(events, key=lambda e: e.sort_key())
    keys = sorted(
        {
            tuple(ev.participants[r] for r in rule.shared_roles)
            for ev in ordered
            if all(r in ev.participants for r in rule.shared_roles)
        }
    )
    consumed: set[str] = set()
    composites: list[Event] = []
    for key in keys:
        while True:
            matched: list[Event] = []
            env: dict[str, EntityId] = {}
            prev: Event | None = None
            failed = False
            taken: set[str] = set()
            for step in rule.steps:
                choice = None
                choice_bind = None
                for ev in ordered:
                    if ev.id in consumed or ev.id in taken:
                        continue
                    if tuple(ev.participants.get(r) for r in rule.shared_roles) != key:
                        continue
                    bindings = _match_event(task, tax, ev, step.pattern, tol)
                    if bindings is None:
                        continue
                    if any(env.get(k, v) != v for k, v in bindings.items()):
                        continue
                    if prev is not None:
                        rel = allen_relation(prev.interval, ev.interval, tol)
                        if rel.value not in step.relations:
                            continue
                    choice, choice_bind = ev, bindings
                    break
                if choice is None:
                    if not step.optional:
                        failed = True
                        break
                    continue
                matched.append(choice)
                taken.add(choice.id)
                env.update(choice_bind)
                prev = choice
            if failed or not matched:
                break
            consumed.update(e.id for e in matched)
            composites.append(_materialize(rule, key, matched))
    composites.sort(key=lambda e: e.sort_key())
    return composites


def _materialize(rule: CompositionRule, key, matched: list[Event]) -> Event:
    participants = dict(zip(rule.shared_roles, key))
    # carry roles every sub-event agrees on (e.g. the performing hand)
    for role in sorted(set().union(*(e.participants for e in matched))):
        values = {e.participants[role] for e in matched if role in e.participants}
        if len(values) == 1 and all(role in e.participants for e in matched):
            participants.setdefault(role, values.pop())
    eid = derive_id(_COMPOSED_NS, rule.name + "|" + "|".join(e.id for e in matched))
    return Event(
        id=eid,
        type=rule.result_type,
        interval=Interval(matched[0].interval.start, matched[-1].interval.end),
        participants=participants,
        attributes={"rule": rule.name, "sub_events": [e.id for e in matched]},
        source="composed",
    )


# ---------------------------------------------------------------------------
# derived events and reconstruction

def infer_holding(
    task: TaskRecord, events: list[Event], hand_strength: float
) -> list[Event]:
    """Split grasps by object weight: heavier than the hand manages is a hold."""
    if hand_strength <= 0:
        raise ValidationError(f"hand_strength {hand_strength} must be > 0")
    out = []
    for ev in sorted(events, key=lambda e: e.sort_key()):
        if ev.type != GRASPING:
            continue
        obj = ev.participants.get("object")
        desc = task.descriptors.get(obj)
        if desc is None:
            raise NotFoundError(f"event {ev.id}: unknown object {obj}")
        kind = "HoldingOnto" if desc.mass > hand_strength else "GraspingOnto"
        out.append(
            Event(
                id=derive_id(_COMPOSED_NS, f"{kind}|{ev.id}"),
                type=kind,
                interval=ev.interval,
                participants=dict(ev.participants),
                attributes={"from_event": ev.id, "mass": desc.mass},
                source="composed",
            )
        )
    return out


def trajectory(
    task: TaskRecord, reader: EpisodeReader, entity: EntityId, interval: Interval
) -> list[tuple[float, Pose]]:
    """The entity's recorded poses over the window, bit-exact, in order."""
    if entity not in task.descriptors:
        raise NotFoundError(f"task {task.name!r} has no entity {entity}")
    out = []
    for _k, frame in reader.frames_between(interval.start, interval.end):
        pose = frame.poses.get(entity)
        if pose is not None:
            out.append((frame.t, pose))
    return out


def gaze_target(
    task: TaskRecord, reader: EpisodeReader, t: float
) -> EntityId | None:
    """Entity the recorded gaze ray hits first at the frame covering t."""
    frame = reader.frame_at(t)
    best: tuple[float, EntityId] | None = None
    for eid in sorted(frame.poses):
        desc = task.descriptors.get(eid)
        if desc is None:
            continue
        d = ray_intersect(frame.gaze.origin, frame.gaze.direction, frame.poses[eid], desc.shape)
        if d is not None and (best is None or d < best[0]):
            best = (d, eid)
    return best[1] if best else None
