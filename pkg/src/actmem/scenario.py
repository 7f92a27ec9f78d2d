"""Scenario scripts: a declarative schedule of hand motions and grasps.

A script lists the entities on the desk and a time-ordered directive
list (move_hand / set_grasp / wait). Directives start when the previous
one ends unless an explicit `at` is given; two directives may not
overlap on the same hand. Scripts load from YAML and are the only input
the trace generator takes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import yaml

from .config import FRAME_RATE
from .entities import ClassTag, Taxonomy, base_taxonomy
from .errors import ValidationError
from .events import Event
from .frames import GRASP_STYLES
from .geometry import IDENTITY_QUAT, Pose, Shape, qnormalize

MOVE_HAND = "move_hand"
SET_GRASP = "set_grasp"
WAIT = "wait"


@dataclass
class EntitySpec:
    """One entity before ids are minted; parts refer to sibling names."""

    name: str
    class_tag: str
    shape: Shape
    mass: float
    pose: Pose
    parts: tuple[str, ...] = ()


@dataclass
class Directive:
    op: str
    duration: float
    hand: str | None = None
    target: Pose | None = None
    style: str | None = None
    u: float | None = None
    at: float | None = None

    def describe(self) -> str:
        if self.op == MOVE_HAND:
            return f"move_hand({self.hand}, {self.duration}s)"
        if self.op == SET_GRASP:
            return f"set_grasp({self.hand}, {self.style}, u={self.u}, {self.duration}s)"
        return f"wait({self.duration}s)"


@dataclass
class ScenarioScript:
    name: str
    seed: int
    frame_rate: float = FRAME_RATE
    entities: list[EntitySpec] = field(default_factory=list)
    directives: list[Directive] = field(default_factory=list)
    classes: list[ClassTag] = field(default_factory=list)
    ground_truth: list[Event] = field(default_factory=list)

    def taxonomy(self) -> Taxonomy:
        tx = base_taxonomy()
        for tag in self.classes:
            tx.add(tag)
        tx.validate()
        return tx

    def hand_names(self) -> list[str]:
        tx = self.taxonomy()
        return [e.name for e in self.entities if tx.is_a(e.class_tag, "Hand")]

    def schedule(self) -> list[tuple[float, float]]:
        """Resolve each directive to a (start, end) time, validating order."""
        out: list[tuple[float, float]] = []
        cursor = 0.0
        prev_start = 0.0
        for i, d in enumerate(self.directives):
            start = cursor if d.at is None else d.at
            if start < prev_start - 1e-12:
                raise ValidationError(
                    f"directive {i} ({d.describe()}) starts at {start}, "
                    f"before directive {i - 1}"
                )
            if d.duration < 0:
                raise ValidationError(f"directive {i}: negative duration {d.duration}")
            end = start + d.duration
            out.append((start, end))
            prev_start = start
            cursor = max(cursor, end)
        return out

    def duration(self) -> float:
        sched = self.schedule()
        return max((end for _, end in sched), default=0.0)

    def frame_count(self) -> int:
        return int(self.duration() * self.frame_rate + 1e-9) + 1

    def validate(self) -> None:
        if not self.name:
            raise ValidationError("script needs a name")
        if self.frame_rate <= 0:
            raise ValidationError(f"frame_rate {self.frame_rate} must be > 0")
        tx = self.taxonomy()
        names = set()
        for e in self.entities:
            if e.name in names:
                raise ValidationError(f"duplicate entity name {e.name!r}")
            names.add(e.name)
            tx.require(e.class_tag)
            if e.mass < 0:
                raise ValidationError(f"entity {e.name!r}: negative mass")
        for e in self.entities:
            for p in e.parts:
                if p not in names:
                    raise ValidationError(f"entity {e.name!r}: unknown part {p!r}")
        hands = set(self.hand_names())
        sched = self.schedule()
        per_hand: dict[str, list[tuple[float, float, int]]] = {}
        for i, d in enumerate(self.directives):
            if d.op == WAIT:
                continue
            if d.op not in (MOVE_HAND, SET_GRASP):
                raise ValidationError(f"directive {i}: unknown op {d.op!r}")
            if d.hand not in hands:
                raise ValidationError(
                    f"directive {i} ({d.describe()}): {d.hand!r} is not a hand"
                )
            if d.op == MOVE_HAND and d.target is None:
                raise ValidationError(f"directive {i}: move_hand needs a target")
            if d.op == SET_GRASP:
                if d.style not in GRASP_STYLES:
                    raise ValidationError(f"directive {i}: unknown style {d.style!r}")
                if d.u is None or not (0.0 <= d.u <= 1.0):
                    raise ValidationError(f"directive {i}: u must be in [0, 1]")
            start, end = sched[i]
            per_hand.setdefault(d.hand, []).append((start, end, i))
        for hand, spans in per_hand.items():
            spans.sort()
            for (s0, e0, i0), (s1, e1, i1) in zip(spans, spans[1:]):
                if s1 < e0 - 1e-12:
                    raise ValidationError(
                        f"directives {i0} and {i1} overlap on hand {hand!r}"
                    )
        total = self.duration()
        for ev in self.ground_truth:
            if ev.interval.start < -1e-9 or ev.interval.end > total + 1e-9:
                raise ValidationError(
                    f"ground-truth event {ev.type} [{ev.start}, {ev.end}] "
                    f"outside script duration {total}"
                )


def _pose_from(data: dict, where: str) -> Pose:
    try:
        pos = tuple(float(v) for v in data["position"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"{where}: bad position: {exc}") from exc
    if len(pos) != 3:
        raise ValidationError(f"{where}: position needs 3 components")
    quat = data.get("orientation")
    if quat is None:
        return Pose(pos)
    if len(quat) != 4:
        raise ValidationError(f"{where}: orientation needs 4 components (w,x,y,z)")
    return Pose(pos, qnormalize(tuple(float(v) for v in quat)))


def _shape_from(data: dict, where: str) -> Shape:
    try:
        return Shape(data["kind"], tuple(float(v) for v in data["extents"]))
    except KeyError as exc:
        raise ValidationError(f"{where}: shape needs kind and extents") from exc


def script_from_dict(data: dict) -> ScenarioScript:
    if not isinstance(data, dict):
        raise ValidationError("scenario document must be a mapping")
    classes = [
        ClassTag(c["name"], tuple(c.get("parents", [])))
        for c in data.get("classes", [])
    ]
    entities = []
    for i, e in enumerate(data.get("entities", [])):
        where = f"entities[{i}]"
        try:
            entities.append(
                EntitySpec(
                    name=e["name"],
                    class_tag=e["class"],
                    shape=_shape_from(e["shape"], where),
                    mass=float(e.get("mass", 0.0)),
                    pose=_pose_from(e["pose"], where),
                    parts=tuple(e.get("parts", [])),
                )
            )
        except KeyError as exc:
            raise ValidationError(f"{where}: missing field {exc}") from exc
    directives = []
    for i, d in enumerate(data.get("directives", [])):
        where = f"directives[{i}]"
        op = d.get("op")
        if op not in (MOVE_HAND, SET_GRASP, WAIT):
            raise ValidationError(f"{where}: unknown op {op!r}")
        directives.append(
            Directive(
                op=op,
                duration=float(d.get("duration", 0.0)),
                hand=d.get("hand"),
                target=_pose_from(d["target"], where) if "target" in d else None,
                style=d.get("style"),
                u=float(d["u"]) if "u" in d else None,
                at=float(d["at"]) if "at" in d else None,
            )
        )
    script = ScenarioScript(
        name=data.get("name", "scenario"),
        seed=int(data.get("seed", 0)),
        frame_rate=float(data.get("frame_rate", FRAME_RATE)),
        entities=entities,
        directives=directives,
        classes=classes,
    )
    script.validate()
    return script


def load_script(path: str) -> ScenarioScript:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            at = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
            raise ValidationError(f"{path}: YAML parse error{at}: {exc}") from exc
    try:
        return script_from_dict(data)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def script_to_dict(script: ScenarioScript) -> dict:
    def pose_dict(p: Pose) -> dict:
        out: dict = {"position": list(p.position)}
        if p.orientation != IDENTITY_QUAT:
            out["orientation"] = list(p.orientation)
        return out

    data: dict = {
        "name": script.name,
        "seed": script.seed,
        "frame_rate": script.frame_rate,
    }
    if script.classes:
        data["classes"] = [
            {"name": c.name, "parents": list(c.parents)} for c in script.classes
        ]
    data["entities"] = [
        {
            "name": e.name,
            "class": e.class_tag,
            "shape": {
                "kind": e.shape.kind,
                "extents": list(
                    e.shape.extents[: {"box": 3, "sphere": 1, "cylinder": 2}[e.shape.kind]]
                ),
            },
            "mass": e.mass,
            "pose": pose_dict(e.pose),
            **({"parts": list(e.parts)} if e.parts else {}),
        }
        for e in script.entities
    ]
    dirs = []
    for d in script.directives:
        rec: dict = {"op": d.op}
        if d.hand is not None:
            rec["hand"] = d.hand
        if d.target is not None:
            rec["target"] = pose_dict(d.target)
        if d.style is not None:
            rec["style"] = d.style
        if d.u is not None:
            rec["u"] = d.u
        rec["duration"] = d.duration
        if d.at is not None:
            rec["at"] = d.at
        dirs.append(rec)
    data["directives"] = dirs
    return data


def save_script(path: str, script: ScenarioScript) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(script_to_dict(script), fh, sort_keys=False)
