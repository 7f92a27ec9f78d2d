"""Scripted desk scenes for demos, tests, and the acceptance battery.

Twenty hand-authored scenes exercise the grammar end to end: clean
pick-and-place in several guises, drags, dips, a re-seat, tray rides,
two-hand runs, furniture grasps, mid-air releases, and a do-nothing
control. Each scene carries the grasp and motion-phase event types it
must produce, in start order; contact and support events are left to
the detectors. `fuzz_script` adds an endless family of randomized
sessions for invariant sweeps at a lighter frame rate.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .config import SimParams
from .events import (
    FIXATION,
    GRASPING,
    PICKING_UP,
    PUTTING_DOWN,
    REACHING,
    SLIDING,
    TRANSPORTING,
)
from .geometry import (
    Pose,
    Quat,
    box_shape,
    cylinder_shape,
    quat_from_axis_angle,
    sphere_shape,
)
from .scenario import MOVE_HAND, SET_GRASP, WAIT, Directive, EntitySpec, ScenarioScript

# scene families; every family below appears at least twice in the battery
PICK_PLACE = "canonical-pick-and-place"
SLIDE = "slide-then-lift"
RETREAT = "approach-retreat-approach"
DIP = "transport-with-dip"
TRAY = "tray-carry"
MULTI = "multi-object-grasp"
STATIC = "grasp-static-furniture"
MIDAIR = "release-mid-air"


@dataclass(frozen=True)
class Scenario:
    """A script plus the grasp/phase types it must yield, in start order."""

    name: str
    kind: str
    script: ScenarioScript
    expected: tuple[str, ...]


# ---------------------------------------------------------------------------
# entity and directive shorthand

TABLE_TOP = 0.72
CUP_SEAT = TABLE_TOP + 0.06          # cylinder half-height
HAND_ON_CUP = CUP_SEAT + 0.06 + 0.015  # palm slab bottom 5 mm into the rim


def _table() -> EntitySpec:
    return EntitySpec("table", "Table", box_shape(0.6, 0.6, 0.36), 0.0, Pose((0.0, 0.0, 0.36)))


def _cup(name: str, x: float, y: float) -> EntitySpec:
    return EntitySpec(name, "Cup", cylinder_shape(0.04, 0.06), 0.3, Pose((x, y, CUP_SEAT)))


def _hand(name: str, pos, quat: Quat | None = None) -> EntitySpec:
    pose = Pose(pos) if quat is None else Pose(pos, quat)
    return EntitySpec(name, "Hand", box_shape(0.04, 0.09, 0.02), 1.0, pose)


def _move(hand, pos, dur, at=None, quat: Quat | None = None) -> Directive:
    target = Pose(pos) if quat is None else Pose(pos, quat)
    return Directive(MOVE_HAND, dur, hand=hand, target=target, at=at)


def _grasp(hand, style="wrap", u=1.0, dur=0.3, at=None) -> Directive:
    return Directive(SET_GRASP, dur, hand=hand, style=style, u=u, at=at)


def _release(hand, dur=0.3, at=None) -> Directive:
    return Directive(SET_GRASP, dur, hand=hand, style="wrap", u=0.0, at=at)


def _wait(dur, at=None) -> Directive:
    return Directive(WAIT, dur, at=at)


FULL_CHAIN = (REACHING, FIXATION, GRASPING, PICKING_UP, TRANSPORTING, PUTTING_DOWN)


# ---------------------------------------------------------------------------
# canonical pick-and-place, three guises

def canonical_cup() -> Scenario:
    """Cup off a table, carried left, set back down."""
    script = ScenarioScript(
        name="canonical-cup",
        seed=101,
        entities=[_table(), _cup("cup", 0.2, 0.0), _hand("hand", (0.2, 0.0, 1.2))],
        directives=[
            _move("hand", (0.2, 0.0, HAND_ON_CUP), 1.0),
            _wait(0.3),
            _grasp("hand"),
            _wait(0.2),
            _move("hand", (0.2, 0.0, 1.2), 1.0),
            _move("hand", (-0.2, 0.0, 1.2), 1.0),
            _move("hand", (-0.2, 0.0, HAND_ON_CUP), 1.2),
            _wait(0.3),
            _release("hand"),
            _move("hand", (-0.2, 0.0, 1.2), 0.8),
            _wait(0.3),
        ],
    )
    return Scenario("canonical-cup", PICK_PLACE, script, FULL_CHAIN)


def canonical_ball_to_shelf() -> Scenario:
    """Ball pinched off the table and parked on a shelf."""
    shelf = EntitySpec("shelf", "Shelf", box_shape(0.25, 0.5, 0.45), 0.0, Pose((-0.9, 0.0, 0.45)))
    ball = EntitySpec("ball", "Ball", sphere_shape(0.05), 0.2, Pose((0.3, -0.1, TABLE_TOP + 0.05)))
    script = ScenarioScript(
        name="canonical-ball-shelf",
        seed=102,
        entities=[_table(), shelf, ball, _hand("hand", (0.3, -0.1, 1.25))],
        directives=[
            _move("hand", (0.3, -0.1, 0.835), 1.0),   # ball top + palm offset
            _wait(0.3),
            _grasp("hand", style="pinch", u=0.8),
            _wait(0.2),
            _move("hand", (0.3, -0.1, 1.25), 0.8),
            _move("hand", (-0.9, 0.0, 1.25), 1.6),
            _move("hand", (-0.9, 0.0, 1.015), 1.0),   # shelf top at 0.9
            _wait(0.3),
            _release("hand"),
            _move("hand", (-0.9, 0.0, 1.25), 0.6),
            _wait(0.3),
        ],
    )
    return Scenario("canonical-ball-shelf", PICK_PLACE, script, FULL_CHAIN)


def canonical_box_tripod() -> Scenario:
    box = EntitySpec(
        "cereal", "CerealBox", box_shape(0.05, 0.05, 0.05), 0.4, Pose((0.1, 0.2, TABLE_TOP + 0.05))
    )
    script = ScenarioScript(
        name="canonical-box-tripod",
        seed=103,
        entities=[_table(), box, _hand("hand", (0.1, 0.2, 1.2))],
        directives=[
            _move("hand", (0.1, 0.2, 0.835), 1.0),
            _wait(0.3),
            _grasp("hand", style="tripod", u=0.9),
            _wait(0.2),
            _move("hand", (0.1, 0.2, 1.1), 0.7),
            _move("hand", (-0.25, 0.15, 1.1), 1.0),
            _move("hand", (-0.25, 0.15, 0.835), 1.0),
            _wait(0.3),
            _release("hand"),
            _move("hand", (-0.25, 0.15, 1.2), 0.7),
            _wait(0.3),
        ],
    )
    return Scenario("canonical-box-tripod", PICK_PLACE, script, FULL_CHAIN)


# ---------------------------------------------------------------------------
# sliding

def slide_then_lift() -> Scenario:
    """Drag the cup across the table, then lift and place it."""
    script = ScenarioScript(
        name="slide-then-lift",
        seed=104,
        entities=[_table(), _cup("cup", 0.2, 0.0), _hand("hand", (0.2, 0.0, 1.2))],
        directives=[
            _move("hand", (0.2, 0.0, HAND_ON_CUP), 1.0),
            _wait(0.2),
            _grasp("hand"),
            _wait(0.2),
            _move("hand", (-0.1, 0.0, HAND_ON_CUP), 1.2),  # the drag
            _wait(0.2),
            _move("hand", (-0.1, 0.0, 1.1), 0.8),
            _move("hand", (-0.35, 0.0, 1.1), 0.8),
            _move("hand", (-0.35, 0.0, HAND_ON_CUP), 0.8),
            _wait(0.2),
            _release("hand"),
            _move("hand", (-0.35, 0.0, 1.2), 0.6),
            _wait(0.3),
        ],
    )
    expected = (REACHING, FIXATION, GRASPING, SLIDING, PICKING_UP, TRANSPORTING, PUTTING_DOWN)
    return Scenario("slide-then-lift", SLIDE, script, expected)


def slide_then_release() -> Scenario:
    """Drag the cup and let go while it still rests on the table."""
    script = ScenarioScript(
        name="slide-then-release",
        seed=105,
        entities=[_table(), _cup("cup", 0.2, 0.0), _hand("hand", (0.2, 0.0, 1.2))],
        directives=[
            _move("hand", (0.2, 0.0, HAND_ON_CUP), 1.0),
            _wait(0.2),
            _grasp("hand"),
            _wait(0.2),
            _move("hand", (-0.1, 0.0, HAND_ON_CUP), 1.2),
            _wait(0.3),
            _release("hand"),
            _move("hand", (-0.1, 0.0, 1.2), 0.6),
            _wait(0.3),
        ],
    )
    return Scenario(
        "slide-then-release", SLIDE, script, (REACHING, FIXATION, GRASPING, SLIDING)
    )


# ---------------------------------------------------------------------------
# interrupted approaches

def retreat_then_regrasp() -> Scenario:
    """Back off mid-approach; the reach clock restarts at the turnaround."""
    script = ScenarioScript(
        name="retreat-then-regrasp",
        seed=106,
        entities=[_table(), _cup("cup", 0.2, 0.0), _hand("hand", (0.2, 0.0, 1.25))],
        directives=[
            _move("hand", (0.2, 0.0, 1.0), 0.6),
            _move("hand", (0.2, 0.0, 1.12), 0.4),   # still inside the reach zone
            _move("hand", (0.2, 0.0, HAND_ON_CUP), 0.9),
            _wait(0.3),
            _grasp("hand"),
            _wait(0.3),
            _release("hand"),
            _move("hand", (0.2, 0.0, 1.25), 0.8),
            _wait(0.3),
        ],
    )
    return Scenario(
        "retreat-then-regrasp", RETREAT, script, (REACHING, FIXATION, GRASPING)
    )


def touch_without_grasp() -> Scenario:
    """Rest the palm on the cup and leave; a reach, nothing more."""
    script = ScenarioScript(
        name="touch-without-grasp",
        seed=107,
        entities=[_table(), _cup("cup", 0.2, 0.0), _hand("hand", (0.2, 0.0, 1.2))],
        directives=[
            _move("hand", (0.2, 0.0, HAND_ON_CUP), 1.0),
            _wait(0.4),
            _move("hand", (0.2, 0.0, 1.2), 0.8),
            _wait(0.3),
        ],
    )
    return Scenario("touch-without-grasp", RETREAT, script, (REACHING,))


# ---------------------------------------------------------------------------
# dips during the carry

def dip_inside_roi() -> Scenario:
    """Shallow dip near the goal; the put-down clock restarts after it."""
    script = ScenarioScript(
        name="dip-inside-roi",
        seed=108,
        entities=[_table(), _cup("cup", 0.2, 0.0), _hand("hand", (0.2, 0.0, 1.2))],
        directives=[
            _move("hand", (0.2, 0.0, HAND_ON_CUP), 1.0),
            _wait(0.3),
            _grasp("hand"),
            _wait(0.2),
            _move("hand", (0.2, 0.0, 1.075), 0.8),
            _move("hand", (-0.2, 0.0, 1.075), 1.2),
            _move("hand", (-0.2, 0.0, 0.915), 0.9),   # dip: cup 0.12 over the spot
            _move("hand", (-0.2, 0.0, 0.937), 0.3),   # back up a touch
            _move("hand", (-0.2, 0.0, HAND_ON_CUP), 0.5),
            _wait(0.3),
            _release("hand"),
            _move("hand", (-0.2, 0.0, 1.2), 0.8),
            _wait(0.3),
        ],
    )
    return Scenario("dip-inside-roi", DIP, script, FULL_CHAIN)


def dip_outside_roi() -> Scenario:
    """Deeper feint that exits the landing zone before the real descent."""
    script = ScenarioScript(
        name="dip-outside-roi",
        seed=109,
        entities=[_table(), _cup("cup", 0.2, 0.0), _hand("hand", (0.2, 0.0, 1.2))],
        directives=[
            _move("hand", (0.2, 0.0, HAND_ON_CUP), 1.0),
            _wait(0.3),
            _grasp("hand"),
            _wait(0.2),
            _move("hand", (0.2, 0.0, 1.075), 0.8),
            _move("hand", (-0.2, 0.0, 1.075), 1.2),
            _move("hand", (-0.2, 0.0, 0.975), 0.7),   # cup 0.18 over the spot
            _move("hand", (-0.2, 0.0, 1.0), 0.3),
            _move("hand", (-0.2, 0.0, HAND_ON_CUP), 0.7),
            _wait(0.3),
            _release("hand"),
            _move("hand", (-0.2, 0.0, 1.2), 0.8),
            _wait(0.3),
        ],
    )
    return Scenario("dip-outside-roi", DIP, script, FULL_CHAIN)


# ---------------------------------------------------------------------------
# tray rides

def _tray_scene(name, seed, lift_z, place_xy, across_dur) -> ScenarioScript:
    tray = EntitySpec(
        "tray", "Tray", box_shape(0.15, 0.25, 0.01), 0.5, Pose((0.25, 0.0, TABLE_TOP + 0.01))
    )
    cup = _cup("cup", 0.25, 0.0)
    cup.pose = Pose((0.25, 0.0, TABLE_TOP + 0.02 + 0.06))  # seated on the tray
    grip = TABLE_TOP + 0.02 + 0.015
    return ScenarioScript(
        name=name,
        seed=seed,
        entities=[_table(), tray, cup, _hand("hand", (0.25, 0.2, 1.2))],
        directives=[
            _move("hand", (0.25, 0.2, grip), 1.2),    # grip the tray rim
            _wait(0.3),
            _grasp("hand"),
            _wait(0.2),
            _move("hand", (0.25, 0.2, lift_z), 0.8),
            _move("hand", (place_xy[0], 0.2, lift_z), across_dur),
            _move("hand", (place_xy[0], 0.2, grip), 1.0),
            _wait(0.3),
            _release("hand"),
            _move("hand", (place_xy[0], 0.2, 1.2), 0.8),
            _wait(0.3),
        ],
    )


def tray_carry() -> Scenario:
    """Carry a tray with a cup riding on it; the cup stays supported."""
    script = _tray_scene("tray-carry", 110, 0.95, (-0.2, 0.2), 1.2)
    return Scenario("tray-carry", TRAY, script, FULL_CHAIN)


def tray_carry_high() -> Scenario:
    script = _tray_scene("tray-carry-high", 111, 1.05, (-0.25, 0.2), 1.4)
    return Scenario("tray-carry-high", TRAY, script, FULL_CHAIN)


# ---------------------------------------------------------------------------
# more than one thing at a time

def two_cups_one_hand() -> Scenario:
    """One palm wide enough for two cups; every phase doubles up."""
    script = ScenarioScript(
        name="two-cups-one-hand",
        seed=112,
        entities=[
            _table(),
            _cup("cup_a", 0.2, -0.05),
            _cup("cup_b", 0.2, 0.05),
            _hand("hand", (0.2, 0.0, 1.2)),
        ],
        directives=[
            _move("hand", (0.2, 0.0, HAND_ON_CUP), 1.0),
            _wait(0.3),
            _grasp("hand"),
            _wait(0.2),
            _move("hand", (0.2, 0.0, 1.1), 0.8),
            _move("hand", (-0.2, 0.0, 1.1), 1.0),
            _move("hand", (-0.2, 0.0, HAND_ON_CUP), 1.0),
            _wait(0.3),
            _release("hand"),
            _move("hand", (-0.2, 0.0, 1.2), 0.8),
            _wait(0.3),
        ],
    )
    doubled = tuple(t for t in FULL_CHAIN for _ in range(2))
    return Scenario("two-cups-one-hand", MULTI, script, doubled)


def two_hands_two_cups() -> Scenario:
    """Both hands run the canonical routine, offset by 150 ms."""

    def lane(hand, y, lag):
        seat = HAND_ON_CUP
        return [
            _move(hand, (0.25, y, seat), 1.0, at=lag),
            _grasp(hand, at=lag + 1.15),
            _move(hand, (0.25, y, 1.1), 0.8, at=lag + 1.6),
            _move(hand, (-0.25, y, 1.1), 1.0, at=lag + 2.4),
            _move(hand, (-0.25, y, seat), 1.0, at=lag + 3.4),
            _release(hand, at=lag + 4.7),
            _move(hand, (-0.25, y, 1.2), 0.8, at=lag + 5.0),
        ]

    directives = lane("left", -0.15, 0.0) + lane("right", 0.15, 0.15)
    directives.sort(key=lambda d: d.at)
    directives.append(_wait(0.3))
    script = ScenarioScript(
        name="two-hands-two-cups",
        seed=113,
        entities=[
            _table(),
            _cup("cup_l", 0.25, -0.15),
            _cup("cup_r", 0.25, 0.15),
            _hand("left", (0.25, -0.15, 1.2)),
            _hand("right", (0.25, 0.15, 1.2)),
        ],
        directives=directives,
    )
    doubled = tuple(t for t in FULL_CHAIN for _ in range(2))
    return Scenario("two-hands-two-cups", MULTI, script, doubled)


# ---------------------------------------------------------------------------
# furniture stays put

SIDE_GRIP = quat_from_axis_angle((0.0, 1.0, 0.0), math.pi / 2)  # palm faces -x


def grasp_door_handle() -> Scenario:
    """Grab a handle mounted on a door; a grasp with no motion phases."""
    door = EntitySpec(
        "fridge_door", "FridgeDoor", box_shape(0.01, 0.3, 0.5), 0.0,
        Pose((-0.45, 0.0, 1.0)), parts=("handle",),
    )
    handle = EntitySpec(
        "handle", "Handle", box_shape(0.01, 0.02, 0.1), 0.0, Pose((-0.43, 0.1, 1.0))
    )
    script = ScenarioScript(
        name="grasp-door-handle",
        seed=114,
        entities=[door, handle, _hand("hand", (-0.1, 0.1, 1.0), quat=SIDE_GRIP)],
        directives=[
            _move("hand", (-0.405, 0.1, 1.0), 1.0, quat=SIDE_GRIP),
            _wait(0.3),
            _grasp("hand"),
            _wait(0.5),
            _release("hand"),
            _move("hand", (-0.1, 0.1, 1.0), 0.8, quat=SIDE_GRIP),
            _wait(0.3),
        ],
    )
    return Scenario(
        "grasp-door-handle", STATIC, script, (REACHING, FIXATION, GRASPING)
    )


def grasp_table_edge() -> Scenario:
    """Clamp the table edge. Too big to approach its center: bare grasp."""
    script = ScenarioScript(
        name="grasp-table-edge",
        seed=115,
        entities=[_table(), _hand("hand", (0.5, 0.0, 1.1))],
        directives=[
            _move("hand", (0.5, 0.0, TABLE_TOP + 0.015), 1.0),
            _wait(0.3),
            _grasp("hand"),
            _wait(0.4),
            _release("hand"),
            _move("hand", (0.5, 0.0, 1.1), 0.8),
            _wait(0.3),
        ],
    )
    return Scenario("grasp-table-edge", STATIC, script, (GRASPING,))


# ---------------------------------------------------------------------------
# letting go at height

def release_mid_transport() -> Scenario:
    """Open the hand during the carry; the cup drops, no put-down."""
    script = ScenarioScript(
        name="release-mid-transport",
        seed=116,
        entities=[_table(), _cup("cup", 0.2, 0.0), _hand("hand", (0.2, 0.0, 1.2))],
        directives=[
            _move("hand", (0.2, 0.0, HAND_ON_CUP), 1.0),
            _wait(0.3),
            _grasp("hand"),
            _wait(0.2),
            _move("hand", (0.2, 0.0, 1.15), 0.8),
            _move("hand", (-0.15, 0.0, 1.15), 1.0),
            _wait(0.2),
            _release("hand"),
            _wait(0.6),
        ],
    )
    expected = (REACHING, FIXATION, GRASPING, PICKING_UP, TRANSPORTING)
    return Scenario("release-mid-transport", MIDAIR, script, expected)


def release_mid_lift() -> Scenario:
    """Open the hand barely off the table, still inside the lift zone."""
    script = ScenarioScript(
        name="release-mid-lift",
        seed=117,
        entities=[_table(), _cup("cup", 0.2, 0.0), _hand("hand", (0.2, 0.0, 1.2))],
        directives=[
            _move("hand", (0.2, 0.0, HAND_ON_CUP), 1.0),
            _wait(0.3),
            _grasp("hand"),
            _wait(0.2),
            _move("hand", (0.2, 0.0, 0.95), 0.5),   # cup rises under 0.15
            _wait(0.2),
            _release("hand"),
            _wait(0.6),
        ],
    )
    return Scenario(
        "release-mid-lift", MIDAIR, script,
        (REACHING, FIXATION, GRASPING, PICKING_UP),
    )


# ---------------------------------------------------------------------------
# oddballs that earn their keep

def reseat_during_lift() -> Scenario:
    """Set the cup back down mid-lift; only the second lift counts."""
    script = ScenarioScript(
        name="reseat-during-lift",
        seed=118,
        entities=[_table(), _cup("cup", 0.2, 0.0), _hand("hand", (0.2, 0.0, 1.2))],
        directives=[
            _move("hand", (0.2, 0.0, HAND_ON_CUP), 1.0),
            _wait(0.3),
            _grasp("hand"),
            _wait(0.2),
            _move("hand", (0.2, 0.0, 0.93), 0.5),    # up 75 mm, under the exit radius
            _wait(0.2),
            _move("hand", (0.2, 0.0, HAND_ON_CUP), 0.5),
            _wait(0.4),                               # settle so support re-forms
            _move("hand", (0.2, 0.0, 1.1), 0.8),
            _move("hand", (-0.2, 0.0, 1.1), 1.0),
            _move("hand", (-0.2, 0.0, HAND_ON_CUP), 1.0),
            _wait(0.3),
            _release("hand"),
            _move("hand", (-0.2, 0.0, 1.2), 0.8),
            _wait(0.3),
        ],
    )
    return Scenario("reseat-during-lift", PICK_PLACE, script, FULL_CHAIN)


def hold_until_asleep() -> Scenario:
    """Hold the cup dead still mid-carry until everything nods off."""
    script = ScenarioScript(
        name="hold-until-asleep",
        seed=119,
        entities=[_table(), _cup("cup", 0.2, 0.0), _hand("hand", (0.2, 0.0, 1.2))],
        directives=[
            _move("hand", (0.2, 0.0, HAND_ON_CUP), 1.0),
            _wait(0.3),
            _grasp("hand"),
            _wait(0.2),
            _move("hand", (0.2, 0.0, 1.05), 0.7),
            _wait(1.5),                               # long enough to sleep
            _move("hand", (-0.2, 0.0, 1.05), 1.0),
            _move("hand", (-0.2, 0.0, HAND_ON_CUP), 0.9),
            _wait(0.3),
            _release("hand"),
            _move("hand", (-0.2, 0.0, 1.2), 0.8),
            _wait(0.3),
        ],
    )
    return Scenario("hold-until-asleep", PICK_PLACE, script, FULL_CHAIN)


def wave_above_everything() -> Scenario:
    """The hand tours the room without nearing anything: silence."""
    script = ScenarioScript(
        name="wave-above-everything",
        seed=120,
        entities=[_table(), _cup("cup", 0.2, 0.0), _hand("hand", (0.0, 0.0, 1.3))],
        directives=[
            _move("hand", (0.3, 0.2, 1.3), 0.8),
            _move("hand", (-0.3, -0.2, 1.3), 1.2),
            _move("hand", (0.0, 0.0, 1.3), 0.8),
            _wait(0.4),
        ],
    )
    return Scenario("wave-above-everything", RETREAT, script, ())


def acceptance_scenarios() -> list[Scenario]:
    """The full battery, one entry per factory above."""
    return [
        canonical_cup(),
        canonical_ball_to_shelf(),
        canonical_box_tripod(),
        slide_then_lift(),
        slide_then_release(),
        retreat_then_regrasp(),
        touch_without_grasp(),
        dip_inside_roi(),
        dip_outside_roi(),
        tray_carry(),
        tray_carry_high(),
        two_cups_one_hand(),
        two_hands_two_cups(),
        grasp_door_handle(),
        grasp_table_edge(),
        release_mid_transport(),
        release_mid_lift(),
        reseat_during_lift(),
        hold_until_asleep(),
        wave_above_everything(),
    ]


# ---------------------------------------------------------------------------
# randomized sessions

FUZZ_RATE = 30.0


def fuzz_params() -> SimParams:
    """Gains retuned for the coarser fuzz step; critically damped still."""
    return SimParams(frame_rate=FUZZ_RATE, hand_kp=100.0, hand_kd=20.0)


def _free_spot(rng: random.Random, taken: list[tuple[float, float]]) -> tuple[float, float]:
    for _ in range(200):
        x = rng.uniform(-0.32, 0.32)
        y = rng.uniform(-0.32, 0.32)
        if all((x - tx) ** 2 + (y - ty) ** 2 >= 0.2 ** 2 for tx, ty in taken):
            return x, y
    raise RuntimeError("table too crowded")  # pragma: no cover


def fuzz_script(index: int) -> ScenarioScript:
    """A randomized session; deterministic in `index`.

    One hand works one to three objects: approach, grasp, then drag,
    carry-and-place, or drop from height. Targets overshoot surfaces by
    a few millimetres so approach speeds stay brisk at 30 Hz.
    """
    rng = random.Random(0x5EED ^ (index * 2654435761))
    taken: list[tuple[float, float]] = []
    objs = []
    for i in range(rng.randint(1, 3)):
        x, y = _free_spot(rng, taken)
        taken.append((x, y))
        kind = rng.choice(("cup", "ball", "box"))
        if kind == "cup":
            r, hh = rng.uniform(0.035, 0.05), rng.uniform(0.05, 0.07)
            shape, top = cylinder_shape(r, hh), TABLE_TOP + 2 * hh
            tag, z = "Cup", TABLE_TOP + hh
        elif kind == "ball":
            r = rng.uniform(0.04, 0.06)
            shape, top = sphere_shape(r), TABLE_TOP + 2 * r
            tag, z = "Ball", TABLE_TOP + r
        else:
            h = rng.uniform(0.04, 0.06)
            shape, top = box_shape(h, h, h), TABLE_TOP + 2 * h
            tag, z = "CerealBox", TABLE_TOP + h
        objs.append((f"obj{i}", tag, shape, z, top, x, y))

    entities = [_table()]
    for name, tag, shape, z, _top, x, y in objs:
        entities.append(EntitySpec(name, tag, shape, rng.uniform(0.2, 0.6), Pose((x, y, z))))
    hand_start = (objs[0][5], objs[0][6], 1.15)
    entities.append(_hand("hand", hand_start))

    spots = {name: (x, y) for name, _t, _s, _z, _top, x, y in objs}
    tops = {name: top for name, _t, _s, _z, top, _x, _y in objs}

    directives: list[Directive] = []
    pos = hand_start

    def goto(x, y, z):
        nonlocal pos
        dist = math.dist(pos, (x, y, z))
        directives.append(_move("hand", (x, y, z), max(0.4, dist / rng.uniform(0.3, 0.5))))
        pos = (x, y, z)

    hover = 1.15
    for name in rng.sample([o[0] for o in objs], rng.randint(1, len(objs))):
        x, y = spots[name]
        grip = tops[name] + 0.015 - 0.003   # 3 mm of deliberate press
        goto(x, y, hover)
        goto(x, y, grip)
        directives.append(_wait(0.3))
        directives.append(_grasp("hand", style=rng.choice(("wrap", "pinch")), u=rng.uniform(0.5, 1.0)))
        directives.append(_wait(0.2))
        plan = rng.choice(("place", "place", "drop", "drag"))
        if plan == "drag":
            nx, ny = _free_spot(rng, [s for n, s in spots.items() if n != name])
            goto(nx, ny, grip)
            directives.append(_wait(0.2))
        elif plan == "drop":
            goto(x, y, rng.uniform(0.95, 1.1))
            nx, ny = x, y
        else:
            lift = rng.uniform(0.95, 1.1)
            goto(x, y, lift)
            nx, ny = _free_spot(rng, [s for n, s in spots.items() if n != name])
            goto(nx, ny, lift)
            goto(nx, ny, grip)
            directives.append(_wait(0.2))
        directives.append(_release("hand"))
        directives.append(_wait(0.3))
        spots[name] = (nx, ny)
        goto(pos[0], pos[1], hover)
    directives.append(_wait(0.4))

    return ScenarioScript(
        name=f"fuzz-{index:04d}",
        seed=900000 + index,
        frame_rate=FUZZ_RATE,
        entities=entities,
        directives=directives,
    )
