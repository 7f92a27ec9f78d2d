"""Frame snapshot model: contact canonicalization, hand state, validation."""
import pytest

from actmem.errors import ValidationError
from actmem.frames import ContactRecord, Frame, Gaze, HandState, make_contact, validate_frame
from actmem.geometry import Pose


def test_make_contact_canonical_order():
    c = make_contact("zebra", "apple", (0.0, 0.0, 1.0), (0.0, 0.0, 0.5))
    assert c.pair == ("apple", "zebra")
    # normal flips with the swap so it still points from b toward a
    assert c.normal == (0.0, 0.0, -1.0)


def test_contact_normal_on_each_side():
    c = make_contact("a", "b", (0.0, 0.0, 1.0), (0.0, 0.0, 0.0))
    assert c.normal_on("a") == (0.0, 0.0, 1.0)
    assert c.normal_on("b") == (0.0, 0.0, -1.0)
    with pytest.raises(ValidationError):
        c.normal_on("c")
    assert c.other("a") == "b"


def test_self_contact_rejected():
    with pytest.raises(ValidationError, match="self-contact"):
        ContactRecord("x", "x", (0.0, 0.0, 1.0), (0.0, 0.0, 0.0))


def test_non_unit_normal_rejected():
    with pytest.raises(ValidationError, match="unit"):
        ContactRecord("a", "b", (0.0, 0.0, 2.0), (0.0, 0.0, 0.0))


def test_hand_state_clamps_grasp_input():
    assert HandState("h", grasp_input=1.7).grasp_input == 1.0
    assert HandState("h", grasp_input=-0.2).grasp_input == 0.0
    with pytest.raises(ValidationError):
        HandState("h", grasp_style="karate")


def test_hand_sensor_lookups():
    h = HandState(
        "h",
        sensor_contacts={"thumb": frozenset({"cup"}), "palm": frozenset({"cup", "lid"})},
    )
    assert h.sets_touching("cup") == frozenset({"thumb", "palm"})
    assert h.sets_touching("ball") == frozenset()
    assert h.touched_objects() == {"cup", "lid"}


def test_gaze_direction_must_be_unit():
    with pytest.raises(ValidationError):
        Gaze((0.0, 0.0, 1.6), (0.0, 2.0, 0.0))


def _pose() -> Pose:
    return Pose((0.0, 0.0, 0.0), (1.0, 0.0, 0.0, 0.0))


def test_frame_contact_between_accepts_either_order():
    c = make_contact("a", "b", (0.0, 0.0, 1.0), (0.0, 0.0, 0.0))
    f = Frame(t=0.0, poses={"a": _pose(), "b": _pose()}, twists={}, contacts=[c])
    assert f.contact_between("b", "a") is c
    assert f.contact_between("a", "c") is None


def test_non_finite_time_rejected():
    with pytest.raises(ValidationError):
        Frame(t=float("nan"), poses={}, twists={})


@pytest.mark.parametrize(
    "mutate",
    [
        lambda f: f.poses.update({"ghost": _pose()}),
        lambda f: f.contacts.append(
            make_contact("a", "ghost", (0.0, 0.0, 1.0), (0.0, 0.0, 0.0))
        ),
        lambda f: f.hands.append(
            HandState("h", sensor_contacts={"palm": frozenset({"ghost"})})
        ),
        lambda f: setattr(f, "sleeping", frozenset({"ghost"})),
    ],
)
def test_validate_frame_flags_unknown_entities(mutate):
    f = Frame(
        t=0.0,
        poses={"a": _pose()},
        twists={},
        hands=[HandState("h")],
    )
    known = {"a", "b", "h"}
    validate_frame(f, known)
    mutate(f)
    with pytest.raises(ValidationError, match="ghost"):
        validate_frame(f, known)
