"""Ids, the class hierarchy, and descriptor-set validation."""
import uuid

import pytest

from actmem.entities import (
    APP_NAMESPACE,
    ClassTag,
    EntityDescriptor,
    IdMinter,
    Taxonomy,
    base_taxonomy,
    derive_id,
    validate_descriptor_set,
)
from actmem.errors import ValidationError
from actmem.geometry import box_shape


def test_seeded_minting_deterministic():
    a = IdMinter(seed=7)
    b = IdMinter(seed=7)
    assert a.mint("task:x/cup") == b.mint("task:x/cup")
    assert a.mint("task:x/cup") != a.mint("task:x/plate")


def test_unseeded_minting_random():
    a = IdMinter()
    ids = {a.mint("cup") for _ in range(8)}
    assert len(ids) == 8
    for i in ids:
        assert uuid.UUID(i).version == 4


def test_derive_id_stable_chain():
    root = str(uuid.uuid5(APP_NAMESPACE, "task:t"))
    assert derive_id(root, "episode:0") == derive_id(root, "episode:0")
    assert derive_id(root, "episode:0") != derive_id(root, "episode:1")


def test_is_a_reflexive_and_transitive():
    tx = base_taxonomy()
    for name in tx.names():
        assert tx.is_a(name, name)
    assert tx.is_a("Cup", "Vessel")
    assert tx.is_a("Cup", "PhysicalArtifact")
    assert not tx.is_a("Vessel", "Cup")
    assert tx.is_a("PuttingDown", "MotionPhase")
    assert tx.is_a("PickAndPlace", "CompositeAction")


def test_unknown_tag_rejected_with_known_list():
    tx = base_taxonomy()
    with pytest.raises(ValidationError, match="known tags"):
        tx.require("Zeppelin")


def test_cycle_detected():
    tx = Taxonomy()
    tx.add(ClassTag("A", ("B",)))
    tx.add(ClassTag("B", ("A",)))
    with pytest.raises(ValidationError):
        tx.validate()


def _d(eid, parts=(), mass=1.0):
    return EntityDescriptor(
        id=eid, name=eid, class_tag="Entity", shape=box_shape(0.1, 0.1, 0.1),
        mass=mass, parts=tuple(parts), is_static=(mass == 0),
    )


def test_descriptor_set_ok():
    validate_descriptor_set([_d("a"), _d("b", parts=("a",))])


def test_partonomy_cycle_rejected():
    with pytest.raises(ValidationError):
        validate_descriptor_set([_d("a", parts=("b",)), _d("b", parts=("a",))])


def test_dangling_part_rejected():
    with pytest.raises(ValidationError):
        validate_descriptor_set([_d("a", parts=("ghost",))])


def test_duplicate_ids_rejected():
    with pytest.raises(ValidationError):
        validate_descriptor_set([_d("a"), _d("a")])


def test_static_mass_consistency():
    with pytest.raises(ValidationError):
        EntityDescriptor(
            id="x", name="x", class_tag="Entity",
            shape=box_shape(0.1, 0.1, 0.1), mass=0.0, parts=(), is_static=False,
        )
    with pytest.raises(ValidationError):
        EntityDescriptor(
            id="x", name="x", class_tag="Entity",
            shape=box_shape(0.1, 0.1, 0.1), mass=2.0, parts=(), is_static=True,
        )
