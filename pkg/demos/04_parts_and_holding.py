"""Part-whole queries and weight-dependent grasp classification.

Run:  python3 demos/04_parts_and_holding.py
"""
from actmem import (
    EntityConstraint,
    QueryPattern,
    TaskRecord,
    find_actions,
    infer_holding,
    parse_stream,
    simulate,
    task_id_for,
)
from actmem.scenarios import canonical_cup, grasp_door_handle


def parse(scn):
    res = simulate(scn.script)
    events = parse_stream(res.header, res.frames).events()
    task = TaskRecord(
        id=task_id_for(res.header.task),
        name=res.header.task,
        descriptors={d.id: d for d in res.header.entities},
        classes=list(scn.script.classes),
        episodes=[],
    )
    return task, events


task, events = parse(grasp_door_handle())
names = {d.id: d.name for d in task.descriptors.values()}

# "what got grasped that belongs to the fridge door?" -- the handle is a
# part of the door, so constraining on the whole finds grasps of the part
door = next(d.id for d in task.descriptors.values() if d.name == "fridge_door")
pattern = QueryPattern(
    action_type="Grasping",
    participants={"object": EntityConstraint(part_of=("id", door), bind="what")},
)
for ev, bind in find_actions(task, events, pattern):
    print(f"grasped {names[bind['what']]} (a part of {names[door]}) "
          f"over [{ev.interval.start:.3f}, {ev.interval.end:.3f}]")

# the same grasp reads differently depending on how strong the hand is:
# an object heavier than the hand manages becomes a hold, not a grasp
task, events = parse(canonical_cup())
names = {d.id: d.name for d in task.descriptors.values()}
cup = next(d for d in task.descriptors.values() if d.name == "cup")
print(f"\nthe cup weighs {cup.mass:g} kg")
for strength in (5.0, 0.1):
    derived = infer_holding(task, events, hand_strength=strength)
    kinds = ", ".join(f"{d.type}({names[d.participants['object']]})" for d in derived)
    print(f"hand strength {strength:g} kg -> {kinds}")
