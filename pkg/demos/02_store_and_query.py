"""Persist an episode, reopen it, and ask questions with variable bindings.

Run:  python3 demos/02_store_and_query.py
"""
import tempfile

from actmem import (
    EntityConstraint,
    MemoryStore,
    MonitorPipeline,
    QueryPattern,
    find_actions,
    occurs,
    simulate,
    trajectory,
)
from actmem.scenarios import canonical_cup

scn = canonical_cup()
res = simulate(scn.script)

with tempfile.TemporaryDirectory() as root:
    store = MemoryStore(root)
    task = store.create_task(res.header.task, list(res.header.entities))
    writer = store.new_episode(task.id)
    pipeline = MonitorPipeline(res.header)
    for frame in res.frames:
        pipeline.step(frame)
        writer.append_frame(frame)
    for ev in sorted(pipeline.events() + pipeline.finish(), key=lambda e: e.sort_key()):
        writer.store_event(ev)
    writer.seal()
    print(f"sealed episode {writer.id} with {writer.frame_count} frames")

    # reopen cold, as a separate process would
    task = store.task(task.id)
    reader = store.episode(task.episodes[0])
    events = reader.events()
    names = {d.id: d.name for d in task.descriptors.values()}

    # which vessel did any motion phase act on?
    pattern = QueryPattern(
        action_type="MotionPhase",
        participants={"object": EntityConstraint(cls="Vessel", bind="what")},
    )
    for ev, bind in find_actions(task, events, pattern):
        print(f"{ev.type:13s} on {names[bind['what']]}  "
              f"[{ev.interval.start:.3f}, {ev.interval.end:.3f}]")

    # where was the cup while it was being transported?
    carry = next(ev for ev, _ in find_actions(task, events, QueryPattern(action_type="Transporting")))
    samples = trajectory(task, reader, carry.participants["object"], occurs(events, carry.id))
    first, last = samples[0], samples[-1]
    print(f"\ntransport trajectory: {len(samples)} samples")
    print(f"  from ({first[1].position[0]:+.3f}, {first[1].position[2]:.3f})"
          f" to ({last[1].position[0]:+.3f}, {last[1].position[2]:.3f})  (x, z)")
