"""Shared fixtures. Simulations are cached per session since several
modules interrogate the same scripted scenes."""
import pytest

from actmem.monitors import parse_stream
from actmem.simulate import simulate
from actmem.store import TaskRecord, task_id_for


def task_record_for(res, classes=()):
    """An in-memory task wrapping a simulation's entity set."""
    return TaskRecord(
        id=task_id_for(res.header.task),
        name=res.header.task,
        descriptors={d.id: d for d in res.header.entities},
        classes=list(classes),
        episodes=[],
    )


class _SimCache:
    def __init__(self):
        self._runs = {}

    def run(self, scenario):
        if scenario.name not in self._runs:
            res = simulate(scenario.script)
            events = parse_stream(res.header, res.frames).events()
            task = task_record_for(res, scenario.script.classes)
            self._runs[scenario.name] = (res, events, task)
        return self._runs[scenario.name]


@pytest.fixture(scope="session")
def sims():
    return _SimCache()


@pytest.fixture(scope="session")
def canonical(sims):
    from actmem.scenarios import canonical_cup

    return sims.run(canonical_cup())


@pytest.fixture(scope="session")
def canonical_sim(canonical):
    res, _events, _task = canonical
    return res


@pytest.fixture
def canonical_events(canonical):
    _res, events, _task = canonical
    return list(events)


@pytest.fixture
def canonical_task(canonical):
    _res, _events, task = canonical
    return task
