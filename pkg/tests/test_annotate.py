"""Offline annotator versus online monitors.

The two derivations share thresholds but nothing else, so agreement on
the scripted scenes is a real cross-check, not a tautology.
"""
import pytest

from actmem.annotate import annotate
from actmem.config import Thresholds
from actmem.scenarios import acceptance_scenarios

TH = Thresholds()

SCENARIOS = acceptance_scenarios()


def _keyed(events):
    out = {}
    for ev in events:
        key = (ev.type, tuple(sorted(ev.participants.items())))
        out.setdefault(key, []).append(ev.interval)
    for spans in out.values():
        spans.sort(key=lambda iv: iv.start)
    return out


@pytest.mark.parametrize("scn", SCENARIOS, ids=lambda s: s.name)
def test_annotator_agrees_with_monitors(sims, scn):
    res, monitor_events, _task = sims.run(scn)
    offline = annotate(res.header, res.frames)

    assert all(ev.source == "script" for ev in offline)
    assert all(ev.source == "monitor" for ev in monitor_events)

    got = _keyed(monitor_events)
    want = _keyed(offline)
    assert set(got) == set(want), scn.name

    period = 1.0 / res.header.frame_rate
    slack = 2 * period + 1e-9
    for key, spans in want.items():
        theirs = got[key]
        assert len(theirs) == len(spans), (scn.name, key)
        for a, b in zip(theirs, spans):
            assert abs(a.start - b.start) <= slack, (scn.name, key, a, b)
            assert abs(a.end - b.end) <= slack, (scn.name, key, a, b)


@pytest.mark.parametrize("scn", SCENARIOS[:3], ids=lambda s: s.name)
def test_annotator_is_deterministic(sims, scn):
    res, _events, _task = sims.run(scn)
    a = annotate(res.header, res.frames)
    b = annotate(res.header, res.frames)
    assert a == b
    assert [e.id for e in a] == [e.id for e in b]


def test_annotator_empty_trace(sims):
    from actmem.scenarios import canonical_cup

    res, _events, _task = sims.run(canonical_cup())
    assert annotate(res.header, []) == []
