"""Command-line surface: simulate scenarios, parse traces into the store,
run queries, export trajectories.

Exit codes are a scripting contract: 0 success, 1 validation problem,
2 stream or store problem. Diagnostics go to stderr as one JSON object
per error so callers can parse them.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .config import Thresholds, load_thresholds
from .entities import EntityId
from .errors import ActmemError, NotFoundError, ValidationError
from .events import event_record
from .intervals import Interval
from .monitors import MonitorPipeline
from .query import (
    QueryPattern,
    compose,
    find_actions,
    load_rule,
    pattern_from_dict,
    trajectory,
)
from .scenario import load_script
from .simulate import simulate
from .store import EpisodeReader, MemoryStore, TaskRecord
from .traceio import TraceReader, write_events, write_trace
from .annotate import annotate

log = logging.getLogger("actmem")

STORE_ENV = "ACTMEM_STORE"
DEFAULT_STORE = "./actmem-store"


@dataclass
class CliConfig:
    store: Path
    thresholds: Thresholds
    seed: int | None
    format: str
    verbosity: int


def _config_from_args(args) -> CliConfig:
    store = Path(args.store or os.environ.get(STORE_ENV) or DEFAULT_STORE)
    th = Thresholds()
    if args.config:
        if not Path(args.config).is_file():
            raise ValidationError(f"config file not found: {args.config}")
        th = load_thresholds(args.config)
    return CliConfig(
        store=store,
        thresholds=th,
        seed=args.seed,
        format=getattr(args, "format", "ndjson"),
        verbosity=args.verbose,
    )


# ---------------------------------------------------------------------------
# simulate

def _sidecar_path(out: str) -> str:
    p = Path(out)
    if p.suffix == ".ndjson":
        return str(p.with_suffix("")) + ".truth.ndjson"
    return out + ".truth.ndjson"


def cmd_simulate(cfg: CliConfig, args) -> int:
    script = load_script(args.scenario)
    res = simulate(script, thresholds=cfg.thresholds, seed=cfg.seed)
    n = write_trace(args.out, res.header, res.frames)
    truth = annotate(res.header, res.frames, cfg.thresholds)
    sidecar = _sidecar_path(args.out)
    write_events(sidecar, truth)
    dur = res.frames[-1].t - res.frames[0].t if res.frames else 0.0
    print(f"{n} frames, {dur:.3f} s -> {args.out}")
    print(f"{len(truth)} ground-truth events -> {sidecar}")
    return 0


# ---------------------------------------------------------------------------
# parse

def cmd_parse(cfg: CliConfig, args) -> int:
    store = MemoryStore(cfg.store)
    with TraceReader(args.trace) as reader:
        header = reader.header
        task_name = args.task or header.task
        task = store.get_or_create_task(task_name, list(header.entities))
        writer = store.new_episode(task.id)
        pipeline = MonitorPipeline(header, cfg.thresholds)
        try:
            for frame in reader:
                pipeline.step(frame)
                writer.append_frame(frame)
            events = list(pipeline.closed)
            events += pipeline.finish()
            for ev in sorted(events, key=lambda e: e.sort_key()):
                writer.store_event(ev)
            writer.seal()
        except ActmemError:
            writer.abandon()
            raise
    counts: dict[str, int] = {}
    for ev in events:
        counts[ev.type] = counts.get(ev.type, 0) + 1
    print(f"episode {writer.id}")
    print(f"task {task.id} ({task.name})")
    print(f"{writer.frame_count} frames, {len(events)} events")
    for etype in sorted(counts):
        print(f"  {counts[etype]:4d} {etype}")
    return 0


# ---------------------------------------------------------------------------
# query

def _resolve_entity(task: TaskRecord, ref: str) -> EntityId:
    """Accept a raw entity id or a unique entity name."""
    if ref in task.descriptors:
        return ref
    hits = [d.id for d in task.descriptors.values() if d.name == ref]
    if len(hits) == 1:
        return hits[0]
    if not hits:
        raise NotFoundError(f"task {task.name!r} has no entity {ref!r}")
    raise ValidationError(f"entity name {ref!r} is ambiguous in task {task.name!r}")


def _resolve_pattern_ids(task: TaskRecord, pattern: QueryPattern) -> QueryPattern:
    from dataclasses import replace

    parts = {}
    for role, c in pattern.participants.items():
        if c.id is not None:
            c = replace(c, id=_resolve_entity(task, c.id))
        if c.part_of is not None and c.part_of[0] == "id":
            c = replace(c, part_of=("id", _resolve_entity(task, c.part_of[1])))
        parts[role] = c
    pattern.participants = parts
    pattern.sub_actions = [
        (_resolve_pattern_ids(task, sub), rels) for sub, rels in pattern.sub_actions
    ]
    return pattern


def _episode_for(store: MemoryStore, task: TaskRecord, sel) -> EpisodeReader:
    if sel is None:
        sel = 0
    if isinstance(sel, int):
        if not (0 <= sel < len(task.episodes)):
            raise NotFoundError(f"task {task.name!r} has no episode {sel}")
        return store.episode(task.episodes[sel])
    return store.episode(sel)


def _names(task: TaskRecord, eid: EntityId) -> dict:
    d = task.descriptors.get(eid)
    return {"id": eid, "name": d.name if d else None}


def _trajectory_payload(task, reader, ev) -> dict:
    out = {}
    for role, eid in sorted(ev.participants.items()):
        if eid not in task.descriptors:
            continue
        samples = trajectory(task, reader, eid, ev.interval)
        out[role] = {
            "entity": _names(task, eid),
            "samples": [
                [t] + list(p.position) + list(p.orientation) for t, p in samples
            ],
        }
    return out


def _run_query_doc(cfg: CliConfig, store: MemoryStore, doc: dict, idx: int, with_traj: bool):
    where = f"query[{idx}]"
    if not isinstance(doc, dict):
        raise ValidationError(f"{where}: query document must be a mapping")
    unknown = set(doc) - {"task", "episode", "find", "rule"}
    if unknown:
        raise ValidationError(f"{where}: unknown keys {sorted(unknown)}")
    task_ref = doc.get("task")
    if not task_ref:
        raise ValidationError(f"{where}: query needs a task")
    task = store.task(task_ref) if (store.root / str(task_ref) / "task.json").is_file() \
        else store.task_by_name(task_ref)
    reader = _episode_for(store, task, doc.get("episode"))
    events = reader.events()
    results = []
    if "rule" in doc:
        rule = load_rule(doc["rule"])
        for ev in compose(task, events, rule, tol=cfg.thresholds.delta_t):
            results.append((ev, {}))
    elif "find" in doc:
        pattern = _resolve_pattern_ids(task, pattern_from_dict(doc["find"], where))
        results = find_actions(task, events, pattern, tol=cfg.thresholds.delta_t)
    else:
        raise ValidationError(f"{where}: query needs 'find' or 'rule'")
    for ev, bindings in results:
        rec = {
            "query": idx,
            "event": event_record(ev),
            "bindings": {k: _names(task, v) for k, v in sorted(bindings.items())},
        }
        if with_traj:
            rec["trajectory"] = _trajectory_payload(task, reader, ev)
        print(json.dumps(rec, separators=(",", ":"), sort_keys=True))


def cmd_query(cfg: CliConfig, args) -> int:
    if not cfg.store.is_dir():
        raise NotFoundError(f"store not found: {cfg.store}")
    store = MemoryStore(cfg.store)
    fh = sys.stdin if args.queries == "-" else open(args.queries, encoding="utf-8")
    try:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"query[{i}]: bad JSON: {exc}") from exc
            _run_query_doc(cfg, store, doc, i, args.trajectory)
    finally:
        if fh is not sys.stdin:
            fh.close()
    return 0


# ---------------------------------------------------------------------------
# export

_CSV_HEADER = "t,x,y,z,qw,qx,qy,qz"


def cmd_export(cfg: CliConfig, args) -> int:
    if not cfg.store.is_dir():
        raise NotFoundError(f"store not found: {cfg.store}")
    store = MemoryStore(cfg.store)
    task, _edir = store.find_episode(args.episode)
    reader = store.episode(args.episode)
    entity = _resolve_entity(task, args.entity)
    full = reader.time_range()
    interval = Interval(
        full.start if args.start is None else args.start,
        full.end if args.end is None else args.end,
    )
    samples = trajectory(task, reader, entity, interval)
    out = sys.stdout if args.out == "-" else open(args.out, "w", encoding="utf-8")
    try:
        if cfg.format == "csv":
            print(_CSV_HEADER, file=out)
            for t, p in samples:
                row = [t, *p.position, *p.orientation]
                print(",".join(repr(v) for v in row), file=out)
        else:
            for t, p in samples:
                rec = {"t": t, "pose": list(p.position) + list(p.orientation)}
                print(json.dumps(rec, separators=(",", ":")), file=out)
    finally:
        if out is not sys.stdout:
            out.close()
    if out is not sys.stdout:
        log.info("%d samples -> %s", len(samples), args.out)
    return 0


# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="actmem",
        description="Detect, store, and query manipulation events from world-state traces.",
    )
    ap.add_argument("--store", help=f"store directory (default ${STORE_ENV} or {DEFAULT_STORE})")
    ap.add_argument("--config", help="thresholds YAML file")
    ap.add_argument("--seed", type=int, default=None, help="override scenario seed")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario script to a trace + ground-truth sidecar")
    sim.add_argument("scenario", help="scenario script (YAML)")
    sim.add_argument("out", help="output trace path (NDJSON)")
    sim.set_defaults(fn=cmd_simulate)

    par = sub.add_parser("parse", help="parse a trace into a new sealed episode")
    par.add_argument("trace", help="trace path (NDJSON)")
    par.add_argument("--task", help="task name (default: the trace header's)")
    par.set_defaults(fn=cmd_parse)

    qry = sub.add_parser("query", help="answer NDJSON query documents against the store")
    qry.add_argument("queries", help="query document file, or - for stdin")
    qry.add_argument("--trajectory", action="store_true",
                     help="attach per-participant trajectory samples to each match")
    qry.set_defaults(fn=cmd_query)

    exp = sub.add_parser("export", help="dump an entity's trajectory for plotting")
    exp.add_argument("episode", help="episode id")
    exp.add_argument("entity", help="entity id or unique name")
    exp.add_argument("out", help="output path, or - for stdout")
    exp.add_argument("--start", type=float, default=None)
    exp.add_argument("--end", type=float, default=None)
    exp.add_argument("--format", choices=("ndjson", "csv"), default="ndjson")
    exp.set_defaults(fn=cmd_export)
    return ap


def _fail(exc: Exception, code: int) -> int:
    diag = {"error": type(exc).__name__, "detail": str(exc)}
    print(json.dumps(diag, sort_keys=True), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config_from_args(args)
        return args.fn(cfg, args)
    except ValidationError as exc:
        return _fail(exc, 1)
    except ActmemError as exc:
        return _fail(exc, 2)
    except OSError as exc:
        return _fail(exc, 2)


if __name__ == "__main__":
    sys.exit(main())
