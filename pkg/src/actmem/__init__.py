"""Force-dynamic activity segmentation over world-state traces.

The pipeline in one breath: a scenario script is simulated (or a trace
is replayed) into per-frame world states; online monitors detect
contact, support, grasping, and the pick-and-place motion phases as
interval events; an episodic store persists frames and events per task;
the query layer finds events by type, participants, and part-whole
structure, and composes them into higher-level actions with Allen
interval constraints.
"""
from .config import SimParams, Thresholds, load_thresholds
from .entities import (
    APP_NAMESPACE,
    ClassTag,
    EntityDescriptor,
    EntityId,
    IdMinter,
    Taxonomy,
    base_taxonomy,
    derive_id,
)
from .errors import (
    ActmemError,
    ConflictError,
    NotFoundError,
    ProvisionalDataWarning,
    StateError,
    StreamError,
    ValidationError,
)
from .events import Event, event_from_record, event_record
from .frames import ContactRecord, Frame, Gaze, HandState, Twist
from .geometry import Pose, Shape, box_shape, cylinder_shape, ray_intersect, sphere_shape
from .intervals import AllenRelation, Interval, allen_relation
from .monitors import MonitorPipeline, parse_stream
from .annotate import annotate
from .query import (
    CompositionRule,
    EntityConstraint,
    QueryPattern,
    RuleStep,
    compose,
    find_actions,
    gaze_target,
    infer_holding,
    load_rule,
    occurs,
    pattern_from_dict,
    rule_from_dict,
    trajectory,
)
from .scenario import ScenarioScript, load_script, save_script
from .simulate import SimResult, simulate
from .store import EpisodeReader, EpisodeWriter, MemoryStore, TaskRecord, task_id_for
from .traceio import TraceHeader, TraceReader, load_trace, read_events, write_events, write_trace

__version__ = "0.1.0"

__all__ = [
    "APP_NAMESPACE",
    "ActmemError",
    "AllenRelation",
    "ClassTag",
    "CompositionRule",
    "ConflictError",
    "ContactRecord",
    "EntityConstraint",
    "EntityDescriptor",
    "EntityId",
    "EpisodeReader",
    "EpisodeWriter",
    "Event",
    "Frame",
    "Gaze",
    "HandState",
    "IdMinter",
    "Interval",
    "MemoryStore",
    "MonitorPipeline",
    "NotFoundError",
    "Pose",
    "ProvisionalDataWarning",
    "QueryPattern",
    "RuleStep",
    "ScenarioScript",
    "Shape",
    "SimParams",
    "SimResult",
    "StateError",
    "StreamError",
    "TaskRecord",
    "Taxonomy",
    "Thresholds",
    "TraceHeader",
    "TraceReader",
    "Twist",
    "ValidationError",
    "allen_relation",
    "annotate",
    "base_taxonomy",
    "box_shape",
    "compose",
    "cylinder_shape",
    "derive_id",
    "event_from_record",
    "event_record",
    "find_actions",
    "gaze_target",
    "infer_holding",
    "load_rule",
    "load_script",
    "load_thresholds",
    "load_trace",
    "occurs",
    "parse_stream",
    "pattern_from_dict",
    "read_events",
    "ray_intersect",
    "rule_from_dict",
    "save_script",
    "simulate",
    "sphere_shape",
    "task_id_for",
    "trajectory",
    "write_events",
    "write_trace",
]
