from .contact import ContactMonitor
from .grasp import GraspMonitor, grasp_condition
from .pipeline import EventIds, MonitorPipeline, parse_stream
from .segment import PnPSegmenter

__all__ = [
    "ContactMonitor",
    "GraspMonitor",
    "grasp_condition",
    "EventIds",
    "MonitorPipeline",
    "parse_stream",
    "PnPSegmenter",
]
