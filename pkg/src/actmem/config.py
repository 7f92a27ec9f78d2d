"""Tunable constants for the monitors and the scenario stepper.

Everything the detection grammar depends on lives in Thresholds so an
experiment is reproducible from a config file plus a seed. Values here
are the shipped defaults; load_thresholds overrides from YAML.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import yaml

from .errors import ValidationError

FRAME_RATE = 90.0


@dataclass(frozen=True)
class Thresholds:
    # interval algebra: boundary slop of one frame period
    delta_t: float = 1.0 / FRAME_RATE

    # contact / supported-by
    eps_pen: float = 0.005          # m, touching tolerance for contact generation
    debounce_frames: int = 2        # frames a (non-)touch must persist before open/close
    eps_v: float = 0.05             # m/s, |relative vertical velocity| bound for support
    support_cone_deg: float = 45.0  # contact normal within this cone of +Z

    # grasp grammar
    g_min: float = 0.1              # analog input must exceed this (strict)
    min_sensor_sets: int = 2

    # pick-and-place segmentation
    reach_radius: float = 0.25      # m, ROI sphere around the reach anchor
    reach_offset: float = 0.15      # m along the palm-forward axis
    retreat_hysteresis: float = 0.005  # m, distance increase counted as moving away
    r_pickup: float = 0.15          # m
    r_putdown: float = 0.15         # m
    d_slide: float = 0.02           # m of horizontal travel before Sliding opens
    t_decay: float = 2.0            # s of trajectory kept for put-down backtracking
    from_above_speed: float = 0.02  # m/s minimum descent before contact
    from_above_cone_deg: float = 60.0  # velocity within this cone of -Z
    from_above_window: int = 5      # frames inspected before contact
    slide_onset_eps: float = 1e-4   # m, horizontal stillness band locating the onset
    direct_transport_after_slide: bool = False  # skip the pickup ROI after a slide break

    def __post_init__(self) -> None:
        for name in (
            "delta_t", "eps_pen", "eps_v", "g_min", "reach_radius", "reach_offset",
            "retreat_hysteresis", "r_pickup", "r_putdown", "d_slide", "t_decay",
            "from_above_speed",
        ):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValidationError(f"threshold {name}={v} must be finite and >= 0")
        if self.debounce_frames < 1 or self.from_above_window < 1:
            raise ValidationError("frame-count thresholds must be >= 1")
        if not (0 < self.support_cone_deg <= 90 and 0 < self.from_above_cone_deg <= 90):
            raise ValidationError("cone angles must be in (0, 90] degrees")

    @property
    def support_cos(self) -> float:
        return math.cos(math.radians(self.support_cone_deg))

    @property
    def from_above_cos(self) -> float:
        return math.cos(math.radians(self.from_above_cone_deg))


@dataclass(frozen=True)
class SimParams:
    """Stepper constants; controller gains tuned for a 90 Hz loop."""

    frame_rate: float = FRAME_RATE
    n_sleep: int = 30           # rest frames before an entity sleeps
    fall_speed: float = 1.0     # m/s, constant descent when unsupported
    hand_kp: float = 400.0
    hand_ki: float = 0.0
    hand_kd: float = 40.0
    hand_max_speed: float = 4.0      # m/s, output clamp of the position loop
    hand_integral_clamp: float = 1.0
    waypoint_tolerance: float = 0.01  # m, scripted targets reached within this
    gaze_height: float = 1.6          # m, eye origin above the hand's ground point
    gaze_back: float = 0.55           # m, eye origin offset behind the work area

    def __post_init__(self) -> None:
        if self.frame_rate <= 0:
            raise ValidationError(f"frame_rate {self.frame_rate} must be > 0")
        if self.n_sleep < 1:
            raise ValidationError("n_sleep must be >= 1")

    @property
    def dt(self) -> float:
        return 1.0 / self.frame_rate


def _from_mapping(cls, data: dict, where: str):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ValidationError(f"{where}: unknown keys {sorted(unknown)}")
    return cls(**data)


def load_thresholds(path: str) -> Thresholds:
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: thresholds file must be a mapping")
    return _from_mapping(Thresholds, data, path)


def thresholds_to_yaml(th: Thresholds) -> str:
    return yaml.safe_dump(dataclasses.asdict(th), sort_keys=False)
