"""Controller math driving the scripted hands.

A 3D PID loop tracks pose targets (one instance for translation, one
usable for rotation error vectors), PD joint drivers hold finger joints,
and grasp animations map the analog input to joint angles.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from .errors import ValidationError
from .geometry import Vec3

_ZERO3: Vec3 = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Pid3Config:
    kp: float
    ki: float = 0.0
    kd: float = 0.0
    max_output: float = math.inf
    integral_clamp: float = math.inf

    def __post_init__(self) -> None:
        if min(self.kp, self.ki, self.kd) < 0:
            raise ValidationError("PID gains must be >= 0")
        if self.max_output <= 0:
            raise ValidationError("max_output must be > 0")


@dataclass
class Pid3State:
    integral: Vec3 = _ZERO3
    prev_error: Vec3 = _ZERO3
    initialized: bool = False


def pid3_step(
    cfg: Pid3Config, state: Pid3State, error: Vec3, dt: float
) -> tuple[Vec3, Pid3State]:
    """One controller update; returns (output, next state).

    output = kp*e + ki*integral(e) + kd*de/dt per component; the integral
    is clamped per component, the output clamped by euclidean norm. The
    derivative term is zero on the first call (no error history yet).
    """
    if dt <= 0:
        raise ValidationError(f"dt {dt} must be > 0")
    if not all(math.isfinite(c) for c in error):
        raise ValidationError(f"non-finite error {error}")
    clamp = cfg.integral_clamp
    integral = tuple(
        min(clamp, max(-clamp, state.integral[i] + error[i] * dt)) for i in range(3)
    )
    if state.initialized:
        deriv = tuple((error[i] - state.prev_error[i]) / dt for i in range(3))
    else:
        deriv = _ZERO3
    out = [
        cfg.kp * error[i] + cfg.ki * integral[i] + cfg.kd * deriv[i] for i in range(3)
    ]
    norm = math.sqrt(out[0] * out[0] + out[1] * out[1] + out[2] * out[2])
    if norm > cfg.max_output:
        s = cfg.max_output / norm
        out = [c * s for c in out]
    new_state = Pid3State(integral, error, True)  # type: ignore[arg-type]
    return (out[0], out[1], out[2]), new_state


@dataclass(frozen=True)
class JointDriver:
    stiffness: float
    damping: float
    target_angle: float = 0.0
    target_velocity: float = 0.0

    def __post_init__(self) -> None:
        if self.stiffness < 0 or self.damping < 0:
            raise ValidationError("stiffness and damping must be >= 0")


def joint_driver_torque(d: JointDriver, angle: float, velocity: float) -> float:
    if not (math.isfinite(angle) and math.isfinite(velocity)):
        raise ValidationError(f"non-finite joint state ({angle}, {velocity})")
    return d.stiffness * (d.target_angle - angle) + d.damping * (
        d.target_velocity - velocity
    )


@dataclass(frozen=True)
class GraspAnimation:
    """Joint keyframes sampled by the analog grasp input u in [0, 1]."""

    style: str
    keyframes: tuple[tuple[float, dict[str, float]], ...]

    def __post_init__(self) -> None:
        if not self.keyframes:
            raise ValidationError("grasp animation needs at least one keyframe")
        us = [u for u, _ in self.keyframes]
        if us[0] != 0.0 or us[-1] != 1.0:
            raise ValidationError("keyframes must start at u=0 and end at u=1")
        if any(b <= a for a, b in zip(us, us[1:])):
            raise ValidationError(f"keyframe parameters not strictly increasing: {us}")
        joints = set(self.keyframes[0][1])
        for u, angles in self.keyframes:
            if set(angles) != joints:
                raise ValidationError(f"keyframe at u={u} names different joints")


def grasp_interpolate(anim: GraspAnimation, u: float) -> dict[str, float]:
    """Piecewise-linear joint angles at parameter u; u is clamped to [0, 1]."""
    if u < 0.0 or u > 1.0:
        warnings.warn(f"grasp parameter {u} outside [0, 1], clamping", stacklevel=2)
        u = min(1.0, max(0.0, u))
    frames = anim.keyframes
    if u <= frames[0][0]:
        return dict(frames[0][1])
    for (u0, a0), (u1, a1) in zip(frames, frames[1:]):
        if u <= u1:
            w = (u - u0) / (u1 - u0)
            return {j: a0[j] + w * (a1[j] - a0[j]) for j in a0}
    return dict(frames[-1][1])


def default_grasp_animation(style: str) -> GraspAnimation:
    """Two-keyframe open/closed curl per style; enough to exercise the math."""
    closed = {
        "pinch": {"thumb": 0.9, "index": 0.9, "middle": 0.2, "ring": 0.2, "pinky": 0.2},
        "wrap": {"thumb": 1.1, "index": 1.3, "middle": 1.3, "ring": 1.3, "pinky": 1.2},
        "tripod": {"thumb": 0.9, "index": 0.9, "middle": 0.9, "ring": 0.2, "pinky": 0.2},
        "lateral": {"thumb": 0.7, "index": 1.0, "middle": 1.0, "ring": 1.0, "pinky": 1.0},
    }
    if style not in closed:
        raise ValidationError(f"unknown grasp style {style!r}")
    open_pose = {j: 0.0 for j in closed[style]}
    return GraspAnimation(style, ((0.0, open_pose), (1.0, closed[style])))


@dataclass
class RampTarget:
    """Linear move from one value toward another over a duration."""

    start_value: float
    end_value: float
    t0: float
    duration: float

    def at(self, t: float) -> float:
        if self.duration <= 0 or t >= self.t0 + self.duration:
            return self.end_value
        if t <= self.t0:
            return self.start_value
        w = (t - self.t0) / self.duration
        return self.start_value + w * (self.end_value - self.start_value)
