"""Animal kinematics: the behavior-label motion models.

World frame is NED-like: x/y horizontal (meters), z down, the seafloor a
horizontal plane at z = seafloor_depth. Headings are radians about +z
(0 along +x). The models realize the qualitative behavior labels
(constant swim, stop-and-go, darting, crawl); speeds are free parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DT_MAX = 0.2


@dataclass(frozen=True)
class AnimalState:
    position: tuple[float, float, float]
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    heading: float = 0.0
    t: float = 0.0  # age of the trajectory; drives duty-cycled behaviors


@dataclass(frozen=True)
class ConstantSwim:
    speed: float = 0.5
    turn_noise_std: float = 0.0  # rad/sqrt(s)

    def __post_init__(self):
        if self.speed < 0:
            raise ValueError("speed must be >= 0")


@dataclass(frozen=True)
class StopAndGo:
    move_s: float = 2.0
    pause_s: float = 3.0
    speed: float = 1.0
    turn_noise_std: float = 0.0

    def __post_init__(self):
        if self.speed < 0 or self.move_s <= 0 or self.pause_s < 0:
            raise ValueError("bad stop-and-go parameters")


@dataclass(frozen=True)
class Darting:
    base_speed: float = 0.3
    rate_hz: float = 0.5  # expected impulses per second (Poisson)
    impulse_ms: float = 1.5  # speed added per impulse, m/s
    decay_s: float = 0.5  # impulse velocity decay time constant
    turn_noise_std: float = 0.0

    def __post_init__(self):
        if self.rate_hz < 0 or self.impulse_ms < 0 or self.base_speed < 0:
            raise ValueError("bad darting parameters")


@dataclass(frozen=True)
class Crawl:
    speed: float = 0.1
    turn_noise_std: float = 0.0

    def __post_init__(self):
        if self.speed < 0:
            raise ValueError("speed must be >= 0")


MotionModel = ConstantSwim | StopAndGo | Darting | Crawl

_MOTION_KINDS = {
    "constant-swim": ConstantSwim,
    "stop-and-go": StopAndGo,
    "darting": Darting,
    "crawl": Crawl,
}


def motion_from_dict(d: dict) -> MotionModel:
    kind = d.get("kind", "constant-swim")
    if kind not in _MOTION_KINDS:
        raise ValueError(f"unknown motion kind {kind!r}; expected one of {sorted(_MOTION_KINDS)}")
    args = {k: v for k, v in d.items() if k != "kind"}
    return _MOTION_KINDS[kind](**args)


def motion_to_dict(m: MotionModel) -> dict:
    kind = next(k for k, cls in _MOTION_KINDS.items() if isinstance(m, cls))
    d = {"kind": kind}
    d.update({f: getattr(m, f) for f in m.__dataclass_fields__})
    return d


def _heading_step(heading: float, std: float, dt: float, rng: np.random.Generator) -> float:
    if std <= 0.0:
        return heading
    return heading + std * math.sqrt(dt) * float(rng.standard_normal())


def _reflect(pos: list[float], vel: list[float], heading: float, bounds, seafloor: float):
    """Bounce off the world box: [-bx/2, bx/2] x [-by/2, by/2] x [0, seafloor]."""
    for axis, half in ((0, bounds[0] / 2), (1, bounds[1] / 2)):
        if pos[axis] > half:
            pos[axis] = 2 * half - pos[axis]
            vel[axis] = -vel[axis]
            heading = math.pi - heading if axis == 0 else -heading
        elif pos[axis] < -half:
            pos[axis] = -2 * half - pos[axis]
            vel[axis] = -vel[axis]
            heading = math.pi - heading if axis == 0 else -heading
    pos[2] = min(max(pos[2], 0.0), seafloor)
    return heading


def step_animal(
    state: AnimalState,
    model: MotionModel,
    dt: float,
    rng: np.random.Generator,
    world_bounds: tuple[float, float, float] = (1000.0, 1000.0, 1000.0),
    seafloor_depth: float = 1000.0,
) -> AnimalState:
    """Advance the animal by one step of at most DT_MAX seconds."""
    if not (0.0 < dt <= DT_MAX):
        raise ValueError(f"dt must be in (0, {DT_MAX}], got {dt}")

    heading = _heading_step(state.heading, model.turn_noise_std, dt, rng)
    direction = (math.cos(heading), math.sin(heading), 0.0)

    if isinstance(model, ConstantSwim):
        vel = [model.speed * d for d in direction]
    elif isinstance(model, StopAndGo):
        phase = state.t % (model.move_s + model.pause_s)
        speed = model.speed if phase < model.move_s else 0.0
        vel = [speed * d for d in direction]
    elif isinstance(model, Darting):
        swim = [model.base_speed * d for d in direction]
        # impulse component relative to the pre-noise swim velocity, so that
        # rate 0 reduces to ConstantSwim bit-exactly under heading noise
        prev_swim = (
            model.base_speed * math.cos(state.heading),
            model.base_speed * math.sin(state.heading),
            0.0,
        )
        dart = [v - s for v, s in zip(state.velocity, prev_swim)]
        decay = math.exp(-dt / model.decay_s)
        dart = [d * decay for d in dart]
        if model.rate_hz > 0.0:  # skipping the draw keeps rate=0 identical to ConstantSwim
            for _ in range(int(rng.poisson(model.rate_hz * dt))):
                ang = float(rng.uniform(0.0, 2.0 * math.pi))
                dart[0] += model.impulse_ms * math.cos(ang)
                dart[1] += model.impulse_ms * math.sin(ang)
        vel = [s + d for s, d in zip(swim, dart)]
    elif isinstance(model, Crawl):
        vel = [model.speed * direction[0], model.speed * direction[1], 0.0]
    else:
        raise TypeError(f"unknown motion model {model!r}")

    pos = [p + v * dt for p, v in zip(state.position, vel)]
    if isinstance(model, Crawl):
        pos[2] = seafloor_depth  # substrate-locked
    heading = _reflect(pos, vel, heading, world_bounds, seafloor_depth)

    return AnimalState(
        position=tuple(pos),
        velocity=tuple(vel),
        heading=heading,
        t=state.t + dt,
    )
