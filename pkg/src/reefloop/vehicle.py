"""Simplified AUV dynamics, sensor models, and the dead-reckoning estimator.

4-DOF control (surge/sway/heave/yaw); roll and pitch held at zero. Each body
velocity relaxes toward its commanded setpoint with a first-order time
constant (the exact exponential update, so the step size never changes the
response shape). World frame is NED-like with z down, so depth = position z
and altitude = seafloor_depth - depth.

Command sign conventions (normalized setpoints in [-1, 1]):
  surge > 0 forward, sway > 0 starboard, yaw > 0 clockwise from above,
  heave > 0 UP (ascend). The body heave velocity w is down-positive, so the
  vehicle maps heave_cmd to a -w setpoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DT_MAX = 0.2


def clamp(v: float, lo: float = -1.0, hi: float = 1.0) -> float:
    return lo if v < lo else hi if v > hi else v


@dataclass(frozen=True)
class ControlCommand:
    surge: float = 0.0
    sway: float = 0.0
    heave: float = 0.0  # positive = ascend
    yaw: float = 0.0

    def __post_init__(self):
        for name in ("surge", "sway", "heave", "yaw"):
            object.__setattr__(self, name, clamp(float(getattr(self, name))))

    def as_dict(self) -> dict:
        return {"surge": self.surge, "sway": self.sway, "heave": self.heave, "yaw": self.yaw}


@dataclass(frozen=True)
class VehicleParams:
    v_max: tuple[float, float, float] = (1.0, 0.5, 0.5)  # surge, sway, heave m/s
    yaw_rate_max: float = 0.8  # rad/s
    tau: float = 0.8  # velocity relaxation time constant, s


@dataclass(frozen=True)
class VehicleState:
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)  # z = depth
    heading: float = 0.0
    velocity_body: tuple[float, float, float] = (0.0, 0.0, 0.0)  # u (surge), v (sway), w (heave, down+)
    yaw_rate: float = 0.0

    @property
    def depth(self) -> float:
        return self.position[2]

    def altitude(self, seafloor_depth: float) -> float:
        return seafloor_depth - self.depth


def step_vehicle(
    state: VehicleState,
    cmd: ControlCommand,
    dt: float,
    params: VehicleParams = VehicleParams(),
    seafloor_depth: float = math.inf,
) -> VehicleState:
    """Advance the vehicle one step; depth is clamped to [0, seafloor]."""
    if not (0.0 < dt <= DT_MAX):
        raise ValueError(f"dt must be in (0, {DT_MAX}], got {dt}")
    decay = math.exp(-dt / params.tau)

    def relax(current: float, target: float) -> float:
        return target + (current - target) * decay

    u = relax(state.velocity_body[0], cmd.surge * params.v_max[0])
    v = relax(state.velocity_body[1], cmd.sway * params.v_max[1])
    w = relax(state.velocity_body[2], -cmd.heave * params.v_max[2])
    r = relax(state.yaw_rate, cmd.yaw * params.yaw_rate_max)

    heading = state.heading + r * dt
    ch, sh = math.cos(heading), math.sin(heading)
    x = state.position[0] + (ch * u - sh * v) * dt
    y = state.position[1] + (sh * u + ch * v) * dt
    z = state.position[2] + w * dt
    if z > seafloor_depth:
        z = seafloor_depth
        w = 0.0
    if z < 0.0:
        z = 0.0
        w = 0.0

    return VehicleState(position=(x, y, z), heading=heading, velocity_body=(u, v, w), yaw_rate=r)


@dataclass(frozen=True)
class SensorNoise:
    sigma_velocity: float = 0.0  # m/s, per body axis
    sigma_depth: float = 0.0  # m
    sigma_heading: float = 0.0  # rad
    sigma_altitude: float = 0.0  # m
    heading_bias: float = 0.0  # rad, constant compass miscalibration


@dataclass(frozen=True)
class SensorPacket:
    dvl_velocity: tuple[float, float, float]  # body frame m/s
    dvl_altitude: float  # m above the seafloor
    compass_heading: float  # rad
    depth: float  # m
    timestamp: float  # s


def sense(
    state: VehicleState,
    seafloor_depth: float,
    timestamp: float,
    noise: SensorNoise = SensorNoise(),
    rng: np.random.Generator | None = None,
) -> SensorPacket:
    """Measure the true state through the DVL / compass / depth models."""

    def gauss(sigma: float) -> float:
        if sigma <= 0.0 or rng is None:
            return 0.0
        return sigma * float(rng.standard_normal())

    vel = tuple(v + gauss(noise.sigma_velocity) for v in state.velocity_body)
    altitude = max(0.0, state.altitude(seafloor_depth) + gauss(noise.sigma_altitude))
    return SensorPacket(
        dvl_velocity=vel,
        dvl_altitude=altitude,
        compass_heading=state.heading + noise.heading_bias + gauss(noise.sigma_heading),
        depth=max(0.0, state.depth + gauss(noise.sigma_depth)),
        timestamp=timestamp,
    )


@dataclass(frozen=True)
class NavEstimate:
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    heading: float = 0.0
    distance_traveled: float = 0.0  # covariance proxy: DR error grows with it
    timestamp: float = -math.inf

    @classmethod
    def from_start(
        cls, position: tuple[float, float, float], heading: float, timestamp: float = -math.inf
    ) -> "NavEstimate":
        return cls(position=position, heading=heading, timestamp=timestamp)


def dead_reckon(estimate: NavEstimate, packet: SensorPacket, dt: float) -> NavEstimate:
    """Integrate one DVL packet: position += R(compass) * v_body * dt.

    Heading comes from the compass, depth straight from the depth sensor.
    Packets must arrive in strictly increasing timestamp order.
    """
    if packet.timestamp <= estimate.timestamp:
        raise ValueError(
            f"sensor packets must be time-ordered: {packet.timestamp} after {estimate.timestamp}"
        )
    ch, sh = math.cos(packet.compass_heading), math.sin(packet.compass_heading)
    u, v, _ = packet.dvl_velocity
    x = estimate.position[0] + (ch * u - sh * v) * dt
    y = estimate.position[1] + (sh * u + ch * v) * dt
    step = math.hypot(u, v) * dt
    return NavEstimate(
        position=(x, y, packet.depth),
        heading=packet.compass_heading,
        distance_traveled=estimate.distance_traveled + step,
        timestamp=packet.timestamp,
    )
