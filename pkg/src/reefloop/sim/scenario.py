"""Scenario files: the full parameterization of one synthetic episode.

Loaded from / saved to `scenario.toml`. Water absorption must be ordered
beta_r >= beta_g >= beta_b and the frame rate must support closed-loop
control (>= 10 Hz).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import tomli

from reefloop.dataset import dump_toml
from reefloop.servo import PIDGains, ServoConfig
from reefloop.sim.camera import DEFAULT_TILT_RAD, CameraModel
from reefloop.sim.motion import MotionModel, ConstantSwim, motion_from_dict, motion_to_dict
from reefloop.vehicle import VehicleParams

MIN_FRAME_RATE_HZ = 10.0


@dataclass(frozen=True)
class BodySpec:
    """A rendered body: sprite texture seed, physical extent, start pose."""

    sprite_seed: int = 1
    extent: tuple[float, float, float] = (0.8, 0.5, 0.4)  # along/across/height m
    start: tuple[float, float, float] = (4.0, 0.0, 8.0)
    heading: float = 0.0
    motion: MotionModel = field(default_factory=ConstantSwim)


@dataclass(frozen=True)
class TeleportEvent:
    """Scripted instantaneous displacement of the animal (failure injection)."""

    t: float
    offset: tuple[float, float, float]


@dataclass(frozen=True)
class Scenario:
    id: str = "scenario"
    seed: int = 0
    duration_s: float = 60.0
    frame_rate_hz: float = 10.0
    resolution: tuple[int, int] = (320, 240)
    # world
    world_bounds: tuple[float, float, float] = (200.0, 200.0, 100.0)
    seafloor_depth: float = 30.0
    water_color: tuple[float, float, float] = (10.0, 58.0, 92.0)
    beta: tuple[float, float, float] = (0.35, 0.07, 0.03)  # 1/m, r >= g >= b
    snow_density: float = 0.0  # particles / m^3
    snow_max_range_m: float = 12.0
    floor_visibility_m: float = 80.0
    # bodies
    animal: BodySpec = field(default_factory=BodySpec)
    distractors: tuple[BodySpec, ...] = ()
    events: tuple[TeleportEvent, ...] = ()
    # platform
    focal_px: float = 260.0
    camera_tilt_rad: float = DEFAULT_TILT_RAD
    vehicle_start: tuple[float, float, float] = (0.0, 0.0, 5.7)
    vehicle_heading: float = 0.0
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    servo: ServoConfig = field(default_factory=ServoConfig)

    def __post_init__(self):
        br, bg, bb = self.beta
        if not (br >= bg >= bb >= 0.0):
            raise ValueError(f"absorption must satisfy beta_r >= beta_g >= beta_b >= 0, got {self.beta}")
        if self.frame_rate_hz < MIN_FRAME_RATE_HZ:
            raise ValueError(f"frame rate {self.frame_rate_hz} below the {MIN_FRAME_RATE_HZ} Hz control minimum")
        if self.seafloor_depth <= 0:
            raise ValueError("seafloor depth must be positive")

    @property
    def camera(self) -> CameraModel:
        return CameraModel(
            focal_px=self.focal_px, resolution=self.resolution, tilt_rad=self.camera_tilt_rad
        )

    @property
    def animal_sprite_seed(self) -> int:
        return self.animal.sprite_seed

    @property
    def animal_extent(self) -> tuple[float, float, float]:
        return self.animal.extent

    @property
    def frame_count(self) -> int:
        return int(round(self.duration_s * self.frame_rate_hz))

    def with_overrides(self, **kwargs) -> "Scenario":
        return replace(self, **kwargs)


def _body_to_dict(b: BodySpec) -> dict:
    return {
        "sprite_seed": b.sprite_seed,
        "extent": list(b.extent),
        "start": list(b.start),
        "heading": b.heading,
        "motion": motion_to_dict(b.motion),
    }


def _body_from_dict(d: dict) -> BodySpec:
    return BodySpec(
        sprite_seed=int(d.get("sprite_seed", 1)),
        extent=tuple(d.get("extent", (0.8, 0.5, 0.4))),
        start=tuple(d.get("start", (4.0, 0.0, 8.0))),
        heading=float(d.get("heading", 0.0)),
        motion=motion_from_dict(d.get("motion", {})),
    )


def _gains_to_dict(g: PIDGains) -> list[float]:
    return [g.kp, g.ki, g.kd]


def save_scenario(scenario: Scenario, path: Path) -> None:
    s = scenario
    doc = {
        "id": s.id,
        "seed": s.seed,
        "duration_s": s.duration_s,
        "frame_rate_hz": s.frame_rate_hz,
        "resolution": list(s.resolution),
        "world": {
            "bounds": list(s.world_bounds),
            "seafloor_depth": s.seafloor_depth,
            "water_color": list(s.water_color),
            "beta": list(s.beta),
            "snow_density": s.snow_density,
            "snow_max_range_m": s.snow_max_range_m,
            "floor_visibility_m": s.floor_visibility_m,
        },
        "camera": {"focal_px": s.focal_px, "tilt_rad": s.camera_tilt_rad},
        "vehicle": {
            "start": list(s.vehicle_start),
            "heading": s.vehicle_heading,
            "v_max": list(s.vehicle.v_max),
            "yaw_rate_max": s.vehicle.yaw_rate_max,
            "tau": s.vehicle.tau,
        },
        "servo": {
            "reference_width": s.servo.reference_width if s.servo.reference_width else 0.0,
            "yaw": _gains_to_dict(s.servo.yaw),
            "heave": _gains_to_dict(s.servo.heave),
            "surge": _gains_to_dict(s.servo.surge),
            "integral_clamp": s.servo.integral_clamp,
            "altitude_floor_m": s.servo.altitude_floor_m,
            "floor_band_m": s.servo.floor_band_m,
            "floor_gain": s.servo.floor_gain,
            "loss_confidence_threshold": s.servo.loss_confidence_threshold,
            "loss_patience_frames": s.servo.loss_patience_frames,
        },
        "animal": _body_to_dict(s.animal),
    }
    text = dump_toml(doc)
    for d in s.distractors:
        text += "\n[[distractors]]\n" + dump_toml(_body_to_dict(d), prefix="distractors.")
    for e in s.events:
        text += "\n[[events]]\n" + dump_toml({"t": e.t, "kind": "teleport", "offset": list(e.offset)})
    Path(path).write_text(text)


def load_scenario(path: Path) -> Scenario:
    with open(path, "rb") as f:
        doc = tomli.load(f)
    world = doc.get("world", {})
    cam = doc.get("camera", {})
    veh = doc.get("vehicle", {})
    srv = doc.get("servo", {})

    def gains(key):
        if key in srv:
            kp, ki, kd = srv[key]
            return PIDGains(kp, ki, kd)
        return PIDGains()

    servo = ServoConfig(
        reference_width=(srv.get("reference_width") or None),
        yaw=gains("yaw"),
        heave=gains("heave"),
        surge=gains("surge"),
        integral_clamp=float(srv.get("integral_clamp", 0.5)),
        altitude_floor_m=float(srv.get("altitude_floor_m", 0.75)),
        floor_band_m=float(srv.get("floor_band_m", 0.5)),
        floor_gain=float(srv.get("floor_gain", 2.0)),
        loss_confidence_threshold=float(srv.get("loss_confidence_threshold", 0.4)),
        loss_patience_frames=int(srv.get("loss_patience_frames", 5)),
    )
    events = tuple(
        TeleportEvent(t=float(e["t"]), offset=tuple(e["offset"]))
        for e in doc.get("events", [])
        if e.get("kind", "teleport") == "teleport"
    )
    return Scenario(
        id=str(doc.get("id", Path(path).stem)),
        seed=int(doc.get("seed", 0)),
        duration_s=float(doc.get("duration_s", 60.0)),
        frame_rate_hz=float(doc.get("frame_rate_hz", 10.0)),
        resolution=tuple(int(v) for v in doc.get("resolution", (320, 240))),
        world_bounds=tuple(world.get("bounds", (200.0, 200.0, 100.0))),
        seafloor_depth=float(world.get("seafloor_depth", 30.0)),
        water_color=tuple(world.get("water_color", (10.0, 58.0, 92.0))),
        beta=tuple(world.get("beta", (0.35, 0.07, 0.03))),
        snow_density=float(world.get("snow_density", 0.0)),
        snow_max_range_m=float(world.get("snow_max_range_m", 12.0)),
        floor_visibility_m=float(world.get("floor_visibility_m", 80.0)),
        animal=_body_from_dict(doc.get("animal", {})),
        distractors=tuple(_body_from_dict(d) for d in doc.get("distractors", [])),
        events=events,
        focal_px=float(cam.get("focal_px", 260.0)),
        camera_tilt_rad=float(cam.get("tilt_rad", DEFAULT_TILT_RAD)),
        vehicle_start=tuple(veh.get("start", (0.0, 0.0, 5.7))),
        vehicle_heading=float(veh.get("heading", 0.0)),
        vehicle=VehicleParams(
            v_max=tuple(veh.get("v_max", (1.0, 0.5, 0.5))),
            yaw_rate_max=float(veh.get("yaw_rate_max", 0.8)),
            tau=float(veh.get("tau", 0.8)),
        ),
        servo=servo,
    )


def chase_start(
    animal_start: tuple[float, float, float],
    range_m: float,
    tilt_rad: float = DEFAULT_TILT_RAD,
    bearing: float = 0.0,
) -> tuple[tuple[float, float, float], float]:
    """Vehicle pose that centers a target on the tilted optical axis.

    Places the vehicle ``range_m`` behind the target along ``bearing`` and
    above it by range*tan(tilt), so the line of sight runs straight down the
    camera axis. Returns (position, heading).
    """
    horizontal = range_m * math.cos(tilt_rad)
    rise = range_m * math.sin(tilt_rad)
    pos = (
        animal_start[0] - horizontal * math.cos(bearing),
        animal_start[1] - horizontal * math.sin(bearing),
        animal_start[2] - rise,
    )
    return pos, bearing
