"""Closed-loop episodes: animal -> vehicle -> camera -> tracker -> servo.

The loop runs on a fixed simulated-time step for exact reproducibility:
identical scenario, seeds, and scripted operator give a bit-identical log.
(Tracker wall-clock latency is therefore not part of the tick records; the
benchmark path measures speed.) A wall-clock mode paces the same loop in
real time for interactive console sessions.

Per tick: operator events are drained and applied, then the world steps,
sensors fire, the frame renders, the tracker runs, and the servo emits the
command that drives the next tick's vehicle step.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from reefloop.bridge import BridgeError
from reefloop.geometry import BBox, iou
from reefloop.servo import Event, Mode, ServoController
from reefloop.sim.camera import gt_bbox
from reefloop.sim.motion import AnimalState, step_animal
from reefloop.sim.render import render_frame
from reefloop.sim.scenario import Scenario
from reefloop.trackers import TrackerError
from reefloop.vehicle import (
    ControlCommand,
    NavEstimate,
    SensorNoise,
    VehicleState,
    dead_reckon,
    sense,
    step_vehicle,
)

log = logging.getLogger(__name__)

MIN_TICK_HZ = 9.0


def _box_list(box: BBox | None) -> list[float] | None:
    if box is None:
        return None
    return [float(box.x), float(box.y), float(box.w), float(box.h)]


def _box_from(v) -> BBox | None:
    return None if v is None else BBox(*v)


@dataclass(frozen=True)
class TickRecord:
    index: int
    t: float
    vehicle_position: tuple[float, float, float]
    vehicle_heading: float
    vehicle_velocity: tuple[float, float, float]
    animal_position: tuple[float, float, float]
    animal_heading: float
    sensor_velocity: tuple[float, float, float]
    sensor_altitude: float
    sensor_heading: float
    sensor_depth: float
    nav_position: tuple[float, float, float]
    nav_heading: float
    gt_box: BBox | None
    tracker_box: BBox | None
    tracker_confidence: float
    tracker_initializing: bool
    mode: str
    command: tuple[float, float, float, float]  # surge, sway, heave, yaw
    events: tuple[str, ...] = ()

    def to_json(self) -> str:
        d = {
            "i": self.index,
            "t": self.t,
            "veh_p": list(self.vehicle_position),
            "veh_h": self.vehicle_heading,
            "veh_v": list(self.vehicle_velocity),
            "ani_p": list(self.animal_position),
            "ani_h": self.animal_heading,
            "sen_v": list(self.sensor_velocity),
            "sen_alt": self.sensor_altitude,
            "sen_h": self.sensor_heading,
            "sen_d": self.sensor_depth,
            "nav_p": list(self.nav_position),
            "nav_h": self.nav_heading,
            "gt": _box_list(self.gt_box),
            "trk": _box_list(self.tracker_box),
            "conf": self.tracker_confidence,
            "initing": self.tracker_initializing,
            "mode": self.mode,
            "cmd": list(self.command),
            "ev": list(self.events),
        }
        return json.dumps(d, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "TickRecord":
        d = json.loads(line)
        return cls(
            index=d["i"],
            t=d["t"],
            vehicle_position=tuple(d["veh_p"]),
            vehicle_heading=d["veh_h"],
            vehicle_velocity=tuple(d["veh_v"]),
            animal_position=tuple(d["ani_p"]),
            animal_heading=d["ani_h"],
            sensor_velocity=tuple(d["sen_v"]),
            sensor_altitude=d["sen_alt"],
            sensor_heading=d["sen_h"],
            sensor_depth=d["sen_d"],
            nav_position=tuple(d["nav_p"]),
            nav_heading=d["nav_h"],
            gt_box=_box_from(d["gt"]),
            tracker_box=_box_from(d["trk"]),
            tracker_confidence=d["conf"],
            tracker_initializing=d["initing"],
            mode=d["mode"],
            command=tuple(d["cmd"]),
            events=tuple(d["ev"]),
        )


@dataclass
class EpisodeLog:
    scenario_id: str
    seed: int
    tick_hz: float
    tracker: str
    ticks: list[TickRecord] = field(default_factory=list)
    transitions: list[tuple[float, str]] = field(default_factory=list)

    @property
    def intervention_intervals(self) -> list[tuple[float, float]]:
        """Maximal spans spent in manual or lost mode (operator in the loop)."""
        if not self.ticks:
            return []
        intervals = []
        start = None
        for rec in self.ticks:
            manual = rec.mode in (Mode.MANUAL.value, Mode.LOST.value)
            if manual and start is None:
                start = rec.t
            elif not manual and start is not None:
                intervals.append((start, rec.t))
                start = None
        if start is not None:
            intervals.append((start, self.ticks[-1].t))
        return intervals

    @property
    def track_loss_count(self) -> int:
        return sum(1 for _, m in self.transitions if m == Mode.LOST.value)

    def summary(self) -> dict:
        n = len(self.ticks)
        autonomous = sum(1 for r in self.ticks if r.mode == Mode.TRACKING.value)
        ious = [
            iou(r.tracker_box, r.gt_box)
            for r in self.ticks
            if r.gt_box is not None and r.tracker_box is not None
        ]
        return {
            "scenario": self.scenario_id,
            "seed": self.seed,
            "tick_hz": self.tick_hz,
            "tracker": self.tracker,
            "duration_s": (n / self.tick_hz) if n else 0.0,
            "ticks": n,
            "pct_autonomous": (100.0 * autonomous / n) if n else 0.0,
            "mean_iou": (sum(ious) / len(ious)) if ious else 0.0,
            "track_loss_count": self.track_loss_count,
            "intervention_intervals": [list(iv) for iv in self.intervention_intervals],
            "transitions": [list(tr) for tr in self.transitions],
        }


@dataclass
class ScriptedOperator:
    """Headless stand-in for the human: draws the first box as soon as the
    target is visible and re-draws it after the loop has been lost for a
    while (the operator can always see the animal on their screen)."""

    init_at_s: float = 0.0
    reinit_after_lost_s: float = 1.0
    initialized: bool = field(default=False, init=False)
    lost_since: float | None = field(default=None, init=False)

    def events(self, t: float, mode: Mode, gt: BBox | None) -> list[dict]:
        out = []
        if not self.initialized:
            if t >= self.init_at_s and gt is not None:
                out.append({"type": "init_box", "box": [gt.x, gt.y, gt.w, gt.h]})
                self.initialized = True
            return out
        if mode is Mode.LOST:
            if self.lost_since is None:
                self.lost_since = t
            elif t - self.lost_since >= self.reinit_after_lost_s and gt is not None:
                out.append({"type": "init_box", "box": [gt.x, gt.y, gt.w, gt.h]})
                self.lost_since = None
        else:
            self.lost_since = None
        return out


class ConsoleOperator:
    """Adapter pulling operator events from a connected console server."""

    def __init__(self, server):
        self.server = server

    def events(self, t: float, mode: Mode, gt: BBox | None) -> list[dict]:
        return self.server.drain_commands()


def run_episode(
    scenario: Scenario,
    tracker_spec: str = "ncc",
    tick_hz: float | None = None,
    operator=None,
    noise: SensorNoise = SensorNoise(),
    server=None,
    wall_clock: bool = False,
    max_ticks: int | None = None,
) -> EpisodeLog:
    """Run one closed-loop episode and return its full log."""
    from reefloop.session.benchmark import make_tracker

    tick_hz = float(tick_hz if tick_hz is not None else scenario.frame_rate_hz)
    if tick_hz < MIN_TICK_HZ:
        raise ValueError(f"tick rate {tick_hz} Hz below the {MIN_TICK_HZ} Hz control minimum")
    dt = 1.0 / tick_hz
    n_ticks = max_ticks if max_ticks is not None else int(round(scenario.duration_s * tick_hz))

    world_rng = np.random.default_rng(scenario.seed)
    noise_rng = np.random.default_rng(scenario.seed + 1)
    animal = AnimalState(position=scenario.animal.start, heading=scenario.animal.heading)
    vehicle = VehicleState(position=scenario.vehicle_start, heading=scenario.vehicle_heading)
    nav = NavEstimate.from_start(vehicle.position, vehicle.heading)
    servo = ServoController(scenario.servo)
    tracker = None  # built on the operator's first init_box
    tracker_initialized = False
    last_output = None
    operator = operator or ScriptedOperator()
    command = ControlCommand()
    pending_events = sorted(scenario.events, key=lambda e: e.t)
    next_event = 0

    episode = EpisodeLog(
        scenario_id=scenario.id, seed=scenario.seed, tick_hz=tick_hz, tracker=tracker_spec
    )

    start_wall = time.perf_counter()
    for k in range(n_ticks):
        t = (k + 1) * dt

        # scripted world events (teleports) due by this tick
        while next_event < len(pending_events) and pending_events[next_event].t <= t:
            off = pending_events[next_event].offset
            animal = AnimalState(
                position=tuple(p + o for p, o in zip(animal.position, off)),
                velocity=animal.velocity,
                heading=animal.heading,
                t=animal.t,
            )
            next_event += 1

        animal = step_animal(
            animal,
            scenario.animal.motion,
            dt,
            world_rng,
            world_bounds=scenario.world_bounds,
            seafloor_depth=scenario.seafloor_depth,
        )
        vehicle = step_vehicle(vehicle, command, dt, scenario.vehicle, scenario.seafloor_depth)
        packet = sense(vehicle, scenario.seafloor_depth, t, noise, noise_rng)
        nav = dead_reckon(nav, packet, dt)

        frame_rng = np.random.default_rng((scenario.seed, k))
        frame = render_frame(
            scenario, vehicle.position, vehicle.heading, animal, (), frame_rng, timestamp=t
        )
        gt = gt_bbox(
            scenario.camera,
            vehicle.position,
            vehicle.heading,
            animal.position,
            animal.heading,
            scenario.animal_extent,
        )

        # operator events land between frames, consumed once per tick
        events_applied = []
        for ev in operator.events(t, servo.mode, gt):
            kind = ev.get("type")
            events_applied.append(kind)
            if kind == "init_box":
                try:
                    box = BBox(*ev["box"]).validate()
                    if tracker is None:
                        tracker = make_tracker(tracker_spec)
                    tracker.init(frame, box)
                    tracker_initialized = True
                    last_output = None
                    servo.on_init_box(box, t)
                except (TrackerError, BridgeError, ValueError) as exc:
                    log.warning("operator init box rejected: %s", exc)
                    events_applied[-1] = "init_box_rejected"
                    tracker = None
                    tracker_initialized = False
            elif kind == "override":
                servo.on_override(
                    ControlCommand(
                        surge=ev.get("surge", 0.0),
                        sway=ev.get("sway", 0.0),
                        heave=ev.get("heave", 0.0),
                        yaw=ev.get("yaw", 0.0),
                    ),
                    t,
                )
            elif kind == "release":
                ready = tracker_initialized and not (last_output and last_output.initializing)
                servo.on_release(t, tracker_initialized, ready)
            elif kind == "reinit":
                if tracker_initialized and last_output and last_output.box is not None:
                    try:
                        tracker.init(frame, last_output.box)
                        servo.on_reinit(t)
                    except (TrackerError, BridgeError) as exc:
                        log.warning("reinit failed: %s", exc)
                        tracker = None
                        tracker_initialized = False

        if tracker_initialized:
            try:
                output = tracker.track(frame)
            except (TrackerError, BridgeError) as exc:
                # dead tracker: hand off immediately, keep the episode running
                log.warning("tracker fault at t=%.2f: %s", t, exc)
                output = None
                tracker = None
                tracker_initialized = False
                if servo.mode is Mode.TRACKING:
                    servo.machine.apply(Event.TRACK_LOST, t)
        else:
            output = None
        last_output = output or last_output

        command, mode = servo.step(
            output.box if output else None,
            output.confidence if output else 0.0,
            output.initializing if output else False,
            packet,
            dt,
            scenario.resolution,
            t,
        )

        episode.ticks.append(
            TickRecord(
                index=k,
                t=t,
                vehicle_position=tuple(float(v) for v in vehicle.position),
                vehicle_heading=float(vehicle.heading),
                vehicle_velocity=tuple(float(v) for v in vehicle.velocity_body),
                animal_position=tuple(float(v) for v in animal.position),
                animal_heading=float(animal.heading),
                sensor_velocity=tuple(float(v) for v in packet.dvl_velocity),
                sensor_altitude=float(packet.dvl_altitude),
                sensor_heading=float(packet.compass_heading),
                sensor_depth=float(packet.depth),
                nav_position=tuple(float(v) for v in nav.position),
                nav_heading=float(nav.heading),
                gt_box=None if gt is None else BBox(*(float(v) for v in gt.as_tuple())),
                tracker_box=(
                    None
                    if output is None or output.box is None
                    else BBox(*(float(v) for v in output.box.as_tuple()))
                ),
                tracker_confidence=float(output.confidence) if output else 0.0,
                tracker_initializing=bool(output.initializing) if output else False,
                mode=mode.value,
                command=(command.surge, command.sway, command.heave, command.yaw),
                events=tuple(events_applied),
            )
        )

        if server is not None:
            server.publish_tick(frame, episode.ticks[-1], scenario)

        if wall_clock:
            target = start_wall + (k + 1) * dt
            delay = target - time.perf_counter()
            if delay > 0:
                time.sleep(delay)

    episode.transitions = list(servo.machine.transitions)
    close = getattr(tracker, "close", None)
    if close:
        close()
    return episode


def save_episode(episode: EpisodeLog, out_dir: Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "log.jsonl", "w") as f:
        for rec in episode.ticks:
            f.write(rec.to_json() + "\n")
    (out_dir / "summary.json").write_text(json.dumps(episode.summary(), indent=2) + "\n")
    return out_dir


def load_episode(out_dir: Path) -> EpisodeLog:
    out_dir = Path(out_dir)
    summary = json.loads((out_dir / "summary.json").read_text())
    episode = EpisodeLog(
        scenario_id=summary["scenario"],
        seed=summary["seed"],
        tick_hz=summary["tick_hz"],
        tracker=summary["tracker"],
        transitions=[tuple(tr) for tr in summary["transitions"]],
    )
    for line in (out_dir / "log.jsonl").read_text().splitlines():
        episode.ticks.append(TickRecord.from_json(line))
    return episode
