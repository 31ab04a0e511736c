"""Synthetic sequence export: render a scenario into the dataset layout.

The camera follows the target with the servo driven directly by the
ground-truth box (no tracker in the loop), which produces the moving-camera
footage the benchmark format expects. Output is a standard sequence
directory: frames/%06d.png, groundtruth.txt, meta.toml.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
from PIL import Image

from reefloop.dataset import AttributeSet, SequenceRecord, compute_auto_attributes, save_sequence
from reefloop.servo import Event, ServoController
from reefloop.sim.camera import gt_bbox
from reefloop.sim.motion import AnimalState, Crawl, motion_to_dict, step_animal
from reefloop.sim.render import render_frame
from reefloop.sim.scenario import Scenario
from reefloop.vehicle import ControlCommand, VehicleState, sense, step_vehicle

log = logging.getLogger(__name__)


def export_synthetic_sequence(scenario: Scenario, root: Path) -> Path:
    """Simulate the scenario and write it as a dataset sequence directory."""
    dt = 1.0 / scenario.frame_rate_hz
    n = scenario.frame_count
    rng = np.random.default_rng(scenario.seed)
    animal = AnimalState(position=scenario.animal.start, heading=scenario.animal.heading)
    vehicle = VehicleState(position=scenario.vehicle_start, heading=scenario.vehicle_heading)
    servo = ServoController(scenario.servo)
    command = ControlCommand()

    frames = []
    boxes = []
    for k in range(n):
        t = (k + 1) * dt
        animal = step_animal(
            animal, scenario.animal.motion, dt, rng,
            world_bounds=scenario.world_bounds, seafloor_depth=scenario.seafloor_depth,
        )
        vehicle = step_vehicle(vehicle, command, dt, scenario.vehicle, scenario.seafloor_depth)
        packet = sense(vehicle, scenario.seafloor_depth, t)
        box = gt_bbox(
            scenario.camera, vehicle.position, vehicle.heading,
            animal.position, animal.heading, scenario.animal_extent,
        )
        if box is None:
            raise ValueError(
                f"{scenario.id}: target left the frame at t={t:.2f}s; "
                "adjust the scenario before exporting"
            )
        if k == 0:
            servo.on_init_box(box, t)
            servo.machine.apply(Event.READY, t)
        frame_rng = np.random.default_rng((scenario.seed, k))
        frame = render_frame(
            scenario, vehicle.position, vehicle.heading, animal, (), frame_rng, timestamp=t
        )
        command, _ = servo.step(box, 0.9, False, packet, dt, scenario.resolution, t)
        frames.append(frame)
        boxes.append(box)

    auto = compute_auto_attributes(boxes)
    on_floor = isinstance(scenario.animal.motion, Crawl)
    attributes = AttributeSet(
        scale_variation=auto["SV"],
        aspect_ratio_change=auto["ARC"],
        low_resolution=auto["LR"],
        midwater=not on_floor,
        seabed=on_floor,
        passive_lighting=True,
    )
    record = SequenceRecord(
        id=scenario.id,
        fps=scenario.frame_rate_hz,
        resolution=scenario.resolution,
        animal="synthetic",
        habitat="synthetic midwater" if not on_floor else "synthetic seabed",
        behavior=motion_to_dict(scenario.animal.motion)["kind"],
        track=tuple(boxes),
        attributes=attributes,
    )
    seq_dir = save_sequence(record, root)
    frames_dir = seq_dir / "frames"
    frames_dir.mkdir(exist_ok=True)
    for i, frame in enumerate(frames):
        Image.fromarray(frame.pixels).save(frames_dir / f"{i:06d}.png")
    log.info("exported %d synthetic frames to %s", n, seq_dir)
    return seq_dir
