from reefloop.sim.camera import CameraModel, gt_bbox, project
from reefloop.sim.motion import (
    AnimalState,
    ConstantSwim,
    Crawl,
    Darting,
    StopAndGo,
    step_animal,
)
from reefloop.sim.render import make_sprite, render_frame
from reefloop.sim.scenario import Scenario, load_scenario, save_scenario

__all__ = [
    "AnimalState",
    "CameraModel",
    "ConstantSwim",
    "Crawl",
    "Darting",
    "StopAndGo",
    "Scenario",
    "gt_bbox",
    "load_scenario",
    "make_sprite",
    "project",
    "render_frame",
    "save_scenario",
    "step_animal",
]
