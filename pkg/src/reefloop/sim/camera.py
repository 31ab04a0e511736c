"""Pinhole camera fixed to the vehicle body, tilted below the horizon.

Frames: world is NED-like (x/y horizontal, z down). The body frame has x
forward, y right (starboard), z down; the camera optical axis is the body x
axis pitched down by the mount tilt. Image u is right, v is down. Points at
non-positive camera depth project to None (the behind-camera marker).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from reefloop.geometry import BBox, Point2

DEFAULT_TILT_RAD = math.radians(30.0)


@dataclass(frozen=True)
class CameraModel:
    focal_px: float
    resolution: tuple[int, int]  # (width, height)
    tilt_rad: float = DEFAULT_TILT_RAD
    principal: tuple[float, float] | None = None  # defaults to image center

    def __post_init__(self):
        if self.focal_px <= 0:
            raise ValueError("focal length must be positive")

    @property
    def cx(self) -> float:
        return self.principal[0] if self.principal else self.resolution[0] / 2.0

    @property
    def cy(self) -> float:
        return self.principal[1] if self.principal else self.resolution[1] / 2.0

    def body_to_camera(self) -> np.ndarray:
        """Rows are the camera axes (right, down, forward) in body coords."""
        s, c = math.sin(self.tilt_rad), math.cos(self.tilt_rad)
        return np.array(
            [
                [0.0, 1.0, 0.0],  # image right = starboard
                [-s, 0.0, c],  # image down = below the tilted axis
                [c, 0.0, s],  # optical axis: forward, pitched down
            ]
        )


def world_to_camera(
    camera: CameraModel,
    vehicle_position: tuple[float, float, float],
    vehicle_heading: float,
    point: tuple[float, float, float],
) -> np.ndarray:
    ch, sh = math.cos(vehicle_heading), math.sin(vehicle_heading)
    dx = point[0] - vehicle_position[0]
    dy = point[1] - vehicle_position[1]
    dz = point[2] - vehicle_position[2]
    # world -> body (yaw only; roll/pitch held at zero)
    body = np.array([ch * dx + sh * dy, -sh * dx + ch * dy, dz])
    return camera.body_to_camera() @ body


def project(
    camera: CameraModel,
    vehicle_position: tuple[float, float, float],
    vehicle_heading: float,
    point: tuple[float, float, float],
) -> Point2 | None:
    """World point to pixel, or None when at/behind the image plane."""
    cam = world_to_camera(camera, vehicle_position, vehicle_heading, point)
    if cam[2] <= 1e-9:
        return None
    return Point2(
        camera.cx + camera.focal_px * cam[0] / cam[2],
        camera.cy + camera.focal_px * cam[1] / cam[2],
    )


def extent_corners(
    position: tuple[float, float, float], heading: float, extent: tuple[float, float, float]
) -> list[tuple[float, float, float]]:
    """The 8 corners of the animal's bounding volume, yawed to its heading."""
    ch, sh = math.cos(heading), math.sin(heading)
    ex, ey, ez = extent[0] / 2.0, extent[1] / 2.0, extent[2] / 2.0
    corners = []
    for sx in (-ex, ex):
        for sy in (-ey, ey):
            for sz in (-ez, ez):
                corners.append(
                    (
                        position[0] + ch * sx - sh * sy,
                        position[1] + sh * sx + ch * sy,
                        position[2] + sz,
                    )
                )
    return corners


def gt_bbox(
    camera: CameraModel,
    vehicle_position: tuple[float, float, float],
    vehicle_heading: float,
    animal_position: tuple[float, float, float],
    animal_heading: float,
    extent: tuple[float, float, float],
) -> BBox | None:
    """Ground-truth box: clipped axis-aligned hull of the projected extent
    corners. None when the animal is behind the camera or fully off-screen."""
    us, vs = [], []
    for corner in extent_corners(animal_position, animal_heading, extent):
        p = project(camera, vehicle_position, vehicle_heading, corner)
        if p is None:
            return None
        us.append(p.u)
        vs.append(p.v)
    hull = BBox(min(us), min(vs), max(us) - min(us), max(vs) - min(vs))
    if hull.w <= 0 or hull.h <= 0:
        return None
    return hull.clipped(camera.resolution[0], camera.resolution[1])
