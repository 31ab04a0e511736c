"""Scripted test sequences and reference scenarios.

The occlusion script is a hand-built 2D frame sequence (no 3D world):
a textured target on a noise background is hidden under a distractor
texture for a fixed window while its true position slides sideways, then
reappears with its exact initial appearance. It is the toy-scale probe for
the fixed-template vs online-template tradeoff: the fixed matcher re-locks
once the appearance returns, while an adapting template has absorbed the
distractor and keeps drifting.

The reference scenarios parameterize the closed-loop floor checks: an easy
plain-background midwater chase, and the same chase with a teleport event
that forces a track loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from reefloop.geometry import BBox
from reefloop.sim.render import make_sprite
from reefloop.sim.scenario import BodySpec, Scenario, TeleportEvent, chase_start
from reefloop.sim.motion import ConstantSwim
from reefloop.trackers import Frame


@dataclass(frozen=True)
class OcclusionScript:
    frames: tuple[Frame, ...]
    gt: tuple[BBox, ...]
    occlusion_start: int  # first hidden frame
    occlusion_end: int  # first restored frame
    search_radius: int


def occlusion_script(
    seed: int = 0,
    size: tuple[int, int] = (240, 320),
    pre_frames: int = 10,
    occluded_frames: int = 20,
    post_frames: int = 30,
    slide_px_per_frame: int = 3,
) -> OcclusionScript:
    """Build the scripted occluder sequence (deterministic per seed)."""
    h, w = size
    # uniform background: zero-mean correlation is exactly 0 off-texture, so
    # the matcher stays pinned to the occluder band instead of wandering to
    # spurious noise peaks out of re-acquisition range
    background = np.full((h, w, 3), 100, dtype=np.uint8)
    target_rgb, target_mask = make_sprite(seed + 1, 30, 40)
    occluder_rgb, _ = make_sprite(seed + 2, 44, 40 + slide_px_per_frame * occluded_frames + 20)

    x0, y0 = 100, 100
    x_end = x0 + slide_px_per_frame * occluded_frames

    def compose(target_x: int | None, occluded: bool, t: float) -> Frame:
        px = background.copy()
        if target_x is not None:
            region = px[y0 : y0 + 30, target_x : target_x + 40]
            region[target_mask] = target_rgb[target_mask]
        if occluded:
            oh, ow = occluder_rgb.shape[:2]
            px[y0 - 7 : y0 - 7 + oh, x0 - 10 : x0 - 10 + ow] = occluder_rgb
        return Frame(pixels=px, timestamp=t)

    frames = []
    gt = []
    k = 0
    for _ in range(pre_frames):
        frames.append(compose(x0, False, 0.1 * k))
        gt.append(BBox(x0, y0, 40, 30))
        k += 1
    for i in range(occluded_frames):
        x = x0 + slide_px_per_frame * (i + 1)
        frames.append(compose(None, True, 0.1 * k))
        gt.append(BBox(x, y0, 40, 30))
        k += 1
    for _ in range(post_frames):
        frames.append(compose(x_end, False, 0.1 * k))
        gt.append(BBox(x_end, y0, 40, 30))
        k += 1

    return OcclusionScript(
        frames=tuple(frames),
        gt=tuple(gt),
        occlusion_start=pre_frames,
        occlusion_end=pre_frames + occluded_frames,
        search_radius=80,
    )


def midwater_easy_scenario(seed: int = 7, duration_s: float = 60.0) -> Scenario:
    """Plain-background constant-swim chase; the synthetic easy case.

    The vehicle starts in steady chase geometry (target centered on the
    tilted optical axis at 4 m) and the surge loop carries enough integral
    authority to match the target's cruise speed with zero width error.
    """
    from reefloop.servo import PIDGains, ServoConfig

    animal_start = (4.0 * 0.8660254037844387, 0.0, 8.0)  # on-axis at 4 m, tilt 30 deg
    vehicle_start, heading = chase_start(animal_start, 4.0)
    return Scenario(
        id="midwater-easy",
        seed=seed,
        duration_s=duration_s,
        frame_rate_hz=10.0,
        resolution=(320, 240),
        seafloor_depth=60.0,
        beta=(0.18, 0.05, 0.02),
        snow_density=0.0,
        floor_visibility_m=25.0,
        animal=BodySpec(
            sprite_seed=3,
            extent=(0.7, 0.55, 0.45),
            start=animal_start,
            heading=0.0,
            motion=ConstantSwim(speed=0.2, turn_noise_std=0.0),
        ),
        vehicle_start=vehicle_start,
        vehicle_heading=heading,
        servo=ServoConfig(surge=PIDGains(1.2, 0.3, 0.1), integral_clamp=1.0),
    )


def teleport_scenario(seed: int = 7, duration_s: float = 45.0, jump_at_s: float = 20.0) -> Scenario:
    """The easy chase plus one instantaneous jump away along the line of
    sight: the apparent size halves in one frame, far beyond the scale
    ladder, so the track is lost; the target stays in view, so the scripted
    operator can re-acquire and close the intervention interval."""
    base = midwater_easy_scenario(seed=seed, duration_s=duration_s)
    return base.with_overrides(
        id="teleport",
        events=(TeleportEvent(t=jump_at_s, offset=(3.0, 0.0, 1.7)),),
    )
