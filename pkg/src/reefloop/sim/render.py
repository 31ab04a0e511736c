"""2.5-D underwater frame renderer.

Textured billboards over a flat seafloor plane, with per-channel exponential
attenuation toward the water color (absorption ordered red >= green >= blue)
and seeded marine-snow dots. Deterministic: same scenario parameters, poses,
and rng state give bit-identical frames. No light transport beyond the
single-scatter mix; the consumers are correlation trackers and the servo
loop, which need photometric structure, not realism.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from reefloop.sim.camera import CameraModel, extent_corners, project
from reefloop.trackers import Frame

SNOW_COLOR = np.array([235.0, 240.0, 245.0])


@lru_cache(maxsize=64)
def make_sprite(seed: int, height_px: int = 32, width_px: int = 48):
    """Procedural animal texture: banded high-contrast body in an ellipse.

    Returns (rgb uint8 (h,w,3), mask bool (h,w)). Cached per seed/size.
    """
    rng = np.random.default_rng(seed)
    h, w = height_px, width_px
    yy, xx = np.mgrid[0:h, 0:w]
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    mask = ((xx - cx) / (w / 2.0)) ** 2 + ((yy - cy) / (h / 2.0)) ** 2 <= 1.0

    base = rng.uniform(40, 215, size=3)
    stripe_freq = rng.uniform(0.15, 0.45)
    phase = rng.uniform(0, 2 * math.pi)
    bands = 0.5 + 0.5 * np.sin(xx * stripe_freq * 2 * math.pi / 4.0 + phase)
    speckle = rng.uniform(-40, 40, size=(h, w))
    rgb = np.empty((h, w, 3))
    for c in range(3):
        rgb[:, :, c] = base[c] + 80.0 * (bands - 0.5) * (1 if c % 2 == 0 else -1) + speckle
    rgb = np.clip(rgb, 0, 255).astype(np.uint8)
    return rgb, mask


@lru_cache(maxsize=16)
def _floor_tile(seed: int, size: int = 256) -> np.ndarray:
    """Sandy seafloor texture tile (size, size, 3) float64."""
    rng = np.random.default_rng(seed)
    base = np.array([152.0, 138.0, 110.0])
    speckle = rng.uniform(-28.0, 28.0, size=(size, size, 1))
    ripples = 12.0 * np.sin(np.arange(size)[None, :, None] * 0.35)
    return np.clip(base[None, None, :] + speckle + ripples, 0, 255)


@lru_cache(maxsize=8)
def _ray_grid(camera: CameraModel) -> np.ndarray:
    """Unit ray direction per pixel in the body frame, shape (h, w, 3)."""
    w, h = camera.resolution
    u = (np.arange(w) - camera.cx) / camera.focal_px
    v = (np.arange(h) - camera.cy) / camera.focal_px
    uu, vv = np.meshgrid(u, v)
    cam_dirs = np.stack([uu, vv, np.ones_like(uu)], axis=-1)
    cam_dirs /= np.linalg.norm(cam_dirs, axis=-1, keepdims=True)
    # rows of body_to_camera are camera axes in body coords
    return cam_dirs @ camera.body_to_camera()


def _attenuate(color, beta, rng_range, water_color):
    """Mix a color toward the water color by 1 - exp(-beta_c * range)."""
    att = np.exp(-np.asarray(beta) * rng_range)
    return np.asarray(color) * att + np.asarray(water_color) * (1.0 - att)


def _hull_px(camera, vpos, vheading, position, heading, extent):
    """Unclipped projected hull of the extent corners plus range, or None."""
    us, vs = [], []
    for corner in extent_corners(position, heading, extent):
        p = project(camera, vpos, vheading, corner)
        if p is None:
            return None
        us.append(p.u)
        vs.append(p.v)
    rng_m = math.dist(vpos, position)
    return min(us), min(vs), max(us), max(vs), rng_m


def _draw_billboard(img, camera, sprite_rgb, sprite_mask, hull, beta, water_color):
    w_img, h_img = camera.resolution
    u0, v0, u1, v1, rng_m = hull
    x0, x1 = int(math.floor(u0)), int(math.ceil(u1))
    y0, y1 = int(math.floor(v0)), int(math.ceil(v1))
    if x1 <= 0 or y1 <= 0 or x0 >= w_img or y0 >= h_img or x1 - x0 < 1 or y1 - y0 < 1:
        return
    dx0, dx1 = max(x0, 0), min(x1, w_img)
    dy0, dy1 = max(y0, 0), min(y1, h_img)
    sh, sw = sprite_mask.shape
    cols = ((np.arange(dx0, dx1) - x0) * sw) // max(1, x1 - x0)
    rows = ((np.arange(dy0, dy1) - y0) * sh) // max(1, y1 - y0)
    src_rgb = sprite_rgb[rows[:, None], cols[None, :]].astype(np.float64)
    src_mask = sprite_mask[rows[:, None], cols[None, :]]
    shaded = _attenuate(src_rgb, beta, rng_m, water_color)
    region = img[dy0:dy1, dx0:dx1]
    region[src_mask] = shaded[src_mask]


def _draw_snow(img, camera, beta, water_color, density, max_range, rng):
    if density <= 0.0:
        return
    w, h = camera.resolution
    half_u = (w / 2.0) / camera.focal_px
    half_v = (h / 2.0) / camera.focal_px
    volume = (4.0 / 3.0) * half_u * half_v * max_range**3
    n = int(rng.poisson(density * volume))
    if n == 0:
        return
    us = rng.uniform(0, w, size=n)
    vs = rng.uniform(0, h, size=n)
    zs = max_range * np.cbrt(rng.uniform(0.04, 1.0, size=n))
    order = np.argsort(zs)[::-1]  # far first
    for i in order:
        z = float(zs[i])
        size = 3 if z < max_range * 0.2 else (2 if z < max_range * 0.5 else 1)
        x, y = int(us[i]), int(vs[i])
        color = _attenuate(SNOW_COLOR, beta, z, water_color)
        img[y : y + size, x : x + size] = color


def render_frame(
    scenario,
    vehicle_position,
    vehicle_heading,
    animal_state,
    distractor_states=(),
    rng: np.random.Generator | None = None,
    timestamp: float = 0.0,
) -> Frame:
    """Compose seafloor, sprites, and snow into one RGB frame."""
    camera = scenario.camera
    w, h = camera.resolution
    beta = np.asarray(scenario.beta, dtype=np.float64)
    water = np.asarray(scenario.water_color, dtype=np.float64)
    rng = rng or np.random.default_rng(scenario.seed)

    # background: water color everywhere, seafloor plane where rays hit it
    img = np.empty((h, w, 3), dtype=np.float64)
    img[:] = water

    dirs = _ray_grid(camera)
    ch, sh = math.cos(vehicle_heading), math.sin(vehicle_heading)
    dx = ch * dirs[:, :, 0] - sh * dirs[:, :, 1]
    dy = sh * dirs[:, :, 0] + ch * dirs[:, :, 1]
    dz = dirs[:, :, 2]

    depth_below = scenario.seafloor_depth - vehicle_position[2]
    hits = dz > 1e-6
    if depth_below > 0 and np.any(hits):
        t = np.where(hits, depth_below / np.where(hits, dz, 1.0), np.inf)
        visible = hits & (t < scenario.floor_visibility_m)
        if np.any(visible):
            tv = t[visible]
            hx = vehicle_position[0] + tv * dx[visible]
            hy = vehicle_position[1] + tv * dy[visible]
            tile = _floor_tile(scenario.seed)
            n = tile.shape[0]
            ti = (hx * 24.0).astype(np.int64) % n
            tj = (hy * 24.0).astype(np.int64) % n
            tex = tile[ti, tj]
            att = np.exp(-tv[:, None] * beta[None, :])
            img[visible] = tex * att + water[None, :] * (1.0 - att)

    # billboards, far to near
    bodies = [(animal_state, scenario.animal_sprite_seed, scenario.animal_extent)]
    for st, spec in zip(distractor_states, scenario.distractors):
        bodies.append((st, spec.sprite_seed, spec.extent))
    drawable = []
    for st, sprite_seed, extent in bodies:
        hull = _hull_px(
            camera, vehicle_position, vehicle_heading, st.position, st.heading, extent
        )
        if hull is not None:
            drawable.append((hull[4], hull, sprite_seed))
    for _, hull, sprite_seed in sorted(drawable, key=lambda d: -d[0]):
        rgb, mask = make_sprite(sprite_seed)
        _draw_billboard(img, camera, rgb, mask, hull, beta, water)

    _draw_snow(img, camera, beta, water, scenario.snow_density, scenario.snow_max_range_m, rng)

    return Frame(pixels=np.clip(np.rint(img), 0, 255).astype(np.uint8), timestamp=timestamp)
