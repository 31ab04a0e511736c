"""The tracker contract and the built-in classical baselines.

Two baselines close the loop without any learned weights and make the
fixed-vs-adaptive appearance dichotomy testable at toy scale:

  * ``fixed-template``: matches the first-frame template forever (recovers
    when the target's appearance returns to its initial one);
  * ``online-filter``: same matcher, but the template is blended toward the
    newest patch after every frame (alpha per frame), so it adapts to
    appearance change at the cost of drift under occluders.

Both search exhaustively with zero-mean normalized cross-correlation on a
grayscale window around the previous box. Everything is deterministic: same
frames in, bit-identical boxes out.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from reefloop.geometry import BBox

MIN_INIT_AREA_PX = 16.0

# grayscale conversion weights (ITU-R BT.601)
_LUMA = np.array([0.299, 0.587, 0.114])


class TrackerError(Exception):
    pass


@dataclass(frozen=True)
class Frame:
    """One video frame: uint8 pixels (h, w) or (h, w, 3) plus a timestamp."""

    pixels: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self):
        if self.pixels.dtype != np.uint8:
            raise ValueError(f"frame pixels must be uint8, got {self.pixels.dtype}")
        if self.pixels.ndim == 2:
            return
        if self.pixels.ndim == 3 and self.pixels.shape[2] in (1, 3):
            return
        raise ValueError(f"frame must be (h,w), (h,w,1) or (h,w,3); got {self.pixels.shape}")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else self.pixels.shape[2]

    def gray(self) -> np.ndarray:
        """Grayscale float64 view of the pixels."""
        if self.pixels.ndim == 2:
            return self.pixels.astype(np.float64)
        if self.pixels.shape[2] == 1:
            return self.pixels[:, :, 0].astype(np.float64)
        return self.pixels.astype(np.float64) @ _LUMA


@dataclass(frozen=True)
class TrackerOutput:
    """Per-frame tracker result. box is None on a no-prediction frame."""

    box: BBox | None
    confidence: float
    latency_ms: float = 0.0
    initializing: bool = False

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence {self.confidence} outside [0,1]")


@dataclass(frozen=True)
class TrackerConfig:
    kind: str = "fixed-template"  # fixed-template | online-filter
    search_radius: int = 40
    template_update_rate: float = 0.0  # alpha; 0 freezes the template
    init_delay_s: float = 0.0  # simulated initial training phase
    # scale search: the box may grow/shrink by scale_step per frame, up to
    # scale_range steps each way (0 disables; pure translation search).
    # Without it the box width carries no range signal and the constant-width
    # servo loop cannot regulate distance.
    scale_step: float = 1.03
    scale_range: int = 1

    def __post_init__(self):
        if self.kind not in ("fixed-template", "online-filter"):
            raise ValueError(f"unknown tracker kind {self.kind!r}")
        if not (0.0 <= self.template_update_rate <= 1.0):
            raise ValueError("template_update_rate must be in [0,1]")
        if self.kind == "fixed-template" and self.template_update_rate != 0.0:
            raise ValueError("fixed-template requires template_update_rate == 0")
        if self.kind == "online-filter" and self.template_update_rate == 0.0:
            raise ValueError("online-filter requires template_update_rate > 0")
        if self.search_radius < 1:
            raise ValueError("search_radius must be >= 1")
        if self.scale_step <= 1.0 or self.scale_range < 0:
            raise ValueError("scale_step must exceed 1.0 and scale_range be >= 0")

    def scales(self) -> tuple[float, ...]:
        """Candidate box scale factors, unit scale first (ties keep size)."""
        steps = [1.0]
        for k in range(1, self.scale_range + 1):
            steps += [self.scale_step**-k, self.scale_step**k]
        return tuple(steps)


def _int_rect(box: BBox, width: int, height: int) -> tuple[int, int, int, int]:
    """Round a box to the integer pixel grid, clamped inside the frame."""
    w = max(1, round(box.w))
    h = max(1, round(box.h))
    x = min(max(0, round(box.x)), width - w)
    y = min(max(0, round(box.y)), height - h)
    return x, y, w, h


def _resample(patch: np.ndarray, h: int, w: int) -> np.ndarray:
    """Bilinear resize. Nearest-neighbor would make a few-percent downscale
    an exact crop of the source, which self-matches at correlation 1.0 and
    lets the scale search collapse the box; bilinear blends neighbors so a
    wrong scale scores strictly below the true one."""
    sh, sw = patch.shape
    if (sh, sw) == (h, w):
        return patch
    ry = np.clip((np.arange(h) + 0.5) * sh / h - 0.5, 0.0, sh - 1.0)
    rx = np.clip((np.arange(w) + 0.5) * sw / w - 0.5, 0.0, sw - 1.0)
    y0 = np.floor(ry).astype(np.intp)
    x0 = np.floor(rx).astype(np.intp)
    y1 = np.minimum(y0 + 1, sh - 1)
    x1 = np.minimum(x0 + 1, sw - 1)
    fy = (ry - y0)[:, None]
    fx = (rx - x0)[None, :]
    top = patch[y0[:, None], x0[None, :]] * (1 - fx) + patch[y0[:, None], x1[None, :]] * fx
    bottom = patch[y1[:, None], x0[None, :]] * (1 - fx) + patch[y1[:, None], x1[None, :]] * fx
    return top * (1 - fy) + bottom * fy


def _ncc_map(search: np.ndarray, template_zero_mean: np.ndarray) -> np.ndarray:
    """Zero-mean NCC of the template against every placement in search."""
    th, tw = template_zero_mean.shape
    windows = sliding_window_view(search, (th, tw))
    num = np.einsum("ijkl,kl->ij", windows, template_zero_mean)
    wsum = np.einsum("ijkl->ij", windows)
    wsq = np.einsum("ijkl,ijkl->ij", windows, windows)
    var = wsq - wsum * wsum / (th * tw)
    np.clip(var, 0.0, None, out=var)
    denom = np.sqrt(var * float(np.sum(template_zero_mean**2)))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(denom > 1e-12, num / denom, 0.0)


class TemplateTracker:
    """Exhaustive NCC template matcher; the built-in tracker contract.

    Call ``init`` once with the target box, then ``track`` per frame. The
    handle is single-owner: concurrent track calls on one instance are not
    supported; separate instances are fully independent.
    """

    needs_pixels = True

    def __init__(self, config: TrackerConfig | None = None):
        self.config = config or TrackerConfig()
        self._template: np.ndarray | None = None  # zero-mean float64
        self._box: BBox | None = None
        self._init_time: float | None = None
        self._frame_shape: tuple[int, int] | None = None

    @property
    def initialized(self) -> bool:
        return self._template is not None

    def init(self, frame: Frame, box: BBox) -> TrackerOutput:
        t0 = time.perf_counter()
        box.validate()
        if box.x < 0 or box.y < 0 or box.x2 > frame.width or box.y2 > frame.height:
            raise TrackerError(f"init box {box} extends outside the {frame.width}x{frame.height} frame")
        if box.area < MIN_INIT_AREA_PX:
            raise TrackerError(f"init box area {box.area:.1f} px^2 below minimum {MIN_INIT_AREA_PX}")
        x, y, w, h = _int_rect(box, frame.width, frame.height)
        patch = frame.gray()[y : y + h, x : x + w]
        self._template = patch - patch.mean()
        self._box = box
        self._init_time = frame.timestamp
        self._frame_shape = (frame.height, frame.width)
        return TrackerOutput(
            box=box,
            confidence=1.0,
            latency_ms=(time.perf_counter() - t0) * 1000.0,
            initializing=self._initializing(frame.timestamp),
        )

    def _initializing(self, timestamp: float) -> bool:
        if self.config.init_delay_s <= 0.0:
            return False
        return (timestamp - self._init_time) <= self.config.init_delay_s

    def track(self, frame: Frame) -> TrackerOutput:
        t0 = time.perf_counter()
        if not self.initialized:
            raise TrackerError("track() before init()")
        if (frame.height, frame.width) != self._frame_shape:
            raise TrackerError(
                f"frame size changed mid-track: {self._frame_shape} -> {(frame.height, frame.width)}"
            )
        if self._initializing(frame.timestamp):
            # simulated training phase: hold the init box, report not ready
            return TrackerOutput(
                box=self._box,
                confidence=1.0,
                latency_ms=(time.perf_counter() - t0) * 1000.0,
                initializing=True,
            )

        gray = frame.gray()
        x, y, w, h = _int_rect(self._box, frame.width, frame.height)
        r = self.config.search_radius
        sx0 = max(0, x - r)
        sy0 = max(0, y - r)
        sx1 = min(frame.width, x + w + r)
        sy1 = min(frame.height, y + h + r)
        search = gray[sy0:sy1, sx0:sx1]

        # exhaustive search over integer offsets and the scale ladder; the
        # first strictly-greater peak wins, so ties keep the current scale
        best = None  # (score, sy, sx, h_s, w_s)
        th, tw = self._template.shape
        for s in self.config.scales():
            h_s = max(4, round(h * s))
            w_s = max(4, round(w * s))
            if h_s > search.shape[0] or w_s > search.shape[1]:
                continue
            tpl = _resample(self._template, h_s, w_s)
            tpl = tpl - tpl.mean()
            ncc = _ncc_map(search, tpl)
            flat_peak = int(np.argmax(ncc))  # first maximum: deterministic
            py, px = np.unravel_index(flat_peak, ncc.shape)
            score = float(ncc[py, px])
            if best is None or score > best[0]:
                best = (score, int(py), int(px), h_s, w_s)

        if best is None:
            raise TrackerError("search window smaller than the template")
        peak, py, px, h_new, w_new = best
        new_x = sx0 + px
        new_y = sy0 + py
        new_box = BBox(float(new_x), float(new_y), float(w_new), float(h_new))

        if self.config.template_update_rate > 0.0:
            a = self.config.template_update_rate
            patch = _resample(gray[new_y : new_y + h_new, new_x : new_x + w_new], th, tw)
            self._template = (1.0 - a) * self._template + a * (patch - patch.mean())

        self._box = new_box
        return TrackerOutput(
            box=new_box,
            confidence=max(0.0, min(1.0, peak)),
            latency_ms=(time.perf_counter() - t0) * 1000.0,
        )

    def template_snapshot(self) -> np.ndarray:
        """Copy of the current (zero-mean) template, for drift diagnostics."""
        if not self.initialized:
            raise TrackerError("no template before init()")
        return self._template.copy()


# --------------------------------------------------------------------------
# Pixel-free diagnostic trackers (metric identities, plumbing tests)
# --------------------------------------------------------------------------


class ReplayTracker:
    """Replays a prerecorded track; the perfect-tracker identity when the
    track is the ground truth."""

    needs_pixels = False

    def __init__(self, track):
        self._track = list(track)
        self._i = 0

    def init(self, frame, box) -> TrackerOutput:
        self._i = 1
        return TrackerOutput(box=box, confidence=1.0)

    def track(self, frame) -> TrackerOutput:
        if self._i >= len(self._track):
            raise TrackerError("replay track exhausted")
        box = self._track[self._i]
        self._i += 1
        return TrackerOutput(box=box, confidence=1.0)


class StaticBoxTracker:
    """Holds the init box forever."""

    needs_pixels = False

    def __init__(self):
        self._box = None

    def init(self, frame, box) -> TrackerOutput:
        self._box = box
        return TrackerOutput(box=box, confidence=1.0)

    def track(self, frame) -> TrackerOutput:
        if self._box is None:
            raise TrackerError("track() before init()")
        return TrackerOutput(box=self._box, confidence=0.5)


class EmptyTracker:
    """Outputs no prediction after the init frame (scores the floor)."""

    needs_pixels = False

    def __init__(self):
        self._box = None

    def init(self, frame, box) -> TrackerOutput:
        self._box = box
        return TrackerOutput(box=box, confidence=1.0)

    def track(self, frame) -> TrackerOutput:
        return TrackerOutput(box=None, confidence=0.0)
