"""reefloop: marine animal tracking benchmark + closed-loop AUV servo simulator.

Library layout:
    geometry   box arithmetic and per-frame error functionals
    dataset    on-disk sequence format, interpolation, auto attributes
    metrics    success/precision/normalized-precision scoring and reports
    trackers   the tracker contract and the built-in template matchers
    bridge     wire protocol client for external trackers
    sim        synthetic world: motion models, pinhole camera, renderer
    vehicle    AUV dynamics, sensors, dead reckoning
    servo      visual-servoing PID loops and the mode machine
    session    benchmark runner, episode loop, operator channel, exports
"""

from reefloop.geometry import BBox, Point2, center_error, iou, normalized_center_error

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "Point2",
    "iou",
    "center_error",
    "normalized_center_error",
    "__version__",
]
