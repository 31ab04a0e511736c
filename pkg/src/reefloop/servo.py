"""Image-space visual servoing: PID loops on box errors plus the mode machine.

The control scheme holds the bounding-box width at the value captured when
the operator initialized the tracker (the monocular range proxy: no target
size prior exists, and width is steadier than height or area), yaws to
center the target horizontally, and heaves to center it vertically. All
errors are normalized to image/reference units so the gains are
resolution-independent. An altitude floor protects the seabed: inside a
safety band above the floor, downward authority tapers to zero; below the
floor, heave is overridden with a proportional upward correction. The floor
is enforced in every mode, including manual passthrough.

Sign conventions: e_x > 0 means the target is right of center and yaw > 0
turns right; e_y > 0 means the target is below center and commands descent;
e_w > 0 means the box is narrower than the reference (target far) and
commands forward surge; heave command > 0 ascends.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from reefloop.geometry import BBox
from reefloop.vehicle import ControlCommand, SensorPacket, clamp


@dataclass(frozen=True)
class PIDGains:
    kp: float = 1.2
    ki: float = 0.05
    kd: float = 0.1

    def __post_init__(self):
        if min(self.kp, self.ki, self.kd) < 0:
            raise ValueError("PID gains must be >= 0")


@dataclass
class PIDState:
    integral: float = 0.0
    prev_error: float = 0.0


def pid_step(gains: PIDGains, state: PIDState, error: float, dt: float, integral_clamp: float = 0.5) -> float:
    """One incremental PID update; the integral is clamped symmetrically."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    state.integral = clamp(state.integral + error * dt, -integral_clamp, integral_clamp)
    derivative = (error - state.prev_error) / dt
    state.prev_error = error
    return gains.kp * error + gains.ki * state.integral + gains.kd * derivative


def compute_errors(box: BBox, frame_dims: tuple[int, int], reference_width: float):
    """Normalized image errors (e_x, e_y, e_w) for a tracked box."""
    if reference_width <= 0:
        raise ValueError("reference width must be positive")
    w, h = frame_dims
    c = box.center
    e_x = (c.u - w / 2.0) / w
    e_y = (c.v - h / 2.0) / h
    e_w = (reference_width - box.w) / reference_width
    return e_x, e_y, e_w


class Mode(enum.Enum):
    MANUAL = "manual"
    INITIALIZING = "initializing"
    TRACKING = "tracking"
    LOST = "lost"


class Event(enum.Enum):
    INIT_BOX = "init_box"  # operator drew a box
    READY = "ready"  # tracker finished its training phase
    TRACK_OK = "track_ok"  # confident frame
    TRACK_LOW = "track_low"  # sub-threshold frame, patience not yet exhausted
    TRACK_LOST = "track_lost"  # patience exhausted
    OVERRIDE = "override"  # operator took the sticks
    RELEASE_TRACKING = "release_tracking"  # operator released; tracker ready
    RELEASE_WAIT = "release_wait"  # released; tracker still initializing
    RELEASE_NONE = "release_none"  # released; no tracker initialized
    REINIT = "reinit"  # operator asked for re-acquisition


# Total transition table: every (mode, event) pair is defined.
TRANSITIONS: dict[tuple[Mode, Event], Mode] = {}
for _m in Mode:
    for _e in Event:
        TRANSITIONS[(_m, _e)] = _m  # default: stay
for _m in Mode:
    TRANSITIONS[(_m, Event.INIT_BOX)] = Mode.INITIALIZING
    TRANSITIONS[(_m, Event.OVERRIDE)] = Mode.MANUAL
    TRANSITIONS[(_m, Event.REINIT)] = Mode.INITIALIZING
TRANSITIONS[(Mode.INITIALIZING, Event.READY)] = Mode.TRACKING
TRANSITIONS[(Mode.TRACKING, Event.TRACK_LOST)] = Mode.LOST
TRANSITIONS[(Mode.MANUAL, Event.RELEASE_TRACKING)] = Mode.TRACKING
TRANSITIONS[(Mode.MANUAL, Event.RELEASE_WAIT)] = Mode.INITIALIZING


@dataclass(frozen=True)
class ServoConfig:
    reference_width: float | None = None  # captured from the init box when None
    yaw: PIDGains = field(default_factory=PIDGains)
    heave: PIDGains = field(default_factory=PIDGains)
    surge: PIDGains = field(default_factory=PIDGains)
    integral_clamp: float = 0.5
    altitude_floor_m: float = 0.75
    floor_band_m: float = 0.5  # downward authority tapers inside this band
    floor_gain: float = 2.0  # upward correction per meter below the floor
    loss_confidence_threshold: float = 0.4
    loss_patience_frames: int = 5

    def __post_init__(self):
        if not (0.5 <= self.altitude_floor_m <= 1.0):
            raise ValueError("altitude floor must lie in [0.5, 1.0] m")
        if not (0.0 <= self.loss_confidence_threshold <= 1.0):
            raise ValueError("loss confidence threshold must be in [0,1]")
        if self.loss_patience_frames < 1:
            raise ValueError("loss patience must be >= 1")


class ModeMachine:
    """The Manual/Initializing/Tracking/Lost state machine.

    Operator events arrive through ``apply``; per-frame confidence is folded
    in through ``observe_frame`` which derives TRACK_* events from the loss
    threshold and patience counter.
    """

    def __init__(self, config: ServoConfig, t: float = 0.0):
        self.config = config
        self.mode = Mode.MANUAL
        self.low_streak = 0
        self.transitions: list[tuple[float, str]] = [(t, Mode.MANUAL.value)]

    def apply(self, event: Event, t: float) -> Mode:
        new = TRANSITIONS[(self.mode, event)]
        if new is not self.mode:
            self.low_streak = 0
            self.transitions.append((t, new.value))
        self.mode = new
        return new

    def observe_frame(self, confidence: float, initializing: bool, t: float) -> Mode:
        if self.mode is Mode.INITIALIZING and not initializing:
            self.apply(Event.READY, t)
        if self.mode is not Mode.TRACKING:
            return self.mode
        if confidence < self.config.loss_confidence_threshold:
            self.low_streak += 1
            if self.low_streak >= self.config.loss_patience_frames:
                return self.apply(Event.TRACK_LOST, t)
            return self.apply(Event.TRACK_LOW, t)
        self.low_streak = 0
        return self.apply(Event.TRACK_OK, t)


class ServoController:
    """Owns the PID loops, reference width, and mode machine for one episode.

    Single-owner: called once per control tick by the loop that owns the
    vehicle. Operator events are applied between ticks.
    """

    def __init__(self, config: ServoConfig | None = None, t: float = 0.0):
        self.config = config or ServoConfig()
        self.machine = ModeMachine(self.config, t)
        self.reference_width: float | None = self.config.reference_width
        self.pids = {"yaw": PIDState(), "heave": PIDState(), "surge": PIDState()}
        self.manual_command = ControlCommand()

    @property
    def mode(self) -> Mode:
        return self.machine.mode

    # -- operator events ---------------------------------------------------

    def on_init_box(self, box: BBox, t: float) -> None:
        # reference width is re-captured on every (re)initialization
        self.reference_width = box.w
        self._reset_pids()
        self.machine.apply(Event.INIT_BOX, t)

    def on_override(self, command: ControlCommand, t: float) -> None:
        self.manual_command = command
        self.machine.apply(Event.OVERRIDE, t)

    def on_release(self, t: float, tracker_initialized: bool, tracker_ready: bool) -> None:
        if not tracker_initialized:
            event = Event.RELEASE_NONE
        elif tracker_ready:
            event = Event.RELEASE_TRACKING
        else:
            event = Event.RELEASE_WAIT
        self.machine.apply(event, t)

    def on_reinit(self, t: float) -> None:
        self._reset_pids()
        self.machine.apply(Event.REINIT, t)

    def _reset_pids(self) -> None:
        for state in self.pids.values():
            state.integral = 0.0
            state.prev_error = 0.0

    # -- per-tick control ----------------------------------------------------

    def step(
        self,
        box: BBox | None,
        confidence: float,
        initializing: bool,
        sensors: SensorPacket,
        dt: float,
        frame_dims: tuple[int, int],
        t: float,
    ) -> tuple[ControlCommand, Mode]:
        """One control tick: fold in the tracker frame, emit a command."""
        if self.mode in (Mode.INITIALIZING, Mode.TRACKING):
            if box is None:
                self.machine.observe_frame(0.0, initializing, t)
            else:
                self.machine.observe_frame(confidence, initializing, t)

        if self.mode is Mode.TRACKING and box is not None:
            e_x, e_y, e_w = compute_errors(box, frame_dims, self.reference_width)
            cfg = self.config
            yaw = pid_step(cfg.yaw, self.pids["yaw"], e_x, dt, cfg.integral_clamp)
            heave = -pid_step(cfg.heave, self.pids["heave"], e_y, dt, cfg.integral_clamp)
            surge = pid_step(cfg.surge, self.pids["surge"], e_w, dt, cfg.integral_clamp)
            command = ControlCommand(surge=surge, sway=0.0, heave=heave, yaw=yaw)
        elif self.mode is Mode.MANUAL:
            command = self.manual_command
        else:
            command = ControlCommand()

        return self._enforce_floor(command, sensors), self.mode

    def _enforce_floor(self, command: ControlCommand, sensors: SensorPacket) -> ControlCommand:
        cfg = self.config
        altitude = sensors.dvl_altitude
        if altitude < cfg.altitude_floor_m:
            correction = clamp(cfg.floor_gain * (cfg.altitude_floor_m - altitude), 0.0, 1.0)
            heave = max(command.heave, correction, 0.0)
            return ControlCommand(command.surge, command.sway, heave, command.yaw)
        band_top = cfg.altitude_floor_m + cfg.floor_band_m
        if altitude < band_top and command.heave < 0.0:
            scale = (altitude - cfg.altitude_floor_m) / cfg.floor_band_m
            return ControlCommand(command.surge, command.sway, command.heave * scale, command.yaw)
        return command
