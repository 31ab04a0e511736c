"""On-disk sequence format, ingestion/validation, and label processing.

Dataset layout (one directory per sequence):

    <root>/<seq_id>/meta.toml          id, fps, resolution, animal, habitat,
                                       behavior, attribute flags
    <root>/<seq_id>/groundtruth.txt    one `x,y,w,h` line per frame
    <root>/<seq_id>/keyframes.txt      optional `frame_index,x,y,w,h` lines;
                                       groundtruth must equal its interpolation
    <root>/<seq_id>/frames/%06d.png    optional image frames

SV/ARC/LR flags are recomputed from the dense track on load; a stored value
that disagrees is reported as a warning, and the computed value wins.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import tomli

from reefloop.geometry import BBox

log = logging.getLogger(__name__)

MIN_FPS = 10.0
MAX_KEYFRAME_GAP = 15
LOW_RES_AREA_PX = 1000.0
RATIO_BAND = (0.5, 2.0)

# Short attribute code -> AttributeSet field. SV/ARC/LR are computed from the
# track; the rest are declared in meta.toml.
ATTRIBUTE_FIELDS = {
    "SV": "scale_variation",
    "ARC": "aspect_ratio_change",
    "LR": "low_resolution",
    "PO": "partial_occlusion",
    "DB": "difficult_background",
    "SO": "similar_objects",
    "MW": "midwater",
    "SB": "seabed",
    "CR": "coral_reef",
    "SG": "seagrass",
    "IS": "intermittent_sand",
    "AL": "active_lighting",
    "PL": "passive_lighting",
}
ATTRIBUTE_CODES = tuple(ATTRIBUTE_FIELDS)
AUTO_CODES = ("SV", "ARC", "LR")
MANUAL_CODES = tuple(c for c in ATTRIBUTE_CODES if c not in AUTO_CODES)


class DatasetError(Exception):
    """A sequence directory violates the on-disk format or an invariant."""


@dataclass(frozen=True)
class AttributeSet:
    """The thirteen per-sequence challenge/environment flags."""

    scale_variation: bool = False
    aspect_ratio_change: bool = False
    low_resolution: bool = False
    partial_occlusion: bool = False
    difficult_background: bool = False
    similar_objects: bool = False
    midwater: bool = False
    seabed: bool = False
    coral_reef: bool = False
    seagrass: bool = False
    intermittent_sand: bool = False
    active_lighting: bool = False
    passive_lighting: bool = False

    def __post_init__(self):
        if self.active_lighting and self.passive_lighting:
            raise ValueError("AL and PL are mutually exclusive lighting regimes")
        if (self.coral_reef or self.seagrass or self.intermittent_sand) and not self.seabed:
            raise ValueError("CR/SG/IS are seabed sub-categories and require SB")

    def __getitem__(self, code: str) -> bool:
        return getattr(self, ATTRIBUTE_FIELDS[code])

    def codes(self) -> tuple[str, ...]:
        """Enabled attribute codes, in canonical order."""
        return tuple(c for c in ATTRIBUTE_CODES if self[c])

    def as_dict(self) -> dict[str, bool]:
        return {c: self[c] for c in ATTRIBUTE_CODES}

    @classmethod
    def from_codes(cls, codes, **overrides) -> "AttributeSet":
        kwargs = {ATTRIBUTE_FIELDS[c]: True for c in codes}
        kwargs.update(overrides)
        return cls(**kwargs)


@dataclass(frozen=True)
class KeyframeTrack:
    """Sparse hand labels: (frame_index, box) pairs at strictly increasing
    indices starting at 0. Gaps above MAX_KEYFRAME_GAP draw a warning (the
    labeling guideline, not a format constraint)."""

    entries: tuple[tuple[int, BBox], ...]

    def __post_init__(self):
        if not self.entries:
            raise ValueError("keyframe track is empty")
        indices = [i for i, _ in self.entries]
        if indices[0] != 0:
            raise ValueError(f"first keyframe must be at frame 0, got {indices[0]}")
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ValueError(f"keyframe indices not strictly increasing: {indices}")
        for a, b in zip(indices, indices[1:]):
            if b - a > MAX_KEYFRAME_GAP:
                log.warning("keyframe gap %d..%d exceeds %d frames", a, b, MAX_KEYFRAME_GAP)
        for _, box in self.entries:
            box.validate()


@dataclass(frozen=True)
class SequenceRecord:
    """One dataset sequence: metadata plus the dense ground-truth track."""

    id: str
    fps: float
    resolution: tuple[int, int]
    animal: str
    habitat: str
    behavior: str
    track: tuple[BBox, ...]
    attributes: AttributeSet
    frame_source: Path | None = None

    def __post_init__(self):
        if self.fps < MIN_FPS:
            raise ValueError(f"{self.id}: fps {self.fps} below the {MIN_FPS} fps minimum")
        if not self.track:
            raise ValueError(f"{self.id}: empty track")
        for box in self.track:
            box.validate()

    @property
    def frame_count(self) -> int:
        return len(self.track)

    @property
    def duration_s(self) -> float:
        return self.frame_count / self.fps

    def frame_path(self, index: int) -> Path:
        if self.frame_source is None:
            raise DatasetError(f"{self.id}: sequence has no image frames on disk")
        return self.frame_source / f"{index:06d}.png"


def interpolate_track(keyframes: KeyframeTrack, frame_count: int) -> list[BBox]:
    """Densify sparse keyframes by per-component linear interpolation.

    Keyframes are reproduced exactly; frames after the last keyframe hold its
    box. ``frame_count`` must exceed the last keyframe index.
    """
    last_index = keyframes.entries[-1][0]
    if frame_count <= last_index:
        raise ValueError(f"frame_count {frame_count} <= last keyframe index {last_index}")
    track: list[BBox] = []
    entries = keyframes.entries
    seg = 0
    for k in range(frame_count):
        while seg + 1 < len(entries) and entries[seg + 1][0] <= k:
            seg += 1
        i, bi = entries[seg]
        if seg + 1 == len(entries):
            track.append(bi)
            continue
        j, bj = entries[seg + 1]
        if k == i:
            track.append(bi)
            continue
        t = (k - i) / (j - i)
        track.append(
            BBox(
                bi.x + (bj.x - bi.x) * t,
                bi.y + (bj.y - bi.y) * t,
                bi.w + (bj.w - bi.w) * t,
                bi.h + (bj.h - bi.h) * t,
            )
        )
    return track


def compute_auto_attributes(track) -> dict[str, bool]:
    """Derive the SV/ARC/LR flags from a dense track.

    SV: some frame's area ratio vs frame 0 falls strictly outside [0.5, 2].
    ARC: same, for the aspect-ratio ratio. LR: some frame's box area is
    strictly below 1000 px^2. Boundary values do not trigger.
    """
    if not track:
        raise ValueError("empty track")
    lo, hi = RATIO_BAND
    b0 = track[0]
    area0 = b0.area
    aspect0 = b0.aspect
    sv = arc = lr = False
    for b in track:
        ra = b.area / area0
        rr = b.aspect / aspect0
        sv = sv or ra < lo or ra > hi
        arc = arc or rr < lo or rr > hi
        lr = lr or b.area < LOW_RES_AREA_PX
    # plain bools even when the box fields are numpy scalars
    return {"SV": bool(sv), "ARC": bool(arc), "LR": bool(lr)}


def resample_timeline(track, src_fps: float, dst_fps: float) -> list:
    """Subsample a dense per-frame list from src_fps down to dst_fps.

    Output frame t maps to the nearest source index t*src_fps/dst_fps; the
    output holds ceil(len*dst_fps/src_fps) frames. Upsampling is refused.
    """
    if src_fps <= 0 or dst_fps <= 0:
        raise ValueError("frame rates must be positive")
    if dst_fps > src_fps:
        raise ValueError(f"cannot upsample {src_fps} fps to {dst_fps} fps")
    n = len(track)
    n_out = math.ceil(n * dst_fps / src_fps)
    out = []
    for t in range(n_out):
        src = min(n - 1, math.floor(t * src_fps / dst_fps + 0.5))
        out.append(track[src])
    return out


def scale_annotations(track, src_res: tuple[int, int], dst_res: tuple[int, int]) -> list[BBox]:
    """Rescale boxes from one image resolution to another, per axis."""
    if min(*src_res, *dst_res) <= 0:
        raise ValueError("resolutions must be positive")
    sx = dst_res[0] / src_res[0]
    sy = dst_res[1] / src_res[1]
    return [b.scaled(sx, sy) for b in track]


# --------------------------------------------------------------------------
# On-disk I/O
# --------------------------------------------------------------------------


def _parse_box_line(line: str, path: Path, lineno: int, n_fields: int = 4) -> list[float]:
    parts = line.split(",")
    if len(parts) != n_fields:
        raise DatasetError(f"{path}:{lineno}: expected {n_fields} comma-separated values, got {line!r}")
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise DatasetError(f"{path}:{lineno}: {exc}") from None


def read_groundtruth(path: Path) -> list[BBox]:
    if not path.is_file():
        raise DatasetError(f"missing ground-truth file {path}")
    track = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        x, y, w, h = _parse_box_line(line.strip(), path, lineno)
        box = BBox(x, y, w, h)
        try:
            box.validate()
        except ValueError as exc:
            raise DatasetError(f"{path}:{lineno}: {exc}") from None
        track.append(box)
    if not track:
        raise DatasetError(f"{path}: no frames")
    return track


def read_keyframes(path: Path) -> KeyframeTrack:
    entries = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        idx, x, y, w, h = _parse_box_line(line.strip(), path, lineno, n_fields=5)
        if idx != int(idx):
            raise DatasetError(f"{path}:{lineno}: frame index must be an integer")
        entries.append((int(idx), BBox(x, y, w, h)))
    try:
        return KeyframeTrack(tuple(entries))
    except ValueError as exc:
        raise DatasetError(f"{path}: {exc}") from None


def _load_meta(path: Path) -> dict:
    if not path.is_file():
        raise DatasetError(f"missing {path}")
    with open(path, "rb") as f:
        try:
            return tomli.load(f)
        except tomli.TOMLDecodeError as exc:
            raise DatasetError(f"{path}: {exc}") from None


def load_sequence(seq_dir: Path) -> SequenceRecord:
    """Parse and validate one sequence directory."""
    seq_dir = Path(seq_dir)
    meta = _load_meta(seq_dir / "meta.toml")
    try:
        seq_id = str(meta.get("id", seq_dir.name))
        fps = float(meta["fps"])
        res_w, res_h = (int(v) for v in meta["resolution"])
        animal = str(meta.get("animal", "unknown"))
        habitat = str(meta.get("habitat", "unknown"))
        behavior = str(meta.get("behavior", "unknown"))
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetError(f"{seq_dir / 'meta.toml'}: bad or missing field: {exc!r}") from None

    track = read_groundtruth(seq_dir / "groundtruth.txt")

    kf_path = seq_dir / "keyframes.txt"
    if kf_path.is_file():
        keyframes = read_keyframes(kf_path)
        dense = interpolate_track(keyframes, len(track))
        for k, (a, b) in enumerate(zip(dense, track)):
            if any(abs(u - v) > 1e-6 for u, v in zip(a.as_tuple(), b.as_tuple())):
                raise DatasetError(
                    f"{seq_dir.name}: groundtruth.txt frame {k} {b.as_tuple()} does not match "
                    f"keyframe interpolation {a.as_tuple()}"
                )

    declared = {str(k).upper(): bool(v) for k, v in meta.get("attributes", {}).items()}
    unknown = set(declared) - set(ATTRIBUTE_CODES)
    if unknown:
        raise DatasetError(f"{seq_dir.name}: unknown attribute codes {sorted(unknown)}")

    auto = compute_auto_attributes(track)
    for code, computed in auto.items():
        if code in declared and declared[code] != computed:
            log.warning(
                "%s: stored %s=%s disagrees with value computed from the track (%s); using computed",
                seq_id, code, declared[code], computed,
            )
    flags = {ATTRIBUTE_FIELDS[c]: declared.get(c, False) for c in MANUAL_CODES}
    flags.update({ATTRIBUTE_FIELDS[c]: v for c, v in auto.items()})
    try:
        attributes = AttributeSet(**flags)
    except ValueError as exc:
        raise DatasetError(f"{seq_id}: {exc}") from None

    frames_dir = seq_dir / "frames"
    frame_source = None
    if frames_dir.is_dir():
        n_frames = len(list(frames_dir.glob("*.png")))
        if n_frames != len(track):
            raise DatasetError(
                f"{seq_id}: {n_frames} image frames but {len(track)} ground-truth boxes"
            )
        frame_source = frames_dir

    try:
        return SequenceRecord(
            id=seq_id,
            fps=fps,
            resolution=(res_w, res_h),
            animal=animal,
            habitat=habitat,
            behavior=behavior,
            track=tuple(track),
            attributes=attributes,
            frame_source=frame_source,
        )
    except ValueError as exc:
        raise DatasetError(f"{seq_id}: {exc}") from None


def load_dataset(root: Path) -> list[SequenceRecord]:
    """Load every sequence directory under ``root``, sorted by id."""
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"dataset root {root} does not exist")
    seq_dirs = sorted(d for d in root.iterdir() if d.is_dir() and (d / "meta.toml").is_file())
    if not seq_dirs:
        raise DatasetError(f"no sequence directories under {root}")
    return [load_sequence(d) for d in seq_dirs]


def _toml_value(v) -> str:
    if hasattr(v, "item") and not isinstance(v, (str, bytes)):
        v = v.item()  # numpy scalars
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    if isinstance(v, str):
        s = v.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{s}"'
    raise TypeError(f"cannot serialize {type(v).__name__} to TOML: {v!r}")


def dump_toml(table: dict, prefix: str = "") -> str:
    """Serialize a dict of scalars/arrays with nested sub-tables to TOML."""
    top = [(k, v) for k, v in table.items() if not isinstance(v, dict)]
    subs = [(k, v) for k, v in table.items() if isinstance(v, dict)]
    lines = [f"{k} = {_toml_value(v)}" for k, v in top]
    for name, sub in subs:
        dotted = f"{prefix}{name}"
        lines += ["", f"[{dotted}]", dump_toml(sub, prefix=f"{dotted}.").rstrip("\n")]
    return "\n".join(lines) + "\n"


def save_sequence(record: SequenceRecord, root: Path) -> Path:
    """Write a record back out in the on-disk layout. Frames are not copied;
    re-saving a record whose frame_source already lives under the target
    directory leaves them in place."""
    seq_dir = Path(root) / record.id
    seq_dir.mkdir(parents=True, exist_ok=True)
    meta = {
        "id": record.id,
        "fps": record.fps,
        "resolution": list(record.resolution),
        "animal": record.animal,
        "habitat": record.habitat,
        "behavior": record.behavior,
        "attributes": record.attributes.as_dict(),
    }
    (seq_dir / "meta.toml").write_text(dump_toml(meta))
    lines = [",".join(repr(float(v)) for v in b.as_tuple()) for b in record.track]
    (seq_dir / "groundtruth.txt").write_text("\n".join(lines) + "\n")
    return seq_dir
