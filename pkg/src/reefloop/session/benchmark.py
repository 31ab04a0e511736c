"""Benchmark orchestration: dataset x trackers x repeated runs.

Each run initializes the tracker on frame 0 with the ground-truth box and
records the predicted box, confidence, and wall-clock latency for every
subsequent frame. Failed runs (tracker fault, bridge disconnect, timeout)
are persisted with status "failed" and excluded from aggregation; they
never enter a report as silently padded data.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from reefloop.bridge import BridgeError, bridge_connect, parse_endpoint
from reefloop.dataset import SequenceRecord
from reefloop.geometry import BBox
from reefloop.metrics import MetricReport, TrackRun, build_report
from reefloop.trackers import (
    EmptyTracker,
    Frame,
    ReplayTracker,
    StaticBoxTracker,
    TemplateTracker,
    TrackerConfig,
    TrackerError,
)

log = logging.getLogger(__name__)

BUILTIN_TRACKERS = ("ncc", "mosse", "oracle", "static", "empty")


def make_tracker(spec: str, record: SequenceRecord | None = None, timeout_ms: float = 10_000.0):
    """Build a tracker from its CLI spec string.

    ncc: fixed-template NCC matcher; mosse: the online-updating variant;
    oracle/static/empty: pixel-free diagnostics; bridge:<endpoint>: external
    tracker over the wire protocol.
    """
    if spec == "ncc":
        return TemplateTracker(TrackerConfig(kind="fixed-template"))
    if spec == "mosse":
        return TemplateTracker(TrackerConfig(kind="online-filter", template_update_rate=0.1))
    if spec == "oracle":
        if record is None:
            raise ValueError("the oracle tracker needs a sequence to replay")
        return ReplayTracker(record.track)
    if spec == "static":
        return StaticBoxTracker()
    if spec == "empty":
        return EmptyTracker()
    if spec.startswith("bridge:"):
        return bridge_connect(parse_endpoint(spec[len("bridge:") :], timeout_ms=timeout_ms))
    raise ValueError(f"unknown tracker spec {spec!r}; expected one of {BUILTIN_TRACKERS} or bridge:<endpoint>")


def iter_frames(record: SequenceRecord, needs_pixels: bool):
    """Yield Frames for a sequence; blank frames when no pixels are needed."""
    for i in range(record.frame_count):
        t = i / record.fps
        if record.frame_source is not None:
            px = np.asarray(Image.open(record.frame_path(i)))
            yield Frame(pixels=px, timestamp=t)
        elif needs_pixels:
            raise TrackerError(
                f"{record.id}: tracker needs image frames but the sequence has none on disk"
            )
        else:
            yield Frame(pixels=np.zeros((8, 8), dtype=np.uint8), timestamp=t)


@dataclass(frozen=True)
class RunRecord:
    run: TrackRun | None
    status: str  # complete | failed
    error: str | None = None


def run_once(record: SequenceRecord, tracker_spec: str, tracker_id: str, run_index: int) -> RunRecord:
    boxes: list[BBox | None] = []
    confidences: list[float] = []
    latencies: list[float] = []
    tracker = None
    try:
        tracker = make_tracker(tracker_spec, record)
        frames = iter_frames(record, getattr(tracker, "needs_pixels", False))
        for i, frame in enumerate(frames):
            if i == 0:
                t0 = time.perf_counter()
                tracker.init(frame, record.track[0])
                latency = (time.perf_counter() - t0) * 1000.0
                boxes.append(record.track[0])
                confidences.append(1.0)
                latencies.append(latency)
                continue
            out = tracker.track(frame)
            boxes.append(out.box)
            confidences.append(out.confidence)
            latencies.append(out.latency_ms)
    except (TrackerError, BridgeError) as exc:
        log.warning("%s run %d on %s failed: %s", tracker_id, run_index, record.id, exc)
        return RunRecord(run=None, status="failed", error=str(exc))
    finally:
        close = getattr(tracker, "close", None)
        if close:
            close()
    run = TrackRun(
        sequence_id=record.id,
        tracker_id=tracker_id,
        run_index=run_index,
        boxes=tuple(boxes),
        confidences=tuple(confidences),
        latencies_ms=tuple(latencies),
    )
    run.check_against(record.track)
    return RunRecord(run=run, status="complete")


class RunStore:
    """Append-only persistence for track runs under <root>/runs/<id>/."""

    def __init__(self, root: Path):
        self.root = Path(root)

    def save(self, rec: RunRecord, dataset: str, tracker_id: str, sequence_id: str, run_index: int) -> Path:
        stamp = time.strftime("%Y%m%dT%H%M%S")
        run_id = f"{tracker_id}_{sequence_id}_r{run_index:02d}_{stamp}"
        run_dir = self.root / "runs" / run_id
        i = 1
        while run_dir.exists():  # completed records are immutable
            run_dir = self.root / "runs" / f"{run_id}.{i}"
            i += 1
        run_dir.mkdir(parents=True)
        meta = {
            "dataset": dataset,
            "tracker_id": tracker_id,
            "sequence_id": sequence_id,
            "run_index": run_index,
            "timestamp": stamp,
            "status": rec.status,
            "error": rec.error,
        }
        (run_dir / "run.json").write_text(json.dumps(meta, indent=2))
        if rec.run is not None:
            lines = []
            for i, box in enumerate(rec.run.boxes):
                lines.append(
                    json.dumps(
                        {
                            "frame": i,
                            "box": None if box is None else [box.x, box.y, box.w, box.h],
                            "confidence": rec.run.confidences[i],
                            "latency_ms": rec.run.latencies_ms[i],
                        },
                        separators=(",", ":"),
                    )
                )
            (run_dir / "run.jsonl").write_text("\n".join(lines) + "\n")
        return run_dir

    def load_all(self) -> dict[str, dict[str, list[TrackRun]]]:
        """Completed runs as {tracker: {sequence: [runs...]}}; failed skipped."""
        out: dict[str, dict[str, list[TrackRun]]] = {}
        runs_dir = self.root / "runs"
        if not runs_dir.is_dir():
            return out
        for run_dir in sorted(runs_dir.iterdir()):
            meta_path = run_dir / "run.json"
            if not meta_path.is_file():
                continue
            meta = json.loads(meta_path.read_text())
            if meta.get("status") != "complete":
                continue
            boxes, confs, lats = [], [], []
            for line in (run_dir / "run.jsonl").read_text().splitlines():
                d = json.loads(line)
                boxes.append(None if d["box"] is None else BBox(*d["box"]))
                confs.append(d["confidence"])
                lats.append(d["latency_ms"])
            run = TrackRun(
                sequence_id=meta["sequence_id"],
                tracker_id=meta["tracker_id"],
                run_index=meta["run_index"],
                boxes=tuple(boxes),
                confidences=tuple(confs),
                latencies_ms=tuple(lats),
            )
            out.setdefault(meta["tracker_id"], {}).setdefault(meta["sequence_id"], []).append(run)
        return out


def run_benchmark(
    records: list[SequenceRecord],
    tracker_specs: list[str],
    n_runs: int = 5,
    store: RunStore | None = None,
    dataset_name: str = "dataset",
) -> MetricReport:
    """Evaluate every tracker over every sequence, n_runs times each."""
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    all_runs: dict[str, dict[str, list[TrackRun]]] = {}
    failed: list[str] = []
    for spec in tracker_specs:
        tracker_id = spec.replace("bridge:", "bridge-").replace("/", "_").split()[0]
        by_seq: dict[str, list[TrackRun]] = {}
        for record in records:
            runs = []
            for run_index in range(n_runs):
                rec = run_once(record, spec, tracker_id, run_index)
                if store is not None:
                    store.save(rec, dataset_name, tracker_id, record.id, run_index)
                if rec.run is not None:
                    runs.append(rec.run)
                else:
                    failed.append(f"{tracker_id}/{record.id}/r{run_index}: {rec.error}")
            if runs:
                by_seq[record.id] = runs
        if all(by_seq.get(r.id) for r in records):
            all_runs[tracker_id] = by_seq
        else:
            uncovered = [r.id for r in records if not by_seq.get(r.id)]
            log.warning(
                "%s: no successful runs on %s; tracker dropped from the report",
                tracker_id, uncovered,
            )
    if failed:
        log.warning("%d failed runs excluded from the report:\n  %s", len(failed), "\n  ".join(failed))
    return build_report(records, all_runs)
