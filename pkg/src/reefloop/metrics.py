"""Success/precision/normalized-precision scoring and report assembly.

Conventions (fixed here, consumed everywhere):
  * success counts a frame when IoU >= threshold, over the 21-point grid
    0.00..1.00 step 0.05; the headline AUC is the grid mean, so a perfect
    tracker scores exactly 1.0;
  * precision counts center error <= threshold over 0..50 px step 1 px, and
    the headline score is the value at 20 px;
  * normalized precision uses the per-axis gt-normalized center error over
    the grid 0.00..0.50 step 0.01, with the grid AUC as headline score;
  * dataset-level curves are unweighted means of per-sequence curves (each
    sequence counts equally regardless of length); frame-weighted averaging
    is available behind a flag.
"""

from __future__ import annotations

import logging
import statistics
from dataclasses import dataclass

from reefloop.dataset import ATTRIBUTE_CODES, SequenceRecord
from reefloop.geometry import BBox, center_error, iou, normalized_center_error

log = logging.getLogger(__name__)

SUCCESS_THRESHOLDS = tuple(i * 0.05 for i in range(21))
PRECISION_THRESHOLDS_PX = tuple(float(i) for i in range(51))
NORM_PRECISION_THRESHOLDS = tuple(i * 0.01 for i in range(51))
PRECISION_SCORE_AT_PX = 20.0

__all__ = [
    "SUCCESS_THRESHOLDS",
    "PRECISION_THRESHOLDS_PX",
    "NORM_PRECISION_THRESHOLDS",
    "TrackRun",
    "Curve",
    "FpsStats",
    "SequenceScores",
    "AggregateScores",
    "TrackerReport",
    "MetricReport",
    "success_curve",
    "precision_score",
    "normalized_precision_score",
    "score_run",
    "aggregate_runs",
    "attribute_report",
    "fps_stats",
    "build_report",
]


@dataclass(frozen=True)
class TrackRun:
    """One tracker's output over one sequence (one of N repeated runs).

    ``boxes`` holds one entry per frame; None marks a no-prediction frame.
    Frame 0 is the operator-initialized box.
    """

    sequence_id: str
    tracker_id: str
    run_index: int
    boxes: tuple[BBox | None, ...]
    confidences: tuple[float, ...] | None = None
    latencies_ms: tuple[float, ...] | None = None

    def check_against(self, gt: tuple[BBox, ...]) -> None:
        if len(self.boxes) != len(gt):
            raise ValueError(
                f"{self.tracker_id}/{self.sequence_id}: run has {len(self.boxes)} boxes "
                f"but the sequence has {len(gt)} frames"
            )
        if self.boxes and self.boxes[0] != gt[0]:
            raise ValueError(
                f"{self.tracker_id}/{self.sequence_id}: frame 0 must equal the "
                f"ground-truth initialization box"
            )


@dataclass(frozen=True)
class Curve:
    """Fraction-of-frames values over a threshold grid, plus the grid mean."""

    thresholds: tuple[float, ...]
    values: tuple[float, ...]
    auc: float

    def __post_init__(self):
        assert len(self.thresholds) == len(self.values)
        assert all(0.0 <= v <= 1.0 for v in self.values)

    @classmethod
    def from_values(cls, thresholds, values) -> "Curve":
        values = tuple(values)
        return cls(tuple(thresholds), values, sum(values) / len(values))

    def value_at(self, threshold: float) -> float:
        return self.values[self.thresholds.index(threshold)]


def _check_lengths(run: TrackRun, gt) -> None:
    if len(run.boxes) != len(gt):
        raise ValueError(f"run length {len(run.boxes)} != ground truth length {len(gt)}")


def success_curve(run: TrackRun, gt) -> Curve:
    """Fraction of frames whose IoU meets each threshold; AUC = grid mean."""
    _check_lengths(run, gt)
    n = len(gt)
    ious = [iou(p, g) for p, g in zip(run.boxes, gt)]
    values = [sum(1 for v in ious if v >= t) / n for t in SUCCESS_THRESHOLDS]
    curve = Curve.from_values(SUCCESS_THRESHOLDS, values)
    assert all(a >= b for a, b in zip(curve.values, curve.values[1:])), "success curve must be non-increasing"
    return curve


def precision_score(run: TrackRun, gt) -> tuple[Curve, float]:
    """Center-error curve over 0..50 px and the headline value at 20 px."""
    _check_lengths(run, gt)
    n = len(gt)
    errs = [center_error(p, g) for p, g in zip(run.boxes, gt)]
    values = [sum(1 for e in errs if e <= t) / n for t in PRECISION_THRESHOLDS_PX]
    curve = Curve.from_values(PRECISION_THRESHOLDS_PX, values)
    assert all(a <= b for a, b in zip(curve.values, curve.values[1:])), "precision curve must be non-decreasing"
    return curve, curve.value_at(PRECISION_SCORE_AT_PX)


def normalized_precision_score(run: TrackRun, gt) -> tuple[Curve, float]:
    """Normalized center-error curve over 0..0.5; headline score is its AUC."""
    _check_lengths(run, gt)
    n = len(gt)
    errs = [normalized_center_error(p, g) for p, g in zip(run.boxes, gt)]
    values = [sum(1 for e in errs if e <= t) / n for t in NORM_PRECISION_THRESHOLDS]
    curve = Curve.from_values(NORM_PRECISION_THRESHOLDS, values)
    assert all(a <= b for a, b in zip(curve.values, curve.values[1:]))
    return curve, curve.auc


@dataclass(frozen=True)
class FpsStats:
    mean_fps: float
    mean_latency_ms: float
    median_latency_ms: float
    p95_latency_ms: float

    @classmethod
    def from_latencies(cls, latencies_ms) -> "FpsStats":
        lat = list(latencies_ms)
        if not lat:
            raise ValueError("no latencies recorded")
        mean = sum(lat) / len(lat)
        ordered = sorted(lat)
        p95_idx = max(0, int(round(0.95 * (len(ordered) - 1))))
        return cls(
            mean_fps=1000.0 / mean if mean > 0 else float("inf"),
            mean_latency_ms=mean,
            median_latency_ms=statistics.median(ordered),
            p95_latency_ms=ordered[p95_idx],
        )


def fps_stats(run: TrackRun) -> FpsStats:
    if not run.latencies_ms:
        raise ValueError(f"{run.tracker_id}/{run.sequence_id}: no latencies recorded")
    return FpsStats.from_latencies(run.latencies_ms)


@dataclass(frozen=True)
class SequenceScores:
    """Per-(tracker, sequence) scores, averaged over the repeated runs."""

    sequence_id: str
    tracker_id: str
    n_runs: int
    success: Curve
    precision: Curve
    precision_at_20px: float
    norm_precision: Curve
    norm_precision_auc: float
    mean_fps: float | None = None


def score_run(run: TrackRun, gt) -> SequenceScores:
    succ = success_curve(run, gt)
    prec, prec20 = precision_score(run, gt)
    nprec, nprec_auc = normalized_precision_score(run, gt)
    mean_fps = fps_stats(run).mean_fps if run.latencies_ms else None
    return SequenceScores(
        sequence_id=run.sequence_id,
        tracker_id=run.tracker_id,
        n_runs=1,
        success=succ,
        precision=prec,
        precision_at_20px=prec20,
        norm_precision=nprec,
        norm_precision_auc=nprec_auc,
        mean_fps=mean_fps,
    )


def _mean_curves(curves: list[Curve]) -> Curve:
    thresholds = curves[0].thresholds
    assert all(c.thresholds == thresholds for c in curves)
    n = len(curves)
    values = tuple(sum(c.values[i] for c in curves) / n for i in range(len(thresholds)))
    return Curve(thresholds, values, sum(c.auc for c in curves) / n)


def aggregate_runs(runs: list[TrackRun], gt) -> SequenceScores:
    """Average the scores of repeated runs of one tracker on one sequence."""
    if not runs:
        raise ValueError("no runs to aggregate")
    ids = {(r.sequence_id, r.tracker_id) for r in runs}
    if len(ids) > 1:
        raise ValueError(f"refusing to average runs across {sorted(ids)}")
    per_run = [score_run(r, gt) for r in runs]
    n = len(per_run)
    fps_values = [s.mean_fps for s in per_run if s.mean_fps is not None]
    return SequenceScores(
        sequence_id=runs[0].sequence_id,
        tracker_id=runs[0].tracker_id,
        n_runs=n,
        success=_mean_curves([s.success for s in per_run]),
        precision=_mean_curves([s.precision for s in per_run]),
        precision_at_20px=sum(s.precision_at_20px for s in per_run) / n,
        norm_precision=_mean_curves([s.norm_precision for s in per_run]),
        norm_precision_auc=sum(s.norm_precision_auc for s in per_run) / n,
        mean_fps=sum(fps_values) / len(fps_values) if fps_values else None,
    )


@dataclass(frozen=True)
class AggregateScores:
    """Curves/scores averaged over a set of sequences (whole dataset or one
    attribute subset), one sequence one vote."""

    sequence_ids: tuple[str, ...]
    success: Curve
    success_auc: float
    precision: Curve
    precision_at_20px: float
    norm_precision: Curve
    norm_precision_auc: float


def _aggregate_sequences(per_seq: list[SequenceScores], weights=None) -> AggregateScores:
    if weights is None:
        weights = [1.0] * len(per_seq)
    total = sum(weights)
    norm = [w / total for w in weights]

    def wmean_curve(curves):
        thresholds = curves[0].thresholds
        values = tuple(
            sum(c.values[i] * w for c, w in zip(curves, norm)) for i in range(len(thresholds))
        )
        return Curve(thresholds, values, sum(c.auc * w for c, w in zip(curves, norm)))

    succ = wmean_curve([s.success for s in per_seq])
    prec = wmean_curve([s.precision for s in per_seq])
    nprec = wmean_curve([s.norm_precision for s in per_seq])
    return AggregateScores(
        sequence_ids=tuple(s.sequence_id for s in per_seq),
        success=succ,
        success_auc=succ.auc,
        precision=prec,
        precision_at_20px=sum(s.precision_at_20px * w for s, w in zip(per_seq, norm)),
        norm_precision=nprec,
        norm_precision_auc=nprec.auc,
    )


@dataclass(frozen=True)
class TrackerReport:
    tracker_id: str
    n_runs: int
    per_sequence: dict[str, SequenceScores]
    overall: AggregateScores
    per_attribute: dict[str, AggregateScores]
    fps: FpsStats | None


@dataclass(frozen=True)
class MetricReport:
    """Everything the report writers consume: one TrackerReport per tracker."""

    trackers: dict[str, TrackerReport]
    sequence_ids: tuple[str, ...]
    n_runs: int
    frame_weighted: bool = False


def attribute_report(
    sequences: list[SequenceRecord],
    per_seq: dict[str, SequenceScores],
    weights: dict[str, float],
) -> dict[str, AggregateScores]:
    """Aggregate per-sequence scores over each attribute's sequence subset.

    Attributes carried by no sequence are omitted with a warning.
    """
    out: dict[str, AggregateScores] = {}
    for code in ATTRIBUTE_CODES:
        subset = [s for s in sequences if s.attributes[code]]
        if not subset:
            log.warning("attribute %s: no sequences carry it; omitted from the report", code)
            continue
        scores = [per_seq[s.id] for s in subset]
        out[code] = _aggregate_sequences(scores, [weights[s.id] for s in subset])
    return out


def build_report(
    sequences: list[SequenceRecord],
    runs: dict[str, dict[str, list[TrackRun]]],
    frame_weighted: bool = False,
) -> MetricReport:
    """Assemble the full report from {tracker: {sequence: [runs...]}}.

    Every tracker must have at least one run for every sequence.
    """
    gt_by_id = {s.id: s.track for s in sequences}
    weights = {
        s.id: (float(s.frame_count) if frame_weighted else 1.0) for s in sequences
    }
    trackers: dict[str, TrackerReport] = {}
    for tracker_id, by_seq in sorted(runs.items()):
        missing = [s.id for s in sequences if not by_seq.get(s.id)]
        if missing:
            raise ValueError(f"{tracker_id}: no runs for sequences {missing}")
        per_seq = {
            seq_id: aggregate_runs(rs, gt_by_id[seq_id]) for seq_id, rs in by_seq.items()
        }
        ordered = [per_seq[s.id] for s in sequences]
        overall = _aggregate_sequences(ordered, [weights[s.id] for s in sequences])
        per_attr = attribute_report(sequences, per_seq, weights)
        all_latencies = [
            l
            for rs in by_seq.values()
            for r in rs
            if r.latencies_ms
            for l in r.latencies_ms
        ]
        fps = FpsStats.from_latencies(all_latencies) if all_latencies else None
        n_runs = max(len(rs) for rs in by_seq.values())
        trackers[tracker_id] = TrackerReport(
            tracker_id=tracker_id,
            n_runs=n_runs,
            per_sequence=per_seq,
            overall=overall,
            per_attribute=per_attr,
            fps=fps,
        )
    return MetricReport(
        trackers=trackers,
        sequence_ids=tuple(s.id for s in sequences),
        n_runs=max((t.n_runs for t in trackers.values()), default=0),
        frame_weighted=frame_weighted,
    )
