"""Report and episode emission: delimited data files plus rendered figures.

The data files are the interchange surface (stable schemas, no headers on
curve/series files); the PNG figures are rendered next to them from the
same data.
"""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path

from reefloop import plots
from reefloop.metrics import Curve, MetricReport

log = logging.getLogger(__name__)


def _curve_dict(curve: Curve) -> dict:
    return {"thresholds": list(curve.thresholds), "values": list(curve.values), "auc": curve.auc}


def _aggregate_dict(agg) -> dict:
    return {
        "sequences": list(agg.sequence_ids),
        "success": _curve_dict(agg.success),
        "success_auc": agg.success_auc,
        "precision": _curve_dict(agg.precision),
        "precision_at_20px": agg.precision_at_20px,
        "norm_precision": _curve_dict(agg.norm_precision),
        "norm_precision_auc": agg.norm_precision_auc,
    }


def report_to_dict(report: MetricReport) -> dict:
    out = {
        "sequences": list(report.sequence_ids),
        "n_runs": report.n_runs,
        "frame_weighted": report.frame_weighted,
        "trackers": {},
    }
    for tracker_id, tr in report.trackers.items():
        out["trackers"][tracker_id] = {
            "n_runs": tr.n_runs,
            "overall": _aggregate_dict(tr.overall),
            "per_attribute": {c: _aggregate_dict(a) for c, a in tr.per_attribute.items()},
            "per_sequence": {
                seq: {
                    "success_auc": s.success.auc,
                    "precision_at_20px": s.precision_at_20px,
                    "norm_precision_auc": s.norm_precision_auc,
                    "mean_fps": s.mean_fps,
                    "n_runs": s.n_runs,
                }
                for seq, s in tr.per_sequence.items()
            },
            "fps": None
            if tr.fps is None
            else {
                "mean_fps": tr.fps.mean_fps,
                "mean_latency_ms": tr.fps.mean_latency_ms,
                "median_latency_ms": tr.fps.median_latency_ms,
                "p95_latency_ms": tr.fps.p95_latency_ms,
            },
        }
    return out


def summary_rows(report: MetricReport, attrs: list[str] | None = None) -> list[dict]:
    """One flat row per tracker (or per tracker x attribute when filtered)."""
    rows = []
    for tracker_id, tr in sorted(report.trackers.items()):
        if attrs:
            for code in attrs:
                agg = tr.per_attribute.get(code)
                if agg is None:
                    log.warning("%s: attribute %s not present in the report", tracker_id, code)
                    continue
                rows.append(
                    {
                        "tracker": tracker_id,
                        "attribute": code,
                        "sequences": len(agg.sequence_ids),
                        "success_auc": agg.success_auc,
                        "precision_at_20px": agg.precision_at_20px,
                        "norm_precision_auc": agg.norm_precision_auc,
                    }
                )
        else:
            rows.append(
                {
                    "tracker": tracker_id,
                    "attribute": "ALL",
                    "sequences": len(tr.overall.sequence_ids),
                    "success_auc": tr.overall.success_auc,
                    "precision_at_20px": tr.overall.precision_at_20px,
                    "norm_precision_auc": tr.overall.norm_precision_auc,
                    "mean_fps": None if tr.fps is None else tr.fps.mean_fps,
                }
            )
    return rows


def export_report(report: MetricReport, out_dir: Path, figures: bool = True) -> dict[str, Path]:
    """Write report.json, report.csv, curves/*.csv, and the figures."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}

    json_path = out_dir / "report.json"
    json_path.write_text(json.dumps(report_to_dict(report), indent=2) + "\n")
    written["report.json"] = json_path

    rows = summary_rows(report)
    csv_path = out_dir / "report.csv"
    with open(csv_path, "w", newline="") as f:
        writer = csv.DictWriter(
            f,
            fieldnames=[
                "tracker", "attribute", "sequences",
                "success_auc", "precision_at_20px", "norm_precision_auc", "mean_fps",
            ],
        )
        writer.writeheader()
        writer.writerows(rows)
    written["report.csv"] = csv_path

    curves_dir = out_dir / "curves"
    curves_dir.mkdir(exist_ok=True)
    for tracker_id, tr in report.trackers.items():
        for metric, curve in (
            ("success", tr.overall.success),
            ("precision", tr.overall.precision),
            ("norm_precision", tr.overall.norm_precision),
        ):
            path = curves_dir / f"{tracker_id}_{metric}.csv"
            path.write_text(
                "\n".join(f"{t},{v}" for t, v in zip(curve.thresholds, curve.values)) + "\n"
            )
            written[f"curves/{path.name}"] = path

    if figures:
        for metric in ("success", "precision", "norm_precision"):
            p = out_dir / f"{metric}_plot.png"
            plots.plot_metric_curves(report, metric, p)
            written[p.name] = p
        if any(tr.fps is not None for tr in report.trackers.values()):
            p = out_dir / "fps_vs_auc.png"
            plots.plot_fps_vs_auc(report, p)
            written[p.name] = p
        if any(tr.per_attribute for tr in report.trackers.values()):
            p = out_dir / "attributes_plot.png"
            plots.plot_attribute_bars(report, p)
            written[p.name] = p
    return written


def export_episode(episode, out_dir: Path, figures: bool = True, altitude_floor: float | None = None) -> dict[str, Path]:
    """Write depth/altitude/mode series plus the timeline figures."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}

    depth_path = out_dir / "depth.csv"
    depth_path.write_text("\n".join(f"{r.t},{r.sensor_depth}" for r in episode.ticks) + "\n")
    written["depth.csv"] = depth_path

    alt_path = out_dir / "altitude.csv"
    alt_path.write_text("\n".join(f"{r.t},{r.sensor_altitude}" for r in episode.ticks) + "\n")
    written["altitude.csv"] = alt_path

    mode_path = out_dir / "modes.csv"
    mode_path.write_text("\n".join(f"{r.t},{r.mode}" for r in episode.ticks) + "\n")
    written["modes.csv"] = mode_path

    track_path = out_dir / "trajectory.csv"
    track_path.write_text(
        "\n".join(
            f"{r.t},{r.nav_position[0]},{r.nav_position[1]},{r.nav_position[2]}"
            for r in episode.ticks
        )
        + "\n"
    )
    written["trajectory.csv"] = track_path

    if figures and episode.ticks:
        p = out_dir / "depth_timeline.png"
        plots.plot_depth_timeline(episode, p, altitude_floor)
        written[p.name] = p
        p = out_dir / "mode_timeline.png"
        plots.plot_mode_timeline(episode, p)
        written[p.name] = p
    return written
