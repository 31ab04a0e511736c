"""Figure rendering for the report/export paths (Agg backend, files only)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from reefloop.servo import Mode

METRIC_LABELS = {
    "success": ("IoU threshold", "success rate", "Success"),
    "precision": ("center error threshold (px)", "precision", "Precision"),
    "norm_precision": ("normalized center error threshold", "precision", "Normalized precision"),
}

MODE_COLORS = {
    Mode.TRACKING.value: "#2a9d48",
    Mode.INITIALIZING.value: "#e9c46a",
    Mode.MANUAL.value: "#e76f51",
    Mode.LOST.value: "#b02425",
}


def _tracker_curves(report, metric):
    for tracker_id, tr in sorted(report.trackers.items()):
        agg = tr.overall
        if metric == "success":
            yield tracker_id, agg.success, f"{tracker_id} [{agg.success_auc:.3f}]"
        elif metric == "precision":
            yield tracker_id, agg.precision, f"{tracker_id} [{agg.precision_at_20px:.3f}@20px]"
        else:
            yield tracker_id, agg.norm_precision, f"{tracker_id} [{agg.norm_precision_auc:.3f}]"


def plot_metric_curves(report, metric: str, path: Path) -> Path:
    xlabel, ylabel, title = METRIC_LABELS[metric]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for _, curve, label in _tracker_curves(report, metric):
        ax.plot(curve.thresholds, curve.values, label=label, linewidth=1.8)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(f"{title} over {len(report.sequence_ids)} sequences, {report.n_runs} run(s)")
    ax.set_ylim(0.0, 1.02)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8, loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_fps_vs_auc(report, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for tracker_id, tr in sorted(report.trackers.items()):
        if tr.fps is None:
            continue
        ax.scatter(tr.fps.mean_fps, tr.overall.success_auc, s=45)
        ax.annotate(tracker_id, (tr.fps.mean_fps, tr.overall.success_auc),
                    textcoords="offset points", xytext=(6, 4), fontsize=8)
    ax.set_xlabel("mean frame rate (fps)")
    ax.set_ylabel("success AUC")
    ax.set_title("Frame rate vs. accuracy")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_attribute_bars(report, path: Path, attrs: list[str] | None = None) -> Path:
    trackers = sorted(report.trackers)
    if not trackers:
        raise ValueError("empty report")
    codes = attrs or sorted({a for t in trackers for a in report.trackers[t].per_attribute})
    fig, ax = plt.subplots(figsize=(max(6, 0.9 * len(codes) * max(1, len(trackers))), 4.5))
    width = 0.8 / max(1, len(trackers))
    for i, tracker_id in enumerate(trackers):
        per_attr = report.trackers[tracker_id].per_attribute
        xs = [j + i * width for j in range(len(codes))]
        ys = [per_attr[c].success_auc if c in per_attr else 0.0 for c in codes]
        ax.bar(xs, ys, width=width, label=tracker_id)
    ax.set_xticks([j + 0.4 - width / 2 for j in range(len(codes))])
    ax.set_xticklabels(codes)
    ax.set_ylabel("success AUC")
    ax.set_title("Per-attribute success")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_depth_timeline(episode, path: Path, altitude_floor: float | None = None) -> Path:
    """Depth and altitude strips with intervention spans highlighted in red."""
    ts = [r.t for r in episode.ticks]
    depths = [r.sensor_depth for r in episode.ticks]
    alts = [r.sensor_altitude for r in episode.ticks]
    fig, (ax_d, ax_a) = plt.subplots(2, 1, figsize=(8, 5), sharex=True)
    ax_d.plot(ts, depths, color="#1d3557", linewidth=1.2)
    ax_d.invert_yaxis()
    ax_d.set_ylabel("depth (m)")
    ax_a.plot(ts, alts, color="#457b9d", linewidth=1.2)
    ax_a.set_ylabel("altitude (m)")
    ax_a.set_xlabel("time (s)")
    if altitude_floor is not None:
        ax_a.axhline(altitude_floor, color="#b02425", linestyle="--", linewidth=1.0, label="altitude floor")
        ax_a.legend(fontsize=8)
    for t0, t1 in episode.intervention_intervals:
        for ax in (ax_d, ax_a):
            ax.axvspan(t0, t1, color="red", alpha=0.18)
    ax_d.set_title(f"{episode.scenario_id}: vehicle depth (red: operator intervention)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_mode_timeline(episode, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(8, 1.8))
    start = None
    current = None
    spans = []
    for r in episode.ticks:
        if r.mode != current:
            if current is not None:
                spans.append((start, r.t, current))
            start, current = r.t, r.mode
    if current is not None and episode.ticks:
        spans.append((start, episode.ticks[-1].t, current))
    for t0, t1, mode in spans:
        ax.axvspan(t0, t1, color=MODE_COLORS.get(mode, "#888888"), alpha=0.85)
    ax.set_yticks([])
    ax.set_xlabel("time (s)")
    ax.set_xlim(episode.ticks[0].t if episode.ticks else 0, episode.ticks[-1].t if episode.ticks else 1)
    handles = [plt.Rectangle((0, 0), 1, 1, color=c) for c in MODE_COLORS.values()]
    ax.legend(handles, list(MODE_COLORS), fontsize=7, ncol=4, loc="upper right")
    ax.set_title("mode timeline", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
